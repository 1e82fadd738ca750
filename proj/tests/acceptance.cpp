// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and time limits are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dab/boost.hpp"
#include "dab/data.hpp"
#include "dab/distboost.hpp"
#include "dab/experiment.hpp"
#include "dab/projection.hpp"
#include "dab/rng.hpp"
#include "dab/weaklearn.hpp"

namespace {

constexpr double kProjectionTol = 1e-9;
constexpr double kEquivalenceTol = 1e-9;
constexpr double kSmoothTol = 1e-9;
constexpr double kGridStep = 0.005;
// Feasible grid points on the cap face sit up to one step below it per
// capped coordinate, so the free coordinate can move by two steps.
constexpr double kGridResolution = 2 * kGridStep;
constexpr double kMinNoiseGapPoints = 5.0;
constexpr double kMaxScalingConstant = 8.0;
constexpr double kMaxGrowthRatio = 8.0;
constexpr double kStumpTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Every post-projection distribution of every smooth-boosting run below.
struct SmoothnessAudit {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;
  double worst_sum_error = 0.0;

  void check(std::span<const double> w, double epsilon) {
    ++checked;
    const double cap = dab::Distribution::smooth_cap(epsilon, w.size());
    double sum = 0.0;
    bool ok = true;
    for (double x : w) {
      sum += x;
      worst_excess = std::max(worst_excess, x - cap);
      ok = ok && x >= 0.0 && x <= cap + kSmoothTol;
    }
    worst_sum_error = std::max(worst_sum_error, std::abs(sum - 1.0));
    ok = ok && std::abs(sum - 1.0) <= kSmoothTol;
    if (!ok) ++violations;
  }

  auto observer(double epsilon) {
    return [this, epsilon](std::size_t, std::span<const double> w) { check(w, epsilon); };
  }
};

SmoothnessAudit audit;

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

dab::ShardedWeights random_shards(dab::Rng& rng, const std::vector<double>& flat, std::size_t k) {
  dab::ShardedWeights sw;
  sw.shards.resize(k);
  for (double v : flat) sw.shards[rng.below(k)].push_back(v);
  return sw;
}

// 1 ---------------------------------------------------------------------------
Verdict projection_oracle() {
  dab::Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(1024);
    const std::size_t k = 1 + rng.below(16);
    const double eps = 1.0 - 0.95 * rng.uniform();  // (0.05, 1]
    std::vector<double> w(n);
    switch (trial % 4) {
      case 0:
        for (auto& x : w) x = std::exp(8.0 * rng.uniform());
        break;
      case 1:  // duplicate-heavy
        for (auto& x : w) x = 1.0 + static_cast<double>(rng.below(3));
        break;
      case 2:  // uniform
        std::fill(w.begin(), w.end(), 1.0);
        break;
      default:
        for (auto& x : w) x = rng.bernoulli(0.03) ? 1000.0 : rng.uniform();
    }
    dab::renormalize(w);
    const auto sw = random_shards(rng, w, k);
    const auto central = dab::project_smooth(dab::Distribution(sw.flatten()), eps);
    dab::ProjectionOptions opt;
    if (trial % 2) opt.median = {dab::MedianMethod::quickselect, static_cast<std::uint64_t>(trial)};
    dab::Network net(k);
    const auto got = dab::distributed_project(sw, eps, net, opt).flatten();
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got[i] - central[i]));
  }
  return {worst <= kProjectionTol, fmt("500 instances, max |diff| = %.3g (tol %.0e)", worst, kProjectionTol)};
}

// 2 ---------------------------------------------------------------------------
Verdict median_oracle() {
  dab::Rng rng(202);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(500);
    const std::size_t k = 1 + rng.below(16);
    const std::size_t levels = trial % 2 ? 1 + rng.below(8) : 1u << 30;
    std::vector<double> flat(n);
    for (auto& x : flat) x = static_cast<double>(rng.below(levels));
    const auto sw = random_shards(rng, flat, k);
    std::sort(flat.begin(), flat.end());
    const double expected = flat[(n + 1) / 2 - 1];
    dab::Network net(k);
    if (dab::distributed_median(sw, net) != expected) ++mismatches;
  }
  return {mismatches == 0, fmt("1000 multisets, %zu mismatches", mismatches)};
}

// 3 ---------------------------------------------------------------------------
double relative_entropy(std::span<const double> p, std::span<const double> q) {
  double re = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) re += p[i] * std::log(p[i] / q[i]);
  }
  return re;
}

Verdict re_minimizer() {
  dab::Rng rng(303);
  double worst_dist = 0.0, worst_gap = -kInf;
  const int steps = static_cast<int>(std::lround(1.0 / kGridStep));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> d(3);
    for (auto& x : d) x = std::exp(6.0 * rng.uniform());
    dab::renormalize(d);
    const double eps = 0.3 + 0.65 * rng.uniform();
    const double cap = 1.0 / (3.0 * eps);
    const auto proj = dab::project_smooth(dab::Distribution(d), eps);

    double best = kInf;
    std::vector<double> argmin;
    for (int a = 0; a <= steps; ++a) {
      for (int b = 0; a + b <= steps; ++b) {
        const std::vector<double> q{a * kGridStep, b * kGridStep, (steps - a - b) * kGridStep};
        if (*std::max_element(q.begin(), q.end()) > cap) continue;
        const double re = relative_entropy(q, d);
        if (re < best) {
          best = re;
          argmin = q;
        }
      }
    }
    if (argmin.empty()) return {false, "empty feasible grid"};
    for (std::size_t i = 0; i < 3; ++i) worst_dist = std::max(worst_dist, std::abs(proj[i] - argmin[i]));
    worst_gap = std::max(worst_gap, relative_entropy(proj.weights(), d) - best);
  }
  const bool ok = worst_dist <= kGridResolution && worst_gap <= 1e-12;
  return {ok, fmt("50 distributions, max |proj - grid argmin| = %.4f (resolution %.3f), "
                  "RE(proj) - min grid RE <= %.2g",
                  worst_dist, kGridResolution, worst_gap)};
}

// 4 ---------------------------------------------------------------------------
Verdict centralized_equivalence() {
  double worst = 0.0;
  std::size_t stump_mismatches = 0, runs = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto ds = dab::inject_label_noise(dab::gen_long_servedio(1500, seed), 0.02, seed + 100);
    auto config = dab::BoostConfig::from_beta(0.2, 0.1, 40);
    config.seed = seed;
    std::vector<std::vector<double>> central;
    const auto ref = dab::run_smooth_boost(ds, config, dab::ExactStumpLearner{},
                                           [&](std::size_t, std::span<const double> w) {
                                             audit.check(w, config.epsilon);
                                             central.emplace_back(w.begin(), w.end());
                                           });
    for (std::size_t k : {1u, 4u}) {
      ++runs;
      const auto shards = dab::partition(ds, k, dab::PartitionStrategy::uniform, seed);
      dab::ProtocolOptions opt;
      opt.full_data = true;
      std::size_t t = 0;
      const auto got = dab::run_dist_smooth_boost(
          shards, config, opt, [&](std::size_t, std::span<const double> w) {
            audit.check(w, config.epsilon);
            std::size_t pos = 0;
            for (const auto& origin : shards.origin) {
              for (std::size_t idx : origin) worst = std::max(worst, std::abs(w[pos++] - central[t][idx]));
            }
            ++t;
          });
      if (got.ensemble.members != ref.ensemble.members) ++stump_mismatches;
    }
  }
  return {stump_mismatches == 0 && worst <= kEquivalenceTol,
          fmt("%zu runs (k in {1,4}), %zu hypothesis-sequence mismatches, max weight diff %.3g",
              runs, stump_mismatches, worst)};
}

// 5 ---------------------------------------------------------------------------
Verdict conditional_guarantee() {
  dab::Rng rng(505);
  std::size_t runs = 0, qualifying = 0, successes = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 4 + rng.below(6);
    const std::size_t relevant = std::min<std::size_t>(dim, 1 + 2 * rng.below(3));  // 1, 3 or 5
    const std::size_t n = 50 + rng.below(350);
    dab::LabeledDataset ds(dim);
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < n; ++i) {
      double vote = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        x[j] = rng.bernoulli(0.5) ? 1.0 : -1.0;
        if (j < relevant) vote += x[j];
      }
      ds.push_back(x, vote > 0 ? 1 : -1);
    }
    dab::BoostConfig config;
    config.gamma = 0.15;
    config.epsilon = 0.05 + 0.25 * rng.uniform();
    const auto r = dab::run_smooth_boost(ds, config, dab::ExactStumpLearner{}, audit.observer(config.epsilon));
    ++runs;
    if (r.ensemble.size() != dab::BoostConfig::auto_rounds(config.gamma, config.epsilon)) {
      return {false, "round count differs from the automatic schedule"};
    }
    const bool edges_ok =
        std::all_of(r.rounds.begin(), r.rounds.end(), [&](const auto& rec) { return rec.edge >= config.gamma; });
    if (!edges_ok) continue;
    ++qualifying;
    if (dab::error_rate(r.ensemble, ds) < config.epsilon) ++successes;
  }
  return {qualifying > 0 && successes == qualifying,
          fmt("qualifying %zu/%zu runs (%.0f%%), training error < eps in %zu/%zu", qualifying, runs,
              100.0 * static_cast<double>(qualifying) / static_cast<double>(runs), successes, qualifying)};
}

// 7 ---------------------------------------------------------------------------
Verdict noise_robustness() {
  std::vector<double> smooth_err, ada_err;
  const auto config_for = [](std::uint64_t seed) {
    auto c = dab::BoostConfig::from_beta(0.2, 0.1, 100);
    c.seed = seed;
    return c;
  };
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const std::uint64_t seed = 7000 + trial;
    const auto data = dab::generate_long_servedio(40000, 10000, 0.01, seed);
    const auto shards = dab::partition(data.train, 4, dab::PartitionStrategy::uniform, dab::derive_seed(seed, 0, 0, 21));
    const auto config = config_for(seed);
    const auto smooth = dab::run_dist_smooth_boost(shards, config, {}, audit.observer(config.epsilon));
    const auto ada = dab::run_dist_adaboost(shards, config);
    smooth_err.push_back(dab::error_rate(smooth.ensemble, data.test));
    ada_err.push_back(dab::error_rate(ada.ensemble, data.test));
  }
  std::sort(smooth_err.begin(), smooth_err.end());
  std::sort(ada_err.begin(), ada_err.end());
  const double smooth_med = 100.0 * smooth_err[2], ada_med = 100.0 * ada_err[2];
  return {ada_med - smooth_med >= kMinNoiseGapPoints,
          fmt("median test error: smooth %.2f%%, adaboost %.2f%%, gap %.2f points (need >= %.0f)", smooth_med,
              ada_med, ada_med - smooth_med, kMinNoiseGapPoints)};
}

// 8 ---------------------------------------------------------------------------
Verdict communication_scaling() {
  std::vector<std::size_t> ns;
  for (std::size_t e = 6; e <= 14; ++e) ns.push_back(std::size_t{1} << e);
  const std::vector<std::size_t> ks{8};
  const std::vector<double> eps{0.1};
  const auto proj = dab::commscan_projection(ns, ks, eps, 5, 808);
  double c = 0.0;
  for (const auto& row : proj) {
    const double lg = std::log2(static_cast<double>(row.n));
    c = std::max(c, row.words / (static_cast<double>(row.k) * lg * lg));
  }
  const double growth = proj.back().words / proj.front().words;

  constexpr std::size_t kRounds = 10;
  const auto protocol = dab::commscan_protocol(ns, ks, eps, kRounds, 2000, 809, audit.observer(eps[0]));
  bool rounds_ok = true;
  for (const auto& row : protocol) rounds_ok = rounds_ok && row.rounds == kRounds;

  return {c <= kMaxScalingConstant && growth < kMaxGrowthRatio && rounds_ok,
          fmt("c = max words/(k log2^2 n) = %.2f (<= %.0f), words(2^14)/words(2^6) = %.2f (< %.0f), "
              "protocol rounds == T for all n: %s",
              c, kMaxScalingConstant, growth, kMaxGrowthRatio, rounds_ok ? "yes" : "no")};
}

// 9 ---------------------------------------------------------------------------
double brute_force_min_error(const dab::LabeledDataset& ds, const std::vector<double>& w) {
  double best = kInf;
  for (std::size_t f = 0; f < ds.dim(); ++f) {
    std::vector<double> values;
    for (std::size_t i = 0; i < ds.size(); ++i) values.push_back(ds.row(i)[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> thresholds{-kInf, kInf};
    for (std::size_t j = 0; j + 1 < values.size(); ++j) thresholds.push_back((values[j] + values[j + 1]) / 2);
    for (double t : thresholds) {
      for (int pol : {1, -1}) {
        double err = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          if ((ds.row(i)[f] > t ? pol : -pol) != ds.label(i)) err += w[i];
        }
        best = std::min(best, err);
      }
    }
  }
  return best;
}

Verdict stump_exactness() {
  dab::Rng rng(909);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    const std::size_t d = 1 + rng.below(5);
    const std::size_t levels = trial % 2 ? 2 + rng.below(5) : 1u << 20;
    dab::LabeledDataset ds(d);
    std::vector<double> x(d), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x) v = static_cast<double>(rng.below(levels));
      ds.push_back(x, rng.bernoulli(0.5) ? 1 : -1);
      w[i] = rng.uniform() + 1e-3;
    }
    const auto h = dab::train_stump(ds, w);
    worst = std::max(worst, std::abs(dab::weighted_error(h, ds, w) - brute_force_min_error(ds, w)));
  }
  return {worst <= kStumpTol, fmt("200 instances, max |err - brute force| = %.3g", worst)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no limit
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  std::vector<Criterion> criteria{
      {1, "projection oracle equivalence", 10, projection_oracle},
      {2, "median oracle equivalence", 5, median_oracle},
      {3, "relative-entropy minimizer", 30, re_minimizer},
      {4, "centralized/distributed equivalence", 0, centralized_equivalence},
      {5, "conditional training-error guarantee", 0, conditional_guarantee},
      {7, "noise robustness", 120, noise_robustness},
      {8, "communication scaling", 60, communication_scaling},
      {9, "weak-learner exactness", 10, stump_exactness},
  };

  std::vector<std::string> lines(10);
  bool all = true;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && s > c.limit_s) {
      v.pass = false;
      v.detail += fmt(" [over time limit %.0fs]", c.limit_s);
    }
    all = all && v.pass;
    lines[c.id] = fmt("%s %d %s: ", v.pass ? "PASS" : "FAIL", c.id, c.name) + v.detail + fmt(" (%.2fs)", s);
  }

  const bool smooth_ok = audit.violations == 0 && audit.checked > 0;
  all = all && smooth_ok;
  lines[6] = fmt("%s 6 smoothness invariant: %zu distributions from runs 4, 5, 7, 8: %zu violations, "
                 "max excess over cap %.3g, max |sum - 1| %.3g",
                 smooth_ok ? "PASS" : "FAIL", audit.checked, audit.violations, audit.worst_excess,
                 audit.worst_sum_error);

  for (int id = 1; id <= 9; ++id) std::printf("%s\n", lines[id].c_str());
  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
