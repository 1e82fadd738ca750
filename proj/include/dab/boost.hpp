#pragma once

// Centralized smooth boosting: multiplicative weights, relative-entropy
// projection onto epsilon-smooth distributions, and an unweighted final vote.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "dab/data.hpp"
#include "dab/error.hpp"
#include "dab/weaklearn.hpp"

namespace dab {

inline constexpr double kSumTolerance = 1e-9;

/// Nonnegative weights summing to one.
class Distribution {
 public:
  Distribution() = default;

  /// Validates nonnegativity and unit sum (within kSumTolerance).
  explicit Distribution(std::vector<double> weights) : weights_(std::move(weights)) {
    detail::require(!weights_.empty(), "Distribution: empty");
    double sum = 0.0;
    for (double w : weights_) {
      detail::require(w >= 0.0, "Distribution: negative weight");
      sum += w;
    }
    detail::require(std::abs(sum - 1.0) <= kSumTolerance, "Distribution: weights do not sum to 1");
  }

  static Distribution uniform(std::size_t n) {
    detail::require(n > 0, "Distribution::uniform: n must be positive");
    return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  double max() const { return *std::max_element(weights_.begin(), weights_.end()); }

  /// max_i w_i <= 1/(eps*n) + tol.
  bool is_smooth(double epsilon, double tol = kSumTolerance) const {
    return max() <= smooth_cap(epsilon, size()) + tol;
  }

  static double smooth_cap(double epsilon, std::size_t n) {
    return 1.0 / (epsilon * static_cast<double>(n));
  }

 private:
  std::vector<double> weights_;
};

/// Divides by the sum so the vector totals exactly one (up to rounding).
inline void renormalize(std::span<double> w) {
  double sum = 0.0;
  for (double x : w) sum += x;
  detail::require(sum > 0.0, "renormalize: zero mass");
  for (double& x : w) x /= sum;
}

struct BoostConfig {
  double gamma = 0.15;
  double beta = 0.2;
  double epsilon = 0.1;
  std::optional<std::size_t> rounds;  // nullopt: derived from gamma and epsilon
  std::size_t sample_budget = 2000;
  std::uint64_t seed = 0;

  /// gamma = (1/2)(1/2 - beta), as used when the weak learner is agnostic.
  static BoostConfig from_beta(double beta, double epsilon,
                               std::optional<std::size_t> rounds = std::nullopt) {
    BoostConfig c;
    c.beta = beta;
    c.gamma = 0.5 * (0.5 - beta);
    c.epsilon = epsilon;
    c.rounds = rounds;
    return c;
  }

  /// ceil(2 ln(1/eps) / gamma^2) + 1.
  static std::size_t auto_rounds(double gamma, double epsilon) {
    return static_cast<std::size_t>(std::ceil(2.0 * std::log(1.0 / epsilon) / (gamma * gamma))) + 1;
  }

  std::size_t total_rounds() const { return rounds ? *rounds : auto_rounds(gamma, epsilon); }

  void validate() const {
    detail::require(gamma > 0.0 && gamma <= 0.5, "BoostConfig: gamma must be in (0, 1/2]");
    detail::require(beta >= 0.0 && beta < 0.5, "BoostConfig: beta must be in [0, 1/2)");
    detail::require(epsilon > 0.0 && epsilon < 1.0, "BoostConfig: epsilon must be in (0, 1)");
    detail::require(!rounds || *rounds > 0, "BoostConfig: rounds must be positive");
    detail::require(sample_budget > 0, "BoostConfig: sample budget must be positive");
  }
};

struct RoundRecord {
  std::size_t round = 0;
  double edge = 0.0;        // 1/2 - err_{D^(t)}(h^(t))
  double z = 1.0;           // normalization factor of the weight update
  double max_weight = 0.0;  // max coordinate of D^(t+1)
  double train_err_so_far = 0.0;
};

struct MwUpdate {
  Distribution dist;
  double z = 1.0;
};

/// Scales weight i by (1 - gamma) where losses[i] == 1 (h was correct on i)
/// and renormalizes. Z is the pre-normalization mass.
inline MwUpdate mw_update(const Distribution& d, std::span<const int> losses, double gamma) {
  if (losses.size() != d.size()) throw Error("mw_update: length mismatch");
  detail::require(gamma > 0.0 && gamma <= 0.5, "mw_update: gamma must be in (0, 1/2]");
  std::vector<double> w(d.weights().begin(), d.weights().end());
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    detail::require(losses[i] == 0 || losses[i] == 1, "mw_update: losses must be 0 or 1");
    if (losses[i] == 1) w[i] *= 1.0 - gamma;
    z += w[i];
  }
  for (double& x : w) x /= z;
  renormalize(w);
  return {Distribution(std::move(w)), z};
}

namespace detail {

// Relative slack on `value * scale > cap`, shared with the distributed
// projection so both make the same clipping decisions.
inline constexpr double kClipTolerance = 1e-12;

inline bool exceeds_cap(double scaled, double cap) { return scaled > cap * (1.0 + kClipTolerance); }

inline void check_projectable(std::span<const double> w, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error("project_smooth: epsilon must be in (0, 1]");
  std::size_t positive = 0;
  for (double x : w) {
    if (x < 0.0) throw Error("project_smooth: negative weight");
    if (x > 0.0) ++positive;
  }
  const double cap = 1.0 / (epsilon * static_cast<double>(w.size()));
  if (static_cast<double>(positive) * cap < 1.0 - kSumTolerance) {
    throw Error("project_smooth: too few positive weights for an epsilon-smooth projection");
  }
}

}  // namespace detail

/// Relative-entropy projection onto {D : max_i D(i) <= 1/(eps n)}: clip the
/// largest m coordinates to the cap and rescale the rest to 1 - m/(eps n),
/// for the least feasible m.
inline Distribution project_smooth(const Distribution& d, double epsilon) {
  const auto p = d.weights();
  detail::check_projectable(p, epsilon);
  const std::size_t n = p.size();
  const double cap = Distribution::smooth_cap(epsilon, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });

  // rest[m] = mass of all but the m largest, summed from the small end.
  std::vector<double> rest(n + 1, 0.0);
  for (std::size_t m = n; m-- > 0;) rest[m] = rest[m + 1] + p[order[m]];

  std::size_t clipped = n;
  double scale = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double remaining = 1.0 - static_cast<double>(m) * cap;
    if (rest[m] == 0.0) {
      clipped = m;
      break;
    }
    const double s = remaining / rest[m];
    if (!detail::exceeds_cap(p[order[m]] * s, cap)) {
      clipped = m;
      scale = s;
      break;
    }
  }

  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    out[order[r]] = r < clipped ? cap : p[order[r]] * scale;
  }
  renormalize(out);
  return Distribution(std::move(out));
}

/// Fraction of rows the ensemble misclassifies.
inline double error_rate(const VotedEnsemble& e, const LabeledDataset& ds) {
  if (ds.empty()) throw Error("error_rate: empty dataset");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (predict_ensemble(e, ds.row(i)) != ds.label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(ds.size());
}

template <class L>
concept WeakLearner = requires(L learner, const LabeledDataset& ds, std::span<const double> w) {
  { learner(ds, w) } -> std::convertible_to<Stump>;
};

struct ExactStumpLearner {
  Stump operator()(const LabeledDataset& ds, std::span<const double> w) const {
    return train_stump(ds, w);
  }
};

struct BoostResult {
  VotedEnsemble ensemble;
  std::vector<RoundRecord> rounds;
};

/// Called with (t, D^(t+1)) after each round's projection.
using DistributionObserver = std::function<void(std::size_t, std::span<const double>)>;

namespace detail {

// Running unweighted vote tally for the train_err_so_far column.
class VoteTally {
 public:
  explicit VoteTally(std::size_t n) : votes_(n, 0.0) {}

  void add(std::span<const int> predictions, double alpha = 1.0) {
    for (std::size_t i = 0; i < votes_.size(); ++i) votes_[i] += alpha * predictions[i];
  }

  std::size_t mistakes(std::span<const int> labels) const {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < votes_.size(); ++i) {
      if ((votes_[i] >= 0.0 ? 1 : -1) != labels[i]) ++wrong;
    }
    return wrong;
  }

 private:
  std::vector<double> votes_;
};

}  // namespace detail

/// Centralized smooth boosting. Rounds whose edge falls below gamma are
/// recorded and kept.
template <WeakLearner Learner = ExactStumpLearner>
BoostResult run_smooth_boost(const LabeledDataset& ds, const BoostConfig& config,
                             Learner learner = {}, const DistributionObserver& observer = {}) {
  if (ds.empty()) throw Error("run_smooth_boost: empty dataset");
  config.validate();
  const std::size_t rounds = config.total_rounds();
  const std::size_t n = ds.size();

  BoostResult result;
  Distribution dist = Distribution::uniform(n);
  detail::VoteTally tally(n);
  std::vector<int> losses(n);
  std::vector<int> predictions(n);

  for (std::size_t t = 1; t <= rounds; ++t) {
    const Stump h = learner(ds, dist.weights());
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      predictions[i] = predict(h, ds.row(i));
      losses[i] = predictions[i] == ds.label(i) ? 1 : 0;
      if (!losses[i]) err += dist[i];
    }
    result.ensemble.add(h);
    tally.add(predictions);

    auto update = mw_update(dist, losses, config.gamma);
    dist = project_smooth(update.dist, config.epsilon);
    if (observer) observer(t, dist.weights());

    result.rounds.push_back({t, 0.5 - err, update.z, dist.max(),
                             static_cast<double>(tally.mistakes(ds.labels())) /
                                 static_cast<double>(n)});
  }
  return result;
}

inline void write_rounds_csv(std::ostream& os, std::span<const RoundRecord> rounds) {
  os << "round,edge,z,max_weight,train_err_so_far\n";
  for (const auto& r : rounds) {
    os << r.round << ',';
    detail::write_number(os, r.edge);
    os << ',';
    detail::write_number(os, r.z);
    os << ',';
    detail::write_number(os, r.max_weight);
    os << ',';
    detail::write_number(os, r.train_err_so_far);
    os << '\n';
  }
}

}  // namespace dab
