#pragma once

// Experiment harness behind the `dab` command line: dataset generation,
// multi-trial boosting runs with per-trial reports, and communication sweeps.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "dab/boost.hpp"
#include "dab/data.hpp"
#include "dab/distboost.hpp"
#include "dab/error.hpp"
#include "dab/netsim.hpp"
#include "dab/projection.hpp"
#include "dab/rng.hpp"

namespace dab {

namespace fs = std::filesystem;

enum class AlgorithmChoice { smooth, adaboost, centralized_smooth };

inline AlgorithmChoice parse_algorithm(std::string_view s) {
  if (s == "smooth") return AlgorithmChoice::smooth;
  if (s == "adaboost") return AlgorithmChoice::adaboost;
  if (s == "centralized-smooth") return AlgorithmChoice::centralized_smooth;
  throw Error("unknown algorithm: " + std::string(s));
}

inline std::string to_string(AlgorithmChoice a) {
  switch (a) {
    case AlgorithmChoice::smooth: return "smooth";
    case AlgorithmChoice::adaboost: return "adaboost";
    case AlgorithmChoice::centralized_smooth: return "centralized-smooth";
  }
  return "?";
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// `.csv` files use the label,f1,...,fd layout; anything else is LibSVM.
inline LabeledDataset load_dataset(const fs::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".csv") return read_csv(text);
  return parse_libsvm(text);
}

/// Writes through a temporary name and renames, so readers never see a
/// partial file.
template <class Writer>
void write_atomically(const fs::path& path, Writer&& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    writer(out);
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// --- gen --------------------------------------------------------------------

struct GeneratedData {
  LabeledDataset train;
  LabeledDataset test;
};

/// Long-Servedio train and test sets with independent label noise.
inline GeneratedData generate_long_servedio(std::size_t n_train, std::size_t n_test, double noise,
                                            std::uint64_t seed) {
  detail::require(n_train >= 1 && n_test >= 1, "generate: sizes must be positive");
  return {inject_label_noise(gen_long_servedio(n_train, derive_seed(seed, 0, 0, 11)), noise,
                             derive_seed(seed, 0, 0, 12)),
          inject_label_noise(gen_long_servedio(n_test, derive_seed(seed, 0, 0, 13)), noise,
                             derive_seed(seed, 0, 0, 14))};
}

/// Writes train.csv, test.csv, train.libsvm and test.libsvm into `dir`.
inline void write_generated(const GeneratedData& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  write_atomically(dir / "train.csv", [&](std::ostream& os) { write_csv(os, data.train); });
  write_atomically(dir / "test.csv", [&](std::ostream& os) { write_csv(os, data.test); });
  write_atomically(dir / "train.libsvm", [&](std::ostream& os) { write_libsvm(os, data.train); });
  write_atomically(dir / "test.libsvm", [&](std::ostream& os) { write_libsvm(os, data.test); });
}

// --- boost ------------------------------------------------------------------

struct LongServedioSource {
  std::size_t n_train = 40000;
  std::size_t n_test = 10000;
  double noise = 0.0;
};

struct FileSource {
  fs::path train;
  std::optional<fs::path> test;  // otherwise split 4/5 from train
};

struct ExperimentSpec {
  std::variant<LongServedioSource, FileSource> dataset = LongServedioSource{};
  std::size_t k = 4;
  PartitionStrategy partition = PartitionStrategy::uniform;
  AlgorithmChoice algorithm = AlgorithmChoice::smooth;
  BoostConfig config = BoostConfig::from_beta(0.2, 0.1, 100);
  ProtocolOptions protocol;
  std::size_t trials = 1;
  fs::path output_dir;

  void validate() const {
    detail::require(trials >= 1, "experiment: trials must be at least 1");
    detail::require(k >= 1, "experiment: k must be at least 1");
    config.validate();
  }
};

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double train_error = 0.0;
  double test_error = 0.0;
  std::size_t total_words = 0;
  std::size_t total_messages = 0;
  std::size_t rounds = 0;
  double wall_ms = 0.0;
  double min_edge = 0.0;
};

struct ExperimentSummary {
  std::vector<TrialResult> trials;
  double mean_test_error = 0.0;
  double stddev_test_error = 0.0;
  double mean_total_words = 0.0;
};

inline std::pair<double, double> mean_stddev(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

inline ExperimentSummary summarize(std::vector<TrialResult> trials) {
  ExperimentSummary s;
  std::vector<double> errs, words;
  for (const auto& t : trials) {
    errs.push_back(t.test_error);
    words.push_back(static_cast<double>(t.total_words));
  }
  std::tie(s.mean_test_error, s.stddev_test_error) = mean_stddev(errs);
  s.mean_total_words = mean_stddev(words).first;
  s.trials = std::move(trials);
  return s;
}

struct TrialOutput {
  TrialResult result;
  VotedEnsemble ensemble;
  std::vector<RoundRecord> rounds;
  CommStats comm;
};

/// One trial on fixed train/test data. The partition and every random
/// stream derive from `seed`.
inline TrialOutput run_trial(const LabeledDataset& train, const LabeledDataset& test,
                             const ExperimentSpec& spec, std::size_t trial, std::uint64_t seed) {
  BoostConfig config = spec.config;
  config.seed = seed;
  const auto start = std::chrono::steady_clock::now();

  TrialOutput out;
  if (spec.algorithm == AlgorithmChoice::centralized_smooth) {
    auto r = run_smooth_boost(train, config);
    out.ensemble = std::move(r.ensemble);
    out.rounds = std::move(r.rounds);
  } else {
    const Shards shards = partition(train, spec.k, spec.partition, derive_seed(seed, 0, 0, 21));
    auto r = spec.algorithm == AlgorithmChoice::smooth
                 ? run_dist_smooth_boost(shards, config, spec.protocol)
                 : run_dist_adaboost(shards, config, spec.protocol);
    out.ensemble = std::move(r.ensemble);
    out.rounds = std::move(r.rounds);
    out.comm = std::move(r.comm);
  }
  const auto stop = std::chrono::steady_clock::now();

  auto& res = out.result;
  res.trial = trial;
  res.seed = seed;
  res.train_error = error_rate(out.ensemble, train);
  res.test_error = error_rate(out.ensemble, test);
  res.total_words = out.comm.words;
  res.total_messages = out.comm.messages;
  res.rounds = out.rounds.size();
  res.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  res.min_edge = out.rounds.empty() ? 0.0 : out.rounds.front().edge;
  for (const auto& r : out.rounds) res.min_edge = std::min(res.min_edge, r.edge);
  return out;
}

inline void write_trials_csv(std::ostream& os, std::span<const TrialResult> trials) {
  os << "trial,seed,train_error,test_error,total_words,total_messages,rounds,min_edge,wall_ms\n";
  for (const auto& t : trials) {
    os << t.trial << ',' << t.seed << ',';
    detail::write_number(os, t.train_error);
    os << ',';
    detail::write_number(os, t.test_error);
    os << ',' << t.total_words << ',' << t.total_messages << ',' << t.rounds << ',';
    detail::write_number(os, t.min_edge);
    os << ',';
    detail::write_number(os, t.wall_ms);
    os << '\n';
  }
}

inline std::vector<TrialResult> read_trials_csv(std::string_view text) {
  std::vector<TrialResult> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = detail::trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (++line_no == 1 || line.empty()) continue;
    std::vector<std::string_view> c;
    while (true) {
      const auto p = line.find(',');
      c.push_back(line.substr(0, p));
      if (p == std::string_view::npos) break;
      line.remove_prefix(p + 1);
    }
    if (c.size() != 9) throw ParseError(line_no, "expected 9 columns");
    TrialResult t;
    std::size_t seed = 0;
    bool ok = detail::parse_index(c[0], t.trial) && detail::parse_index(c[1], seed) &&
              detail::parse_double(c[2], t.train_error) && detail::parse_double(c[3], t.test_error) &&
              detail::parse_index(c[4], t.total_words) && detail::parse_index(c[5], t.total_messages) &&
              detail::parse_index(c[6], t.rounds) && detail::parse_double(c[7], t.min_edge) &&
              detail::parse_double(c[8], t.wall_ms);
    if (!ok) throw ParseError(line_no, "malformed trial row");
    t.seed = seed;
    out.push_back(t);
  }
  return out;
}

/// Runs every trial (seed = master + trial) and writes, under the output
/// directory, trial_<i>/{ensemble,rounds,comm,comm_summary}.csv plus
/// trials.csv.
inline ExperimentSummary run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec) throw Error("cannot create " + spec.output_dir.string() + ": " + ec.message());

  std::optional<LabeledDataset> fixed_train, fixed_test;
  if (const auto* files = std::get_if<FileSource>(&spec.dataset)) {
    auto train = load_dataset(files->train);
    if (files->test) {
      fixed_test = load_dataset(*files->test);
      detail::require(fixed_test->dim() == train.dim(), "experiment: train/test dimensions differ");
      fixed_train = std::move(train);
    } else {
      auto [tr, te] = split_train_test(train, 0.8, spec.config.seed);
      fixed_train = std::move(tr);
      fixed_test = std::move(te);
    }
  }

  std::vector<TrialResult> results;
  for (std::size_t trial = 0; trial < spec.trials; ++trial) {
    const std::uint64_t seed = spec.config.seed + trial;
    LabeledDataset train, test;
    if (fixed_train) {
      train = *fixed_train;
      test = *fixed_test;
    } else {
      const auto& ls = std::get<LongServedioSource>(spec.dataset);
      auto data = generate_long_servedio(ls.n_train, ls.n_test, ls.noise, seed);
      train = std::move(data.train);
      test = std::move(data.test);
    }
    auto out = run_trial(train, test, spec, trial, seed);

    const fs::path dir = spec.output_dir / ("trial_" + std::to_string(trial));
    fs::create_directories(dir);
    write_atomically(dir / "ensemble.csv", [&](std::ostream& os) { write_ensemble_csv(os, out.ensemble); });
    write_atomically(dir / "rounds.csv", [&](std::ostream& os) { write_rounds_csv(os, out.rounds); });
    write_atomically(dir / "comm.csv", [&](std::ostream& os) { write_comm_csv(os, out.comm); });
    write_atomically(dir / "comm_summary.csv", [&](std::ostream& os) { write_comm_summary(os, out.comm); });
    results.push_back(out.result);
  }
  write_atomically(spec.output_dir / "trials.csv",
                   [&](std::ostream& os) { write_trials_csv(os, results); });
  return summarize(std::move(results));
}

inline std::string summary_line(const ExperimentSpec& spec, const ExperimentSummary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << "algo=" << to_string(spec.algorithm)
     << " k=" << spec.k << " trials=" << s.trials.size()
     << " test_error=" << 100.0 * s.mean_test_error << "% +- " << 100.0 * s.stddev_test_error
     << "% total_words=" << std::setprecision(0) << s.mean_total_words;
  return os.str();
}

// --- commscan ---------------------------------------------------------------

struct CommScanRow {
  std::size_t n = 0;
  std::size_t k = 0;
  double eps = 0.0;
  double words = 0.0;
  std::size_t rounds = 0;
};

/// Heavy-tailed positive weights (log-normal, sigma 2), normalized.
inline std::vector<double> lognormal_weights(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(n);
  for (auto& x : w) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::acos(-1.0) * u2);
    x = std::exp(2.0 * z);
  }
  renormalize(w);
  return w;
}

/// Contiguous near-equal chunks.
inline ShardedWeights shard_evenly(std::span<const double> flat, std::size_t k) {
  std::vector<std::size_t> sizes(k);
  for (std::size_t j = 0; j < k; ++j) sizes[j] = flat.size() / k + (j < flat.size() % k ? 1 : 0);
  return ShardedWeights::split(flat, sizes);
}

/// Mean words of one distributed projection over `reps` random instances.
inline std::vector<CommScanRow> commscan_projection(std::span<const std::size_t> ns,
                                                    std::span<const std::size_t> ks,
                                                    std::span<const double> epss, std::size_t reps,
                                                    std::uint64_t seed,
                                                    MedianMethod method = MedianMethod::elimination) {
  if (ns.empty() || ks.empty() || epss.empty()) throw Error("commscan: empty sweep");
  detail::require(reps >= 1, "commscan: reps must be positive");
  std::vector<CommScanRow> rows;
  for (std::size_t n : ns) {
    for (std::size_t k : ks) {
      detail::require(k >= 1 && k <= n, "commscan: need 1 <= k <= n");
      for (double eps : epss) {
        double total = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
          const auto w = lognormal_weights(n, derive_seed(seed, n, k, r));
          Network net(k);
          ProjectionOptions opt;
          opt.median.method = method;
          opt.median.seed = derive_seed(seed, n, k, 1000 + r);
          distributed_project(shard_evenly(w, k), eps, net, opt);
          total += static_cast<double>(net.stats().words);
        }
        rows.push_back({n, k, eps, total / static_cast<double>(reps), 1});
      }
    }
  }
  return rows;
}

/// Full distributed smooth boosting on Long-Servedio data of size n.
inline std::vector<CommScanRow> commscan_protocol(std::span<const std::size_t> ns,
                                                  std::span<const std::size_t> ks,
                                                  std::span<const double> epss,
                                                  std::size_t rounds, std::size_t sample_budget,
                                                  std::uint64_t seed,
                                                  const GlobalWeightsObserver& observer = {}) {
  if (ns.empty() || ks.empty() || epss.empty()) throw Error("commscan: empty sweep");
  std::vector<CommScanRow> rows;
  for (std::size_t n : ns) {
    const auto ds = inject_label_noise(gen_long_servedio(n, derive_seed(seed, n, 0, 31)), 0.01,
                                       derive_seed(seed, n, 0, 32));
    for (std::size_t k : ks) {
      const Shards shards = partition(ds, k, PartitionStrategy::uniform, derive_seed(seed, n, k, 33));
      for (double eps : epss) {
        BoostConfig config = BoostConfig::from_beta(0.2, eps, rounds);
        config.sample_budget = sample_budget;
        config.seed = seed;
        const auto report = run_dist_smooth_boost(shards, config, {}, observer);
        rows.push_back({n, k, eps, static_cast<double>(report.comm.words), report.comm.rounds});
      }
    }
  }
  return rows;
}

/// `n,k,eps,words` rows; protocol sweeps add a `rounds` column.
inline void write_commscan_csv(std::ostream& os, std::span<const CommScanRow> rows,
                               bool with_rounds) {
  os << "n,k,eps,words" << (with_rounds ? ",rounds" : "") << '\n';
  for (const auto& r : rows) {
    os << r.n << ',' << r.k << ',';
    detail::write_number(os, r.eps);
    os << ',';
    detail::write_number(os, r.words);
    if (with_rounds) os << ',' << r.rounds;
    os << '\n';
  }
}

}  // namespace dab
