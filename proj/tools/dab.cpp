// dab: distributed agnostic boosting experiments.
//
//   dab gen      --n 40000 --noise 0.01 --seed 7 --out data/
//   dab boost    --ls-n 40000 --noise 0.01 --algo smooth --k 4 --trials 5
//   dab commscan --n-exp 6:14 --k 8 --eps 0.1

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dab/experiment.hpp"

namespace {

std::string default_output_dir() {
  if (const char* env = std::getenv("DAB_OUTPUT_DIR"); env && *env) return env;
  return "dab_out";
}

// "6:14" -> {2^6, ..., 2^14}
std::vector<std::size_t> powers_of_two(const std::string& range) {
  const auto colon = range.find(':');
  const std::size_t lo = std::stoul(range.substr(0, colon));
  const std::size_t hi = colon == std::string::npos ? lo : std::stoul(range.substr(colon + 1));
  if (lo > hi || hi > 40) throw CLI::ValidationError("--n-exp", "expected LO:HI with LO <= HI <= 40");
  std::vector<std::size_t> out;
  for (std::size_t e = lo; e <= hi; ++e) out.push_back(std::size_t{1} << e);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed agnostic boosting simulator"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate Long-Servedio train/test files");
  std::size_t gen_n = 0;
  std::optional<std::size_t> gen_test_n;
  double gen_noise = 0.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out = default_output_dir();
  gen->add_option("--n", gen_n, "Training examples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--test-n", gen_test_n, "Test examples (default n/4)")->check(CLI::PositiveNumber);
  gen->add_option("--noise", gen_noise, "Label flip probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output directory");

  // boost
  auto* boost = app.add_subcommand("boost", "Run boosting trials and write reports");
  dab::ExperimentSpec spec;
  std::string train_path, test_path, algo = "smooth", strategy = "uniform", rounds = "100";
  std::size_t ls_n = 40000, ls_test_n = 10000;
  double noise = 0.0, beta = 0.2, eps = 0.1;
  std::optional<double> gamma;
  std::string boost_out = default_output_dir();
  std::string median = "elimination";
  auto* train_opt = boost->add_option("--train", train_path, "Training file (.csv or LibSVM)");
  boost->add_option("--test", test_path, "Test file; default: 1/5 of --train")->needs(train_opt);
  auto* ls_opt = boost->add_option("--ls-n", ls_n, "Generate Long-Servedio data of this size per trial")
                     ->check(CLI::PositiveNumber);
  ls_opt->excludes(train_opt);
  boost->add_option("--ls-test-n", ls_test_n, "Generated test size")->check(CLI::PositiveNumber);
  boost->add_option("--noise", noise, "Label noise for generated data")->check(CLI::Range(0.0, 1.0));
  boost->add_option("--algo", algo, "smooth | adaboost | centralized-smooth")
      ->check(CLI::IsMember({"smooth", "adaboost", "centralized-smooth"}));
  boost->add_option("--k", spec.k, "Number of entities")->check(CLI::PositiveNumber);
  boost->add_option("--partition", strategy, "uniform | by-label | round-robin")
      ->check(CLI::IsMember({"uniform", "by-label", "round-robin"}));
  boost->add_option("--beta", beta, "Weak learner slack; gamma = (1/2)(1/2 - beta)");
  boost->add_option("--gamma", gamma, "Override gamma");
  boost->add_option("--eps", eps, "Smoothness / target error");
  boost->add_option("--rounds", rounds, "Rounds, or 'auto'");
  boost->add_option("--sample-budget", spec.config.sample_budget, "Examples sampled per round")
      ->check(CLI::PositiveNumber);
  boost->add_option("--seed", spec.config.seed, "Master seed; trial t uses seed + t");
  boost->add_option("--trials", spec.trials, "Independent trials")->check(CLI::PositiveNumber);
  boost->add_flag("--full-data", spec.protocol.full_data, "Ship all data to the center (exact weak learner)");
  boost->add_flag("--count-instrumentation", spec.protocol.count_instrumentation,
                  "Include measurement traffic in word counts");
  boost->add_option("--median", median, "elimination | quickselect")
      ->check(CLI::IsMember({"elimination", "quickselect"}));
  boost->add_option("--out", boost_out, "Report directory");

  // commscan
  auto* scan = app.add_subcommand("commscan", "Sweep communication cost over n, k, eps");
  std::string n_exp = "6:14", mode = "projection", scan_out;
  std::vector<std::size_t> scan_ks{8};
  std::vector<double> scan_eps{0.1};
  std::size_t reps = 5, scan_rounds = 10, scan_budget = 2000;
  std::uint64_t scan_seed = 0;
  scan->add_option("--n-exp", n_exp, "Range of log2(n), LO:HI");
  scan->add_option("--k", scan_ks, "Entity counts")->check(CLI::PositiveNumber);
  scan->add_option("--eps", scan_eps, "Epsilon values")->check(CLI::Range(1e-9, 1.0));
  scan->add_option("--mode", mode, "projection | protocol")->check(CLI::IsMember({"projection", "protocol"}));
  scan->add_option("--reps", reps, "Random instances per projection point")->check(CLI::PositiveNumber);
  scan->add_option("--rounds", scan_rounds, "Boosting rounds in protocol mode")->check(CLI::PositiveNumber);
  scan->add_option("--sample-budget", scan_budget, "Per-round sample in protocol mode")->check(CLI::PositiveNumber);
  scan->add_option("--seed", scan_seed, "Random seed");
  scan->add_option("--out", scan_out, "Write CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const std::size_t test_n = gen_test_n.value_or(std::max<std::size_t>(1, gen_n / 4));
      const auto data = dab::generate_long_servedio(gen_n, test_n, gen_noise, gen_seed);
      dab::write_generated(data, gen_out);
      std::cout << "wrote " << data.train.size() << " train / " << data.test.size()
                << " test examples to " << gen_out << '\n';
      return 0;
    }

    if (boost->parsed()) {
      if (!train_path.empty()) {
        dab::FileSource files{train_path, std::nullopt};
        if (!test_path.empty()) files.test = test_path;
        spec.dataset = files;
      } else {
        spec.dataset = dab::LongServedioSource{ls_n, ls_test_n, noise};
      }
      spec.algorithm = dab::parse_algorithm(algo);
      spec.partition = dab::parse_partition_strategy(strategy);
      const std::uint64_t seed = spec.config.seed;
      const std::size_t budget = spec.config.sample_budget;
      std::optional<std::size_t> fixed_rounds;
      if (rounds != "auto") {
        fixed_rounds = std::stoul(rounds);
        if (*fixed_rounds == 0) throw dab::Error("--rounds must be positive or 'auto'");
      }
      spec.config = dab::BoostConfig::from_beta(beta, eps, fixed_rounds);
      if (gamma) spec.config.gamma = *gamma;
      spec.config.seed = seed;
      spec.config.sample_budget = budget;
      spec.protocol.median =
          median == "quickselect" ? dab::MedianMethod::quickselect : dab::MedianMethod::elimination;
      spec.output_dir = boost_out;
      const auto summary = dab::run_experiment(spec);
      std::cout << dab::summary_line(spec, summary) << '\n';
      return 0;
    }

    if (scan->parsed()) {
      const auto ns = powers_of_two(n_exp);
      const bool protocol = mode == "protocol";
      const auto rows = protocol
                            ? dab::commscan_protocol(ns, scan_ks, scan_eps, scan_rounds, scan_budget, scan_seed)
                            : dab::commscan_projection(ns, scan_ks, scan_eps, reps, scan_seed);
      if (scan_out.empty()) {
        dab::write_commscan_csv(std::cout, rows, protocol);
      } else {
        dab::write_atomically(scan_out, [&](std::ostream& os) { dab::write_commscan_csv(os, rows, protocol); });
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
