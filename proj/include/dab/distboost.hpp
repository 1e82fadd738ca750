#pragma once

// Distributed smooth boosting and the distributed AdaBoost baseline, run as
// center/entity state machines over a simulated star network.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dab/boost.hpp"
#include "dab/data.hpp"
#include "dab/error.hpp"
#include "dab/netsim.hpp"
#include "dab/projection.hpp"
#include "dab/rng.hpp"
#include "dab/weaklearn.hpp"

namespace dab {

/// Entity i's examples S_i and its unnormalized slice of the global weights.
struct EntityState {
  LabeledDataset shard;
  std::vector<double> weights;
};

struct ProtocolOptions {
  /// Entities ship every example and weight to the center, which trains on
  /// the exact global distribution instead of a sample.
  bool full_data = false;
  /// Count the measurement-only traffic (edge, max weight, training error).
  bool count_instrumentation = false;
  MedianMethod median = MedianMethod::elimination;
};

struct ProtocolReport {
  VotedEnsemble ensemble;
  CommStats comm;
  std::vector<RoundRecord> rounds;
  std::size_t per_round_examples = 0;
};

/// Counts of m categorical draws over k categories with P(i) = sums[i]/sum.
inline std::vector<std::size_t> multinomial_allocate(std::span<const double> sums, std::size_t m,
                                                     std::uint64_t seed) {
  detail::require(!sums.empty(), "multinomial_allocate: no categories");
  detail::require(m > 0, "multinomial_allocate: m must be positive");
  double total = 0.0;
  for (double s : sums) {
    detail::require(s >= 0.0, "multinomial_allocate: negative mass");
    total += s;
  }
  if (!(total > 0.0)) throw Error("multinomial_allocate: all categories have zero mass");
  CategoricalSampler sampler(sums);
  Rng rng(seed);
  std::vector<std::size_t> counts(sums.size(), 0);
  for (std::size_t j = 0; j < m; ++j) ++counts[sampler(rng)];
  return counts;
}

/// `count` draws with replacement from the entity's examples, probability
/// proportional to its local weights.
inline LabeledDataset entity_sample(const EntityState& state, std::size_t count,
                                    std::uint64_t seed) {
  detail::require(state.weights.size() == state.shard.size(),
                  "entity_sample: weights do not match shard");
  LabeledDataset out(state.shard.dim());
  if (count == 0) return out;
  double mass = 0.0;
  for (double w : state.weights) mass += w;
  if (!(mass > 0.0)) throw Error("entity_sample: positive count with zero local mass");
  CategoricalSampler sampler(state.weights);
  Rng rng(seed);
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t i = sampler(rng);
    out.push_back(state.shard.row(i), state.shard.label(i));
  }
  return out;
}

/// Called with (t, flattened global distribution) at the end of round t.
using GlobalWeightsObserver = std::function<void(std::size_t, std::span<const double>)>;

namespace detail {

enum class Algorithm { smooth, adaboost };

// Seed tags for the derived streams.
inline constexpr std::uint64_t kAllocateTag = 1;
inline constexpr std::uint64_t kSampleTag = 2;
inline constexpr std::uint64_t kMedianTag = 3;

// AdaBoost vote weight. Perfect rounds are capped, non-improving rounds
// contribute nothing.
inline double adaboost_alpha(double err) {
  const double cap = 0.5 * std::log(1e6);
  if (err >= 0.5) return 0.0;
  if (err <= 0.0) return cap;
  return std::min(cap, 0.5 * std::log((1.0 - err) / err));
}

inline ShardedWeights weights_of(const std::vector<EntityState>& entities) {
  ShardedWeights sw;
  for (const auto& e : entities) sw.shards.push_back(e.weights);
  return sw;
}

class Protocol {
 public:
  Protocol(const Shards& shards, const BoostConfig& config, const ProtocolOptions& options,
           Algorithm algorithm)
      : config_(config),
        options_(options),
        algorithm_(algorithm),
        net_(shards.k(), options.count_instrumentation) {
    config.validate();
    require(shards.k() >= 1, "distributed boosting: no shards");
    for (const auto& part : shards.parts) {
      if (part.empty()) throw Error("distributed boosting: empty shard");
      require(part.dim() == shards.parts.front().dim(), "distributed boosting: shard dimensions differ");
    }
    const auto center = Endpoint::center();
    // Setup: the center learns n and tells every entity.
    std::size_t n = 0;
    for (std::size_t i = 0; i < shards.k(); ++i) {
      n += net_.send(Endpoint::entity(i), center, shards.parts[i].size());
    }
    n_ = net_.broadcast(center, n);
    for (const auto& part : shards.parts) {
      entities_.push_back({part, std::vector<double>(part.size(), 1.0 / static_cast<double>(n_))});
      tallies_.emplace_back(part.size());
    }
    dim_ = shards.parts.front().dim();
  }

  ProtocolReport run(const GlobalWeightsObserver& observer) {
    ProtocolReport report;
    report.per_round_examples = options_.full_data ? n_ : config_.sample_budget;
    const std::size_t rounds = config_.total_rounds();
    for (std::size_t t = 1; t <= rounds; ++t) {
      net_.begin_round();
      report.rounds.push_back(step(t, report.ensemble));
      net_.end_round();
      if (observer) observer(t, weights_of(entities_).flatten());
    }
    report.comm = net_.stats();
    return report;
  }

 private:
  const Endpoint center = Endpoint::center();

  // Steps 1-3: the center receives either a weighted sample or everything.
  std::pair<LabeledDataset, std::vector<double>> gather(std::size_t t) {
    const std::size_t k = entities_.size();
    LabeledDataset pool(dim_);
    std::vector<double> weights;
    if (options_.full_data) {
      for (std::size_t i = 0; i < k; ++i) {
        const auto& e = entities_[i];
        const auto rows = net_.send(Endpoint::entity(i), center, e.shard);
        const auto w = net_.send(Endpoint::entity(i), center, e.weights);
        for (std::size_t r = 0; r < rows.size(); ++r) pool.push_back(rows.row(r), rows.label(r));
        weights.insert(weights.end(), w.begin(), w.end());
      }
      return {std::move(pool), std::move(weights)};
    }

    std::vector<double> sums(k);
    for (std::size_t i = 0; i < k; ++i) {
      double local = 0.0;
      for (double v : entities_[i].weights) local += v;
      sums[i] = net_.send(Endpoint::entity(i), center, local);
    }
    const auto counts =
        multinomial_allocate(sums, config_.sample_budget, derive_seed(config_.seed, t, k, kAllocateTag));
    pool.reserve(config_.sample_budget);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t c = net_.send(center, Endpoint::entity(i), counts[i]);
      const auto sample =
          net_.send(Endpoint::entity(i), center,
                    entity_sample(entities_[i], c, derive_seed(config_.seed, t, i, kSampleTag)));
      for (std::size_t r = 0; r < sample.size(); ++r) pool.push_back(sample.row(r), sample.label(r));
    }
    weights.assign(pool.size(), 1.0);
    return {std::move(pool), std::move(weights)};
  }

  RoundRecord step(std::size_t t, VotedEnsemble& ensemble) {
    const std::size_t k = entities_.size();
    auto [pool, pool_weights] = gather(t);
    const auto fit = fit_stump(pool, pool_weights);
    const Stump h = net_.broadcast(center, fit.stump);

    double alpha = 1.0;
    if (algorithm_ == Algorithm::adaboost) {
      double pool_mass = 0.0;
      for (double w : pool_weights) pool_mass += w;
      alpha = net_.broadcast(center, adaboost_alpha(fit.error / pool_mass));
      ensemble.add(h, alpha);
    } else {
      ensemble.add(h);
    }

    // Entities: measure the edge under D^(t), then update locally.
    double err = 0.0;
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < k; ++i) {
      auto& e = entities_[i];
      double local_err = 0.0;
      std::vector<int> predictions(e.shard.size());
      for (std::size_t r = 0; r < e.shard.size(); ++r) {
        predictions[r] = predict(h, e.shard.row(r));
        const bool correct = predictions[r] == e.shard.label(r);
        if (!correct) local_err += e.weights[r];
        if (algorithm_ == Algorithm::smooth) {
          if (correct) e.weights[r] *= 1.0 - config_.gamma;
        } else {
          e.weights[r] *= std::exp(-alpha * e.shard.label(r) * predictions[r]);
        }
      }
      tallies_[i].add(predictions, algorithm_ == Algorithm::adaboost ? alpha : 1.0);
      err += net_.instrument(Endpoint::entity(i), center, local_err);
      mistakes += net_.instrument(Endpoint::entity(i), center, tallies_[i].mistakes(e.shard.labels()));
    }

    ShardedWeights sw = weights_of(entities_);
    const double z = distributed_normalize(sw, net_);
    if (algorithm_ == Algorithm::smooth) {
      ProjectionOptions popt;
      popt.median.method = options_.median;
      popt.median.seed = derive_seed(config_.seed, t, k, kMedianTag);
      sw = distributed_project(sw, config_.epsilon, net_, popt);
    }
    double max_weight = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      entities_[i].weights = std::move(sw.shards[i]);
      const auto& w = entities_[i].weights;
      const double local_max = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
      max_weight = std::max(max_weight, net_.instrument(Endpoint::entity(i), center, local_max));
    }
    return {t, 0.5 - err, z, max_weight,
            static_cast<double>(mistakes) / static_cast<double>(n_)};
  }

  BoostConfig config_;
  ProtocolOptions options_;
  Algorithm algorithm_;
  Network net_;
  std::vector<EntityState> entities_;
  std::vector<VoteTally> tallies_;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
};

}  // namespace detail

/// Distributed smooth boosting. Per round: local sums up, multinomial
/// sample counts down, sampled examples up, stump broadcast, local
/// multiplicative update, distributed normalization and projection.
inline ProtocolReport run_dist_smooth_boost(const Shards& shards, const BoostConfig& config,
                                            const ProtocolOptions& options = {},
                                            const GlobalWeightsObserver& observer = {}) {
  detail::Protocol protocol(shards, config, options, detail::Algorithm::smooth);
  return protocol.run(observer);
}

/// Same skeleton without projection; exponential update and alpha-weighted
/// final vote.
inline ProtocolReport run_dist_adaboost(const Shards& shards, const BoostConfig& config,
                                        const ProtocolOptions& options = {},
                                        const GlobalWeightsObserver& observer = {}) {
  detail::Protocol protocol(shards, config, options, detail::Algorithm::adaboost);
  return protocol.run(observer);
}

}  // namespace dab
