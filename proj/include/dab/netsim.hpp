#pragma once

// Simulated star network: one center and k entities. Delivery is synchronous
// and lossless; the network only counts words, messages and rounds.
//
// Word costs: scalar or count = 1, feature vector = d, labeled example =
// d + 1, stump = 3, sequence = sum of its parts.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "dab/data.hpp"
#include "dab/error.hpp"
#include "dab/weaklearn.hpp"

namespace dab {

class Endpoint {
 public:
  static constexpr Endpoint center() noexcept { return Endpoint(kCenter); }
  static constexpr Endpoint entity(std::size_t i) noexcept { return Endpoint(i); }

  constexpr bool is_center() const noexcept { return id_ == kCenter; }
  constexpr std::size_t entity_id() const noexcept { return id_; }

  friend constexpr bool operator==(Endpoint, Endpoint) = default;

 private:
  static constexpr std::size_t kCenter = static_cast<std::size_t>(-1);
  constexpr explicit Endpoint(std::size_t id) noexcept : id_(id) {}
  std::size_t id_;
};

/// A labeled example as it travels over the wire.
struct WireExample {
  std::span<const double> x;
  int y;
};

// --- word costs ----------------------------------------------------------

inline std::size_t word_cost(double) { return 1; }
inline std::size_t word_cost(std::size_t) { return 1; }
inline std::size_t word_cost(std::int64_t) { return 1; }
inline std::size_t word_cost(int) { return 1; }
inline std::size_t word_cost(std::span<const double> features) { return features.size(); }
inline std::size_t word_cost(const WireExample& e) { return e.x.size() + 1; }
inline std::size_t word_cost(const Stump&) { return 3; }
inline std::size_t word_cost(const LabeledDataset& ds) { return ds.size() * (ds.dim() + 1); }

template <class A, class B>
std::size_t word_cost(const std::pair<A, B>& p) {
  return word_cost(p.first) + word_cost(p.second);
}

template <class T>
std::size_t word_cost(const std::vector<T>& seq) {
  std::size_t words = 0;
  for (const auto& item : seq) words += word_cost(item);
  return words;
}

template <class T>
concept Payload = requires(const T& p) {
  { word_cost(p) } -> std::convertible_to<std::size_t>;
};

struct CommStats {
  std::size_t words = 0;
  std::size_t messages = 0;
  std::size_t rounds = 0;
  std::vector<std::pair<std::size_t, std::size_t>> per_round;  // (round, words)

  /// Words sent outside any begin_round/end_round bracket.
  std::size_t out_of_round_words() const {
    std::size_t inside = 0;
    for (const auto& [r, w] : per_round) inside += w;
    return words - inside;
  }
};

class Network {
 public:
  explicit Network(std::size_t k, bool count_instrumentation = false)
      : k_(k), count_instrumentation_(count_instrumentation) {
    detail::require(k >= 1, "Network: need at least one entity");
  }

  std::size_t k() const noexcept { return k_; }
  const CommStats& stats() const noexcept { return stats_; }

  /// Records one message; exactly one side must be the center.
  template <Payload T>
  T send(Endpoint from, Endpoint to, const T& payload) {
    check_link(from, to);
    record(word_cost(payload), 1);
    return payload;
  }

  /// Center to all k entities: k copies.
  template <Payload T>
  T broadcast(Endpoint from, const T& payload) {
    if (!from.is_center()) throw TopologyError("broadcast: only the center may broadcast");
    record(k_ * word_cost(payload), k_);
    return payload;
  }

  /// Test-only measurement traffic, counted only when enabled.
  template <Payload T>
  T instrument(Endpoint from, Endpoint to, const T& payload) {
    check_link(from, to);
    if (count_instrumentation_) record(word_cost(payload), 1);
    return payload;
  }

  void begin_round() {
    if (open_round_) throw Error("begin_round: previous round still open");
    open_round_ = stats_.words;
  }

  void end_round() {
    if (!open_round_) throw Error("end_round: no round open");
    ++stats_.rounds;
    stats_.per_round.emplace_back(stats_.rounds, stats_.words - *open_round_);
    open_round_.reset();
  }

 private:
  void check_link(Endpoint from, Endpoint to) const {
    if (from.is_center() == to.is_center()) {
      throw TopologyError(from.is_center() ? "center cannot message itself"
                                           : "entity-to-entity messages are not allowed");
    }
    const Endpoint e = from.is_center() ? to : from;
    if (e.entity_id() >= k_) throw TopologyError("unknown entity id");
  }

  void record(std::size_t words, std::size_t messages) {
    stats_.words += words;
    stats_.messages += messages;
  }

  std::size_t k_;
  bool count_instrumentation_;
  CommStats stats_;
  std::optional<std::size_t> open_round_;
};

inline void write_comm_csv(std::ostream& os, const CommStats& s) {
  os << "round,words\n";
  for (const auto& [r, w] : s.per_round) os << r << ',' << w << '\n';
}

inline void write_comm_summary(std::ostream& os, const CommStats& s) {
  os << "total_words,total_messages,total_rounds\n"
     << s.words << ',' << s.messages << ',' << s.rounds << '\n';
}

}  // namespace dab
