#pragma once

// Distributed relative-entropy projection onto epsilon-smooth distributions
// and the distributed median search it is built on. Every exchange goes
// through a Network so that communication is counted word by word.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "dab/boost.hpp"
#include "dab/error.hpp"
#include "dab/netsim.hpp"
#include "dab/rng.hpp"

namespace dab {

/// Entity-local weight vectors. shards[i] lives on entity i.
struct ShardedWeights {
  std::vector<std::vector<double>> shards;

  std::size_t k() const noexcept { return shards.size(); }
  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& s : shards) n += s.size();
    return n;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const auto& s : shards) out.insert(out.end(), s.begin(), s.end());
    return out;
  }

  /// Splits `flat` into consecutive shards with the given sizes.
  static ShardedWeights split(std::span<const double> flat, std::span<const std::size_t> sizes) {
    ShardedWeights sw;
    std::size_t pos = 0;
    for (std::size_t s : sizes) {
      detail::require(pos + s <= flat.size(), "ShardedWeights::split: sizes exceed input");
      sw.shards.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                             flat.begin() + static_cast<std::ptrdiff_t>(pos + s));
      pos += s;
    }
    detail::require(pos == flat.size(), "ShardedWeights::split: sizes do not cover input");
    return sw;
  }
};

enum class MedianMethod {
  elimination,  // max/min local-median elimination, count-based finish
  quickselect,  // random global pivot each iteration
};

struct MedianOptions {
  MedianMethod method = MedianMethod::elimination;
  std::uint64_t seed = 0;  // quickselect only
};

namespace detail {

// An entity's current candidate set: a window of its sorted local weights.
struct Window {
  std::span<const double> sorted;
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t size() const { return hi - lo; }
  bool empty() const { return hi == lo; }
  double at(std::size_t r) const { return sorted[lo + r]; }
  double median() const { return at((size() + 1) / 2 - 1); }

  std::size_t count_less(double v) const {
    return static_cast<std::size_t>(
        std::lower_bound(sorted.begin() + lo, sorted.begin() + hi, v) - (sorted.begin() + lo));
  }
  std::size_t count_greater(double v) const {
    return static_cast<std::size_t>(
        (sorted.begin() + hi) - std::upper_bound(sorted.begin() + lo, sorted.begin() + hi, v));
  }
};

inline std::size_t total_size(std::span<const Window> w) {
  std::size_t n = 0;
  for (const auto& x : w) n += x.size();
  return n;
}

// Count-and-discard selection of the element of rank q (1-based) among the
// windows. The center knows every window size; `medians` holds the current
// local medians (unused by quickselect).
inline double select_rank(std::vector<Window>& w, std::size_t q, Network& net,
                          std::vector<double>& medians, Rng* rng) {
  const auto center = Endpoint::center();
  while (true) {
    const std::size_t total = total_size(w);
    double pivot;
    if (rng) {
      std::uint64_t j = rng->below(total);
      std::size_t owner = 0;
      while (j >= w[owner].size()) j -= w[owner++].size();
      net.send(center, Endpoint::entity(owner), static_cast<std::size_t>(j));
      pivot = net.send(Endpoint::entity(owner), center, w[owner].at(j));
    } else {
      // Size-weighted lower median of the local medians: at least a quarter
      // of the candidates lie on each side of it.
      std::vector<std::size_t> ids;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!w[i].empty()) ids.push_back(i);
      }
      std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        return medians[a] < medians[b] || (medians[a] == medians[b] && a < b);
      });
      std::size_t acc = 0;
      pivot = medians[ids.back()];
      for (std::size_t i : ids) {
        acc += w[i].size();
        if (2 * acc >= total) {
          pivot = medians[i];
          break;
        }
      }
    }

    net.broadcast(center, pivot);
    std::size_t lt = 0, eq = 0;
    std::vector<std::size_t> lt_i(w.size()), eq_i(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      lt_i[i] = w[i].count_less(pivot);
      eq_i[i] = w[i].size() - lt_i[i] - w[i].count_greater(pivot);
      net.send(Endpoint::entity(i), center, std::vector<std::size_t>{lt_i[i], eq_i[i]});
      lt += lt_i[i];
      eq += eq_i[i];
    }
    if (lt < q && q <= lt + eq) return pivot;

    const bool keep_low = q <= lt;
    net.broadcast(center, static_cast<int>(keep_low));
    if (!keep_low) q -= lt + eq;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::size_t before = w[i].size();
      if (keep_low) {
        w[i].hi = w[i].lo + lt_i[i];
      } else {
        w[i].lo += lt_i[i] + eq_i[i];
      }
      if (!rng && !w[i].empty() && w[i].size() != before) {
        medians[i] = net.send(Endpoint::entity(i), center, w[i].median());
      }
    }
  }
}

// Lower median (rank ceil(N/2)) of the union of the windows. The windows
// are taken by value: elimination is local to one search.
inline double median_of_windows(std::vector<Window> w, Network& net, const MedianOptions& opt,
                                Rng* rng) {
  const auto center = Endpoint::center();
  const std::size_t k = w.size();
  std::vector<double> medians(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    net.send(Endpoint::entity(i), center, w[i].size());
    if (opt.method == MedianMethod::elimination && !w[i].empty()) {
      medians[i] = net.send(Endpoint::entity(i), center, w[i].median());
    }
  }
  const std::size_t total = total_size(w);
  if (total == 0) throw Error("distributed_median: empty input");

  if (opt.method == MedianMethod::quickselect) {
    detail::require(rng != nullptr, "distributed_median: quickselect needs a random stream");
    return select_rank(w, (total + 1) / 2, net, medians, rng);
  }

  // Elimination: the global median lies between the smallest and largest
  // local medians. Removing the same number of elements strictly above the
  // largest and strictly below the smallest leaves it unchanged.
  while (true) {
    std::size_t a = k, b = k;
    bool all_small = true;
    for (std::size_t i = 0; i < k; ++i) {
      if (w[i].empty()) continue;
      if (w[i].size() > 1) all_small = false;
      if (a == k || medians[i] > medians[a]) a = i;
      if (b == k || medians[i] < medians[b]) b = i;
    }
    if (medians[a] == medians[b]) return medians[a];
    if (all_small) {
      // The center already holds every remaining element.
      std::vector<double> rest;
      for (std::size_t i = 0; i < k; ++i) {
        if (!w[i].empty()) rest.push_back(medians[i]);
      }
      std::sort(rest.begin(), rest.end());
      return rest[(rest.size() + 1) / 2 - 1];
    }

    net.send(center, Endpoint::entity(a), 1);
    net.send(center, Endpoint::entity(b), 1);
    const std::size_t above = net.send(Endpoint::entity(a), center, w[a].count_greater(medians[a]));
    const std::size_t below = net.send(Endpoint::entity(b), center, w[b].count_less(medians[b]));
    const std::size_t r = std::min(above, below);
    if (r == 0) {
      const std::size_t n = total_size(w);
      return select_rank(w, (n + 1) / 2, net, medians, nullptr);
    }
    net.send(center, Endpoint::entity(a), r);
    net.send(center, Endpoint::entity(b), r);
    w[a].hi -= r;
    w[b].lo += r;
    medians[a] = net.send(Endpoint::entity(a), center, w[a].median());
    medians[b] = net.send(Endpoint::entity(b), center, w[b].median());
  }
}

inline std::vector<std::vector<double>> sorted_copies(const ShardedWeights& sw) {
  std::vector<std::vector<double>> out = sw.shards;
  for (auto& s : out) std::sort(s.begin(), s.end());
  return out;
}

}  // namespace detail

/// Lower median of the union of the shards, found by message passing.
inline double distributed_median(const ShardedWeights& sw, Network& net,
                                 const MedianOptions& opt = {}) {
  detail::require(sw.k() == net.k(), "distributed_median: shard count does not match network");
  detail::require(sw.size() > 0, "distributed_median: empty input");
  const auto sorted = detail::sorted_copies(sw);
  std::vector<detail::Window> w;
  for (const auto& s : sorted) w.push_back({s, 0, s.size()});
  Rng rng(opt.seed);
  return detail::median_of_windows(std::move(w), net, opt, &rng);
}

inline double distributed_median(const ShardedWeights& sw, const MedianOptions& opt = {}) {
  Network net(std::max<std::size_t>(sw.k(), 1));
  return distributed_median(sw, net, opt);
}

/// Divides every shard by the global mass. Returns that mass.
inline double distributed_normalize(ShardedWeights& sw, Network& net) {
  detail::require(sw.k() == net.k(), "distributed_normalize: shard count does not match network");
  const auto center = Endpoint::center();
  double total = 0.0;
  for (std::size_t i = 0; i < sw.k(); ++i) {
    double local = 0.0;
    for (double v : sw.shards[i]) local += v;
    total += net.send(Endpoint::entity(i), center, local);
  }
  if (!(total > 0.0)) throw Error("distributed_normalize: zero global mass");
  net.broadcast(center, total);
  for (auto& s : sw.shards) {
    for (double& v : s) v /= total;
  }
  return total;
}

/// One binary-search step of the distributed projection.
struct ProbeTrace {
  double theta = 0.0;
  std::size_t below = 0;  // L
  std::size_t equal = 0;  // M
  std::size_t above = 0;  // H
  double m0 = 0.0;
  bool clip = false;  // theta and everything above it get clipped
};

struct ProjectionOptions {
  MedianOptions median;
};

inline void write_probe_trace_csv(std::ostream& os, std::span<const ProbeTrace> trace) {
  os << "theta,L,M,H,m0,branch\n";
  for (const auto& p : trace) {
    detail::write_number(os, p.theta);
    os << ',' << p.below << ',' << p.equal << ',' << p.above << ',';
    detail::write_number(os, p.m0);
    os << ',' << (p.clip ? "clip" : "keep") << '\n';
  }
}

/// Projects globally normalized sharded weights onto the epsilon-smooth
/// distributions by binary search over a clipping threshold. The center is
/// assumed to know n. Shard structure and order are preserved.
inline ShardedWeights distributed_project(const ShardedWeights& sw, double epsilon, Network& net,
                                          const ProjectionOptions& opt = {},
                                          std::vector<ProbeTrace>* trace = nullptr) {
  detail::require(sw.k() == net.k(), "distributed_project: shard count does not match network");
  const std::size_t n = sw.size();
  detail::require(n > 0, "distributed_project: empty input");
  const auto flat = sw.flatten();
  detail::check_projectable(flat, epsilon);
  double mass = 0.0;
  for (double v : flat) mass += v;
  if (std::abs(mass - 1.0) > kSumTolerance) throw Error("distributed_project: weights are not normalized");

  const auto center = Endpoint::center();
  const std::size_t k = sw.k();
  const double cap = Distribution::smooth_cap(epsilon, n);
  const auto sorted = detail::sorted_copies(sw);
  std::vector<detail::Window> cand;
  for (const auto& s : sorted) cand.push_back({s, 0, s.size()});
  Rng rng(opt.median.seed);

  std::size_t remaining = n;
  std::size_t clipped = 0;    // C
  double clipped_mass = 0.0;  // C^w
  double theta = 0.0;

  while (remaining != 0) {
    theta = detail::median_of_windows(cand, net, opt.median, &rng);
    net.broadcast(center, theta);

    std::size_t below = 0, equal = 0, above = 0;
    double mass_below = 0.0, mass_equal = 0.0, mass_above = 0.0;
    std::vector<std::size_t> lt(k), eq(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& c = cand[i];
      lt[i] = c.count_less(theta);
      const std::size_t gt = c.count_greater(theta);
      eq[i] = c.size() - lt[i] - gt;
      double lw = 0.0, mw = 0.0, hw = 0.0;
      for (std::size_t r = 0; r < c.size(); ++r) {
        const double v = c.at(r);
        (r < lt[i] ? lw : r < lt[i] + eq[i] ? mw : hw) += v;
      }
      const auto report = net.send(Endpoint::entity(i), center,
                                   std::vector<double>{static_cast<double>(lt[i]),
                                                       static_cast<double>(eq[i]),
                                                       static_cast<double>(gt), lw, mw, hw});
      below += lt[i];
      equal += eq[i];
      above += gt;
      mass_below += report[3];
      mass_equal += report[4];
      mass_above += report[5];
    }
    (void)mass_below;

    const double denom = 1.0 - (clipped_mass + mass_above);
    const double m0 = denom > 0.0 ? (1.0 - static_cast<double>(clipped + above) * cap) / denom
                                  : std::numeric_limits<double>::infinity();
    net.broadcast(center, m0);
    const bool clip = detail::exceeds_cap(theta * m0, cap);
    if (trace) trace->push_back({theta, below, equal, above, m0, clip});

    if (clip) {
      clipped += above + equal;
      clipped_mass += mass_above + mass_equal;
      if (below == 0) {
        // Largest weight under theta anywhere, so that "> theta" below
        // selects exactly the clipped coordinates.
        double next = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) {
          const auto& s = sorted[i];
          auto it = std::lower_bound(s.begin(), s.end(), theta);
          const double local = it == s.begin() ? -std::numeric_limits<double>::infinity() : *(it - 1);
          next = std::max(next, net.send(Endpoint::entity(i), center, local));
        }
        theta = next;
      }
      remaining = below;
      net.broadcast(center, 0);
      for (std::size_t i = 0; i < k; ++i) cand[i].hi = cand[i].lo + lt[i];
    } else {
      remaining = above;
      net.broadcast(center, 1);
      for (std::size_t i = 0; i < k; ++i) cand[i].lo += lt[i] + eq[i];
    }
  }

  const double rest = 1.0 - clipped_mass;
  const double m0 = rest > 0.0 ? (1.0 - static_cast<double>(clipped) * cap) / rest : 0.0;
  net.broadcast(center, std::vector<double>{m0, theta});

  ShardedWeights out = sw;
  for (auto& s : out.shards) {
    for (double& v : s) v = v > theta ? cap : v * m0;
  }
  return out;
}

inline ShardedWeights distributed_project(const ShardedWeights& sw, double epsilon,
                                          const ProjectionOptions& opt = {}) {
  Network net(std::max<std::size_t>(sw.k(), 1));
  return distributed_project(sw, epsilon, net, opt);
}

}  // namespace dab
