#pragma once

// Decision stumps trained by exact weighted 0/1-error minimization, and the
// voted ensembles built from them.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dab/data.hpp"
#include "dab/error.hpp"

namespace dab {

/// Predicts `polarity` when x[feature] > threshold, otherwise -polarity.
struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;

  friend bool operator==(const Stump&, const Stump&) = default;
};

inline int predict(const Stump& h, std::span<const double> x) {
  if (h.feature >= x.size()) throw Error("predict: feature index out of range");
  return x[h.feature] > h.threshold ? h.polarity : -h.polarity;
}

/// sign(sum_t alpha_t h_t(x)) with sign(0) = +1. An empty `alphas` means
/// every member votes with weight one.
struct VotedEnsemble {
  std::vector<Stump> members;
  std::vector<double> alphas;

  std::size_t size() const noexcept { return members.size(); }
  bool weighted() const noexcept { return !alphas.empty(); }

  void add(const Stump& h) { members.push_back(h); }
  void add(const Stump& h, double alpha) {
    members.push_back(h);
    alphas.push_back(alpha);
  }

  friend bool operator==(const VotedEnsemble&, const VotedEnsemble&) = default;
};

inline int predict_ensemble(const VotedEnsemble& e, std::span<const double> x) {
  if (e.members.empty()) throw Error("predict_ensemble: empty ensemble");
  if (e.weighted() && e.alphas.size() != e.members.size()) {
    throw Error("predict_ensemble: alpha count does not match member count");
  }
  double vote = 0.0;
  for (std::size_t t = 0; t < e.members.size(); ++t) {
    const double a = e.weighted() ? e.alphas[t] : 1.0;
    vote += a * predict(e.members[t], x);
  }
  return vote >= 0.0 ? 1 : -1;
}

/// sum_i w_i * 1[h(x_i) != y_i]. The weights are not required to be
/// normalized; for a distribution the result lies in [0,1].
inline double weighted_error(const Stump& h, const LabeledDataset& ds,
                             std::span<const double> weights) {
  if (weights.size() != ds.size()) throw Error("weighted_error: length mismatch");
  double err = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (predict(h, ds.row(i)) != ds.label(i)) err += weights[i];
  }
  return err;
}

struct StumpFit {
  Stump stump;
  double error = 0.0;  // weighted error, in the units of the input weights
};

namespace detail {

// Errors closer than this fraction of the total weight count as ties, so the
// chosen stump does not depend on summation order.
inline constexpr double kStumpTieTolerance = 1e-12;

}  // namespace detail

/// Exact minimizer of weighted error over (feature, threshold, polarity).
/// Thresholds are -inf, midpoints between consecutive distinct values, and
/// +inf. Ties go to the lowest feature, then the lowest threshold, then
/// polarity +1.
inline StumpFit fit_stump(const LabeledDataset& ds, std::span<const double> weights) {
  if (ds.empty()) throw Error("train_stump: empty dataset");
  if (weights.size() != ds.size()) throw Error("train_stump: weights length mismatch");
  double total = 0.0;
  double total_neg = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw Error("train_stump: negative weight");
    total += weights[i];
    if (ds.label(i) < 0) total_neg += weights[i];
  }
  if (!(total > 0.0)) throw Error("train_stump: weights sum to zero");

  const double tie = detail::kStumpTieTolerance * total;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  StumpFit best{Stump{0, -kInf, 1}, kInf};
  auto consider = [&](std::size_t f, double threshold, double err_pos) {
    const double err_neg = total - err_pos;
    if (err_pos < best.error - tie) best = {Stump{f, threshold, 1}, err_pos};
    if (err_neg < best.error - tie) best = {Stump{f, threshold, -1}, err_neg};
  };

  const std::size_t n = ds.size();
  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < ds.dim(); ++f) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ds.row(a)[f] < ds.row(b)[f];
    });
    // Threshold -inf: polarity +1 predicts +1 everywhere.
    double err_pos = total_neg;
    consider(f, -kInf, err_pos);
    std::size_t i = 0;
    while (i < n) {
      const double v = ds.row(order[i])[f];
      while (i < n && ds.row(order[i])[f] == v) {
        const double w = weights[order[i]];
        err_pos += ds.label(order[i]) > 0 ? w : -w;
        ++i;
      }
      const double threshold = i < n ? v + (ds.row(order[i])[f] - v) / 2.0 : kInf;
      consider(f, threshold, err_pos);
    }
  }
  return best;
}

inline Stump train_stump(const LabeledDataset& ds, std::span<const double> weights) {
  return fit_stump(ds, weights).stump;
}

// --- serialization -------------------------------------------------------

/// One member per line: `feature,threshold,polarity[,alpha]`.
inline void write_ensemble_csv(std::ostream& os, const VotedEnsemble& e) {
  for (std::size_t t = 0; t < e.members.size(); ++t) {
    const auto& h = e.members[t];
    os << h.feature << ',';
    detail::write_number(os, h.threshold);
    os << ',' << h.polarity;
    if (e.weighted()) {
      os << ',';
      detail::write_number(os, e.alphas[t]);
    }
    os << '\n';
  }
}

inline VotedEnsemble read_ensemble_csv(std::string_view text) {
  VotedEnsemble e;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = detail::trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    while (true) {
      const auto c = line.find(',');
      cells.push_back(line.substr(0, c));
      if (c == std::string_view::npos) break;
      line.remove_prefix(c + 1);
    }
    if (cells.size() != 3 && cells.size() != 4) throw ParseError(line_no, "expected 3 or 4 columns");
    if (columns == 0) columns = cells.size();
    if (cells.size() != columns) throw ParseError(line_no, "inconsistent column count");
    Stump h;
    double polarity = 0.0;
    if (!detail::parse_index(cells[0], h.feature) ||
        !detail::parse_double(cells[1], h.threshold) ||
        !detail::parse_double(cells[2], polarity) || (polarity != 1.0 && polarity != -1.0)) {
      throw ParseError(line_no, "malformed stump");
    }
    h.polarity = static_cast<int>(polarity);
    if (columns == 4) {
      double alpha = 0.0;
      if (!detail::parse_double(cells[3], alpha)) throw ParseError(line_no, "malformed alpha");
      e.add(h, alpha);
    } else {
      e.add(h);
    }
  }
  return e;
}

}  // namespace dab
