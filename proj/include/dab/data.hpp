#pragma once

// Labeled datasets: LibSVM ingestion, the Long-Servedio generator, label
// noise, train/test splitting and partitioning across entities.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dab/error.hpp"
#include "dab/rng.hpp"

namespace dab {

/// Dense examples with labels in {-1, +1}. Features are stored row-major.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::size_t dim) : dim_(dim) {
    detail::require(dim > 0, "LabeledDataset: dimension must be positive");
  }

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const noexcept { return labels_; }

  void push_back(std::span<const double> x, int y) {
    detail::require(dim_ > 0, "LabeledDataset: dimension not set");
    detail::require(x.size() == dim_, "LabeledDataset: feature vector has wrong length");
    detail::require(y == 1 || y == -1, "LabeledDataset: label must be -1 or +1");
    features_.insert(features_.end(), x.begin(), x.end());
    labels_.push_back(y);
  }

  void set_label(std::size_t i, int y) {
    detail::require(y == 1 || y == -1, "LabeledDataset: label must be -1 or +1");
    labels_.at(i) = y;
  }

  void reserve(std::size_t n) {
    features_.reserve(n * dim_);
    labels_.reserve(n);
  }

  /// Copies the examples at the given indices, in order.
  LabeledDataset subset(std::span<const std::size_t> indices) const {
    LabeledDataset out(dim_);
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(row(i), label(i));
    return out;
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
};

/// A dataset split across k entities. origin[j][r] is the source index of
/// row r of parts[j].
struct Shards {
  std::vector<LabeledDataset> parts;
  std::vector<std::vector<std::size_t>> origin;

  std::size_t k() const noexcept { return parts.size(); }
  std::size_t total_size() const noexcept {
    std::size_t n = 0;
    for (const auto& p : parts) n += p.size();
    return n;
  }
};

enum class PartitionStrategy { uniform, by_label, round_robin };

inline PartitionStrategy parse_partition_strategy(std::string_view s) {
  if (s == "uniform") return PartitionStrategy::uniform;
  if (s == "by-label") return PartitionStrategy::by_label;
  if (s == "round-robin") return PartitionStrategy::round_robin;
  throw Error("unknown partition strategy: " + std::string(s));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_index(std::string_view tok, std::size_t& out) {
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses LibSVM text into a dense dataset. Two-valued label sets are mapped
/// by ascending order (lower -> -1, higher -> +1), which covers {0,1},
/// {-1,+1} and {1,2}.
inline LabeledDataset parse_libsvm(std::string_view text) {
  struct Line {
    double label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Line> lines;
  std::size_t dim = 0;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;

    Line parsed;
    bool first = true;
    std::size_t prev_index = 0;
    while (!line.empty()) {
      const auto sp = line.find_first_of(" \t");
      std::string_view tok = line.substr(0, sp);
      line = sp == std::string_view::npos ? std::string_view{}
                                          : detail::trim(line.substr(sp));
      if (first) {
        if (!detail::parse_double(tok, parsed.label)) {
          throw ParseError(line_no, "bad label '" + std::string(tok) + "'");
        }
        first = false;
        continue;
      }
      const auto colon = tok.find(':');
      std::size_t index = 0;
      double value = 0.0;
      if (colon == std::string_view::npos ||
          !detail::parse_index(tok.substr(0, colon), index) ||
          !detail::parse_double(tok.substr(colon + 1), value)) {
        throw ParseError(line_no, "malformed feature '" + std::string(tok) + "'");
      }
      if (index == 0) throw ParseError(line_no, "feature indices are 1-based");
      if (index <= prev_index) {
        throw ParseError(line_no, "feature indices must be strictly increasing");
      }
      prev_index = index;
      dim = std::max(dim, index);
      parsed.entries.emplace_back(index - 1, value);
    }
    lines.push_back(std::move(parsed));
  }

  if (lines.empty()) throw Error("parse_libsvm: empty input");
  if (dim == 0) throw Error("parse_libsvm: no features present");

  std::vector<double> distinct;
  for (const auto& l : lines) {
    if (std::find(distinct.begin(), distinct.end(), l.label) == distinct.end()) {
      distinct.push_back(l.label);
    }
  }
  if (distinct.size() > 2) throw Error("parse_libsvm: more than two distinct labels");
  std::sort(distinct.begin(), distinct.end());
  auto to_sign = [&](double label) {
    if (distinct.size() == 1) {
      if (label == -1.0 || label == 0.0) return -1;
      return 1;
    }
    return label == distinct.front() ? -1 : 1;
  };

  LabeledDataset ds(dim);
  ds.reserve(lines.size());
  std::vector<double> x(dim);
  for (const auto& l : lines) {
    std::fill(x.begin(), x.end(), 0.0);
    for (auto [i, v] : l.entries) x[i] = v;
    ds.push_back(x, to_sign(l.label));
  }
  return ds;
}

/// Mixture component used to draw a Long-Servedio example.
enum class LongServedioBranch { all_agree = 0, split = 1, random_subsets = 2 };

inline constexpr std::size_t kLongServedioDim = 21;

struct LongServedioDraw {
  std::vector<double> x;
  int y;
  LongServedioBranch branch;
};

inline LongServedioDraw draw_long_servedio(Rng& rng) {
  constexpr std::size_t kFirst = 11;
  LongServedioDraw d{std::vector<double>(kLongServedioDim), rng.bernoulli(0.5) ? 1 : -1,
                     LongServedioBranch::all_agree};
  const double y = d.y;
  const double u = rng.uniform();
  if (u < 0.25) {
    d.branch = LongServedioBranch::all_agree;
    std::fill(d.x.begin(), d.x.end(), y);
  } else if (u < 0.5) {
    d.branch = LongServedioBranch::split;
    for (std::size_t i = 0; i < kLongServedioDim; ++i) d.x[i] = i < kFirst ? y : -y;
  } else {
    d.branch = LongServedioBranch::random_subsets;
    std::fill(d.x.begin(), d.x.end(), -y);
    // Partial Fisher-Yates picks a uniform 5-subset of the first 11 and a
    // uniform 6-subset of the last 10.
    auto pick = [&](std::size_t begin, std::size_t count, std::size_t take) {
      std::vector<std::size_t> idx(count);
      for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
      for (std::size_t i = 0; i < take; ++i) {
        std::swap(idx[i], idx[i + rng.below(count - i)]);
        d.x[idx[i]] = y;
      }
    };
    pick(0, kFirst, 5);
    pick(kFirst, kLongServedioDim - kFirst, 6);
  }
  return d;
}

/// n noiseless examples from the Long-Servedio distribution over {-1,+1}^21.
inline LabeledDataset gen_long_servedio(std::size_t n, std::uint64_t seed) {
  detail::require(n >= 1, "gen_long_servedio: n must be positive");
  Rng rng(seed);
  LabeledDataset ds(kLongServedioDim);
  ds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto d = draw_long_servedio(rng);
    ds.push_back(d.x, d.y);
  }
  return ds;
}

inline LabeledDataset inject_label_noise(const LabeledDataset& ds, double rate,
                                         std::uint64_t seed) {
  detail::require(rate >= 0.0 && rate <= 1.0, "inject_label_noise: rate must be in [0,1]");
  Rng rng(seed);
  LabeledDataset out = ds;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng.uniform() < rate) out.set_label(i, -out.label(i));
  }
  return out;
}

/// Random permutation, then the first ceil(n * train_frac) rows train.
inline std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds,
                                                                  double train_frac,
                                                                  std::uint64_t seed) {
  detail::require(train_frac > 0.0 && train_frac < 1.0,
                  "split_train_test: train_frac must be in (0,1)");
  const std::size_t n = ds.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);
  // The epsilon absorbs representation error in n * train_frac (10 * 0.8).
  auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * train_frac - 1e-9));
  n_train = std::min(n_train, n);
  std::span<const std::size_t> all(perm);
  return {ds.subset(all.first(n_train)), ds.subset(all.subspan(n_train))};
}

/// Splits ds across k entities. Sizes differ by at most one for every
/// strategy; by-label orders rows by label first so entities see skewed
/// label marginals.
inline Shards partition(const LabeledDataset& ds, std::size_t k, PartitionStrategy strategy,
                        std::uint64_t seed) {
  detail::require(k >= 1, "partition: k must be positive");
  const std::size_t n = ds.size();
  detail::require(k <= n, "partition: more entities than examples");

  std::vector<std::vector<std::size_t>> origin(k);
  if (k == 1) {
    origin[0].resize(n);
    for (std::size_t i = 0; i < n; ++i) origin[0][i] = i;
  } else if (strategy == PartitionStrategy::round_robin) {
    for (std::size_t i = 0; i < n; ++i) origin[i % k].push_back(i);
  } else {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (strategy == PartitionStrategy::uniform) {
      Rng rng(seed);
      rng.shuffle(order);
    } else {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ds.label(a) < ds.label(b);
      });
    }
    std::size_t pos = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t len = n / k + (j < n % k ? 1 : 0);
      origin[j].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
  }

  Shards shards;
  shards.origin = std::move(origin);
  for (const auto& idx : shards.origin) shards.parts.push_back(ds.subset(idx));
  return shards;
}

/// Concatenates shards in entity order.
inline LabeledDataset flatten(const Shards& shards) {
  detail::require(!shards.parts.empty(), "flatten: no shards");
  LabeledDataset out(shards.parts.front().dim());
  out.reserve(shards.total_size());
  for (const auto& p : shards.parts) {
    for (std::size_t i = 0; i < p.size(); ++i) out.push_back(p.row(i), p.label(i));
  }
  return out;
}

namespace detail {

inline void write_number(std::ostream& os, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, ptr - buf);
}

}  // namespace detail

/// CSV with header `label,f1,...,fd`.
inline void write_csv(std::ostream& os, const LabeledDataset& ds) {
  os << "label";
  for (std::size_t j = 1; j <= ds.dim(); ++j) os << ",f" << j;
  os << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.label(i);
    for (double v : ds.row(i)) {
      os << ',';
      detail::write_number(os, v);
    }
    os << '\n';
  }
}

/// Reads the format produced by write_csv.
inline LabeledDataset read_csv(std::string_view text) {
  std::size_t line_no = 0;
  LabeledDataset ds;
  bool header = true;
  std::vector<double> x;
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
    if (header) {
      if (cells.size() < 2 || cells.front() != "label") {
        throw ParseError(line_no, "expected header 'label,f1,...'");
      }
      ds = LabeledDataset(cells.size() - 1);
      x.resize(cells.size() - 1);
      header = false;
      continue;
    }
    if (cells.size() != ds.dim() + 1) throw ParseError(line_no, "wrong number of columns");
    double label = 0.0;
    if (!detail::parse_double(cells[0], label) || (label != 1.0 && label != -1.0)) {
      throw ParseError(line_no, "label must be -1 or +1");
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!detail::parse_double(cells[j + 1], x[j])) throw ParseError(line_no, "bad number");
    }
    ds.push_back(x, static_cast<int>(label));
  }
  if (header) throw Error("read_csv: empty input");
  return ds;
}

/// LibSVM text with +1/-1 labels; zero features are omitted.
inline void write_libsvm(std::ostream& os, const LabeledDataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << (ds.label(i) > 0 ? "+1" : "-1");
    const auto x = ds.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] == 0.0) continue;
      os << ' ' << (j + 1) << ':';
      detail::write_number(os, x[j]);
    }
    os << '\n';
  }
}

}  // namespace dab
