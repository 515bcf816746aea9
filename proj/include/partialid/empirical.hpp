// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "partialid/csv.hpp"
#include "partialid/errors.hpp"

namespace partialid::empirical {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One observation Y = (D, C): integer category codes plus continuous
// coordinates. Either part may be absent, but not both.
struct Observation {
  std::vector<std::int32_t> discrete;
  std::vector<double> continuous;
};

enum class ColumnRole { kDiscrete, kContinuous };

// An i.i.d. sample with homogeneous dimensions. Discrete codes are dense
// (0..k-1 per column); `labels[col][code]` records the original cell text so
// reports can name categories.
class Sample {
 public:
  static Sample from_observations(std::vector<Observation> obs,
                                  std::vector<std::vector<std::string>> labels = {}) {
    if (obs.empty()) throw InputError("sample must contain at least one observation");
    Sample s;
    s.d_discrete_ = obs.front().discrete.size();
    s.d_continuous_ = obs.front().continuous.size();
    if (s.d_discrete_ + s.d_continuous_ == 0) {
      throw InputError("observations must have at least one coordinate");
    }
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto& o = obs[i];
      if (o.discrete.size() != s.d_discrete_ || o.continuous.size() != s.d_continuous_) {
        throw InputError("observation " + std::to_string(i + 1) +
                         " has inconsistent dimensions");
      }
      for (std::size_t k = 0; k < o.continuous.size(); ++k) {
        if (!std::isfinite(o.continuous[k])) {
          throw InputError("observation " + std::to_string(i + 1) + ", coordinate " +
                           std::to_string(k + 1) + ": continuous value must be finite");
        }
      }
    }
    s.observations_ = std::move(obs);
    s.labels_ = std::move(labels);
    return s;
  }

  const std::vector<Observation>& observations() const { return observations_; }
  std::size_t n() const { return observations_.size(); }
  std::size_t discrete_dim() const { return d_discrete_; }
  std::size_t continuous_dim() const { return d_continuous_; }
  const std::vector<std::vector<std::string>>& labels() const { return labels_; }

  // Distinct discrete code vectors, sorted.
  std::vector<std::vector<std::int32_t>> discrete_support() const {
    std::vector<std::vector<std::int32_t>> sup;
    sup.reserve(observations_.size());
    for (const auto& o : observations_) sup.push_back(o.discrete);
    std::sort(sup.begin(), sup.end());
    sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
    return sup;
  }

 private:
  std::vector<Observation> observations_;
  std::vector<std::vector<std::string>> labels_;
  std::size_t d_discrete_ = 0;
  std::size_t d_continuous_ = 0;
};

// One element of the set class: a set of discrete code vectors crossed with
// the lower hyper-rectangle (-inf, upper], or the complement of that product.
// The empty set is encoded canonically as an empty discrete part (d_D >= 1)
// together with upper = -inf in every continuous coordinate; the full space
// is its complement.
struct RectSet {
  std::size_t discrete_dim = 0;
  std::vector<std::vector<std::int32_t>> discrete_part;  // sorted
  std::vector<double> continuous_upper;                  // entries in [-inf, +inf]
  bool complemented = false;

  static RectSet empty_set(std::size_t d_discrete, std::size_t d_continuous) {
    RectSet r;
    r.discrete_dim = d_discrete;
    r.continuous_upper.assign(d_continuous, -kInf);
    return r;
  }

  static RectSet full_space(std::size_t d_discrete, std::size_t d_continuous) {
    RectSet r = empty_set(d_discrete, d_continuous);
    r.complemented = true;
    return r;
  }

  bool base_is_empty() const {
    if (discrete_dim > 0 && discrete_part.empty()) return true;
    for (double u : continuous_upper)
      if (u == -kInf) return true;
    return false;
  }

  bool in_base(const Observation& o) const {
    if (discrete_dim > 0 &&
        !std::binary_search(discrete_part.begin(), discrete_part.end(), o.discrete)) {
      return false;
    }
    for (std::size_t k = 0; k < continuous_upper.size(); ++k) {
      if (!(o.continuous[k] <= continuous_upper[k])) return false;
    }
    return true;
  }

  bool contains(const Observation& o) const {
    return complemented ? !in_base(o) : in_base(o);
  }

  friend bool operator==(const RectSet& a, const RectSet& b) {
    return a.complemented == b.complemented && a.discrete_dim == b.discrete_dim &&
           a.continuous_upper == b.continuous_upper && a.discrete_part == b.discrete_part;
  }

  // Arbitrary-but-fixed total order; used for canonical class ordering.
  friend bool operator<(const RectSet& a, const RectSet& b) {
    if (a.complemented != b.complemented) return !a.complemented;
    if (a.continuous_upper != b.continuous_upper)
      return a.continuous_upper < b.continuous_upper;
    return a.discrete_part < b.discrete_part;
  }
};

inline void check_dims(const Sample& s, const RectSet& a) {
  if (a.discrete_dim != s.discrete_dim() || a.continuous_upper.size() != s.continuous_dim()) {
    throw std::invalid_argument("RectSet dimensions do not match the sample");
  }
}

inline std::int64_t count_in(const Sample& s, const RectSet& a) {
  check_dims(s, a);
  std::int64_t c = 0;
  for (const auto& o : s.observations()) c += a.contains(o) ? 1 : 0;
  return c;
}

// P_n(A) = (1/n) * #{i : Y_i in A}. Continuous membership uses non-strict <=.
inline double empirical_measure(const Sample& s, const RectSet& a) {
  return static_cast<double>(count_in(s, a)) / static_cast<double>(s.n());
}

// Decides a subset-of b where the rectangle structure makes it decidable;
// nullopt when inclusion cannot be settled without knowing the full support.
inline std::optional<bool> rect_subset(const RectSet& a, const RectSet& b) {
  auto base_subset = [](const RectSet& x, const RectSet& y) {
    if (x.base_is_empty()) return true;
    if (y.base_is_empty()) return false;
    if (x.discrete_dim > 0 &&
        !std::includes(y.discrete_part.begin(), y.discrete_part.end(),
                       x.discrete_part.begin(), x.discrete_part.end())) {
      return false;
    }
    for (std::size_t k = 0; k < x.continuous_upper.size(); ++k) {
      if (x.continuous_upper[k] > y.continuous_upper[k]) return false;
    }
    return true;
  };
  auto bases_disjoint = [](const RectSet& x, const RectSet& y) {
    if (x.base_is_empty() || y.base_is_empty()) return true;
    if (x.discrete_dim == 0) return false;  // lower rectangles always intersect
    std::vector<std::vector<std::int32_t>> common;
    std::set_intersection(x.discrete_part.begin(), x.discrete_part.end(),
                          y.discrete_part.begin(), y.discrete_part.end(),
                          std::back_inserter(common));
    return common.empty();
  };
  if (!a.complemented && !b.complemented) return base_subset(a, b);
  if (!a.complemented && b.complemented) return bases_disjoint(a, b);
  if (a.complemented && b.complemented) return base_subset(b, a);
  // complement inside a plain rectangle: decidable only in edge cases
  bool b_is_everything = b.discrete_dim == 0;
  for (double u : b.continuous_upper) b_is_everything = b_is_everything && u == kInf;
  if (b_is_everything) return true;
  if (a.base_is_empty()) {  // a is the full space, b a proper rectangle
    return b.discrete_dim > 0 ? std::nullopt : std::optional<bool>(false);
  }
  return std::nullopt;
}

// The data-driven collection: for every subset A_D of the observed discrete
// support and every observed continuous vector C_i, the set
// A_D x (-inf, C_i] and its complement, deduplicated, with the empty set and
// the full space always present. With no continuous coordinates the
// continuous factor is the whole space and complements fold into subsets of
// the support, so the class is exactly the power set of the support.
inline std::vector<RectSet> generate_class(const Sample& s) {
  const std::size_t d_d = s.discrete_dim();
  const std::size_t d_c = s.continuous_dim();
  std::vector<RectSet> out;

  std::vector<std::vector<std::int32_t>> support;
  if (d_d > 0) {
    support = s.discrete_support();
    if (support.size() > 20) {
      throw InputError("discrete support has " + std::to_string(support.size()) +
                       " points; refusing to enumerate more than 2^20 subsets");
    }
  }

  std::vector<std::vector<double>> thresholds;
  if (d_c > 0) {
    for (const auto& o : s.observations()) thresholds.push_back(o.continuous);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  }

  auto subset_from_mask = [&](std::uint32_t mask) {
    std::vector<std::vector<std::int32_t>> atoms;
    for (std::size_t j = 0; j < support.size(); ++j)
      if (mask & (1u << j)) atoms.push_back(support[j]);
    return atoms;
  };

  if (d_c == 0) {
    const std::uint32_t total = 1u << support.size();
    for (std::uint32_t mask = 0; mask < total; ++mask) {
      RectSet r;
      r.discrete_dim = d_d;
      r.discrete_part = subset_from_mask(mask);
      out.push_back(std::move(r));
    }
  } else if (d_d == 0) {
    for (const auto& c : thresholds) {
      RectSet r;
      r.continuous_upper = c;
      out.push_back(r);
      r.complemented = true;
      out.push_back(std::move(r));
    }
    out.push_back(RectSet::empty_set(0, d_c));
    out.push_back(RectSet::full_space(0, d_c));
  } else {
    const std::uint32_t total = 1u << support.size();
    for (std::uint32_t mask = 1; mask < total; ++mask) {
      auto atoms = subset_from_mask(mask);
      for (const auto& c : thresholds) {
        RectSet r;
        r.discrete_dim = d_d;
        r.discrete_part = atoms;
        r.continuous_upper = c;
        out.push_back(r);
        r.complemented = true;
        out.push_back(std::move(r));
      }
    }
    out.push_back(RectSet::empty_set(d_d, d_c));
    out.push_back(RectSet::full_space(d_d, d_c));
  }

  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<ColumnRole> parse_schema(const std::string& spec) {
  std::vector<ColumnRole> roles;
  for (const auto& field : csv::split_line(spec)) {
    if (field == "d" || field == "D") {
      roles.push_back(ColumnRole::kDiscrete);
    } else if (field == "c" || field == "C") {
      roles.push_back(ColumnRole::kContinuous);
    } else {
      throw InputError("schema entries must be 'd' or 'c', got '" + field + "'");
    }
  }
  if (roles.empty()) throw InputError("schema is empty");
  return roles;
}

// Loads a CSV file with a header row. `schema` assigns each column a role.
// Discrete cells may be arbitrary integers or strings; they are
// dictionary-encoded to dense codes 0..k-1 (numeric order when every label
// parses as an integer, lexicographic otherwise) and the mapping is kept on
// the sample.
inline Sample load_sample(const std::string& path, const std::vector<ColumnRole>& schema) {
  csv::Table table = csv::read_file(path);
  if (table.header.empty()) throw InputError(path + ": file is empty");
  if (schema.size() != table.header.size()) {
    throw InputError(path + ": schema has " + std::to_string(schema.size()) +
                     " entries but the file has " + std::to_string(table.header.size()) +
                     " columns");
  }
  if (table.rows.empty()) throw InputError(path + ": no data rows");

  std::vector<std::size_t> d_cols, c_cols;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    (schema[j] == ColumnRole::kDiscrete ? d_cols : c_cols).push_back(j);
  }

  // Dictionary per discrete column.
  std::vector<std::vector<std::string>> labels(d_cols.size());
  for (std::size_t dj = 0; dj < d_cols.size(); ++dj) {
    std::vector<std::string> seen;
    for (const auto& row : table.rows) seen.push_back(row[d_cols[dj]]);
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    bool all_int = true;
    std::vector<std::pair<long long, std::string>> numeric;
    for (const auto& v : seen) {
      try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        numeric.emplace_back(x, v);
      } catch (const std::exception&) {
        all_int = false;
        break;
      }
    }
    if (all_int) {
      std::sort(numeric.begin(), numeric.end());
      seen.clear();
      for (auto& [x, v] : numeric) seen.push_back(v);
    }
    labels[dj] = std::move(seen);
  }

  auto code_of = [&](std::size_t dj, const std::string& v) {
    const auto& lab = labels[dj];
    auto it = std::find(lab.begin(), lab.end(), v);
    return static_cast<std::int32_t>(it - lab.begin());
  };

  std::vector<Observation> obs;
  obs.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    Observation o;
    for (std::size_t dj = 0; dj < d_cols.size(); ++dj) {
      o.discrete.push_back(code_of(dj, table.rows[i][d_cols[dj]]));
    }
    for (std::size_t cj : c_cols) {
      double v = csv::parse_double(table.rows[i][cj], path, i + 2, table.header[cj]);
      if (!std::isfinite(v)) {
        throw InputError(path + ": row " + std::to_string(i + 2) + ", column '" +
                         table.header[cj] + "': continuous value must be finite");
      }
      o.continuous.push_back(v);
    }
    obs.push_back(std::move(o));
  }
  return Sample::from_observations(std::move(obs), std::move(labels));
}

}  // namespace partialid::empirical
