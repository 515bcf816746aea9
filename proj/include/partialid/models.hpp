// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "partialid/csv.hpp"
#include "partialid/empirical.hpp"
#include "partialid/errors.hpp"

namespace partialid::models {

using empirical::RectSet;

struct ParamBounds {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;
};

// A structure (Gamma, nu) for a fixed parameter value, exposed through the
// one evaluation the test needs: A |-> nu(Gamma(A)). Implementations must be
// monotone in A, send the empty set to 0, and be immutable after
// construction (evaluation is called concurrently).
class StructureModel {
 public:
  virtual ~StructureModel() = default;
  virtual double nu_gamma(const RectSet& a) const = 0;
  virtual std::string name() const = 0;
  virtual std::vector<double> theta() const = 0;
  virtual std::vector<ParamBounds> theta_domain() const = 0;
};

inline double nu_gamma_eval(const StructureModel& m, const RectSet& a) {
  return m.nu_gamma(a);
}

// Binary-entry game with perfectly correlated actions: Y in {0,1}, costs U
// uniform on [0,1]^2, entry (Y=1) possible only when both costs are below
// theta. Gamma(1) = [0,theta]^2 and Gamma(0) = [0,1]^2, hence
// nu(Gamma({1})) = theta^2 and any set containing 0 maps onto everything.
class JovanovicModel final : public StructureModel {
 public:
  explicit JovanovicModel(double theta) : theta_(theta) {
    if (!(theta > 0.0) || !(theta <= 1.0)) {
      throw std::invalid_argument("jovanovic: theta must lie in (0, 1]");
    }
  }

  double nu_gamma(const RectSet& a) const override {
    if (a.discrete_dim != 1 || !a.continuous_upper.empty()) {
      throw InputError("jovanovic: expects sets over one discrete coordinate");
    }
    bool has0 = false, has1 = false;
    for (const auto& atom : a.discrete_part) {
      if (atom[0] == 0) {
        has0 = true;
      } else if (atom[0] == 1) {
        has1 = true;
      } else {
        throw InputError("jovanovic: code " + std::to_string(atom[0]) +
                         " is outside the declared space {0, 1}");
      }
    }
    if (a.complemented) {  // fold within the universe {0, 1}
      bool c0 = !has0, c1 = !has1;
      has0 = c0;
      has1 = c1;
    }
    if (has0) return 1.0;
    if (has1) return theta_ * theta_;
    return 0.0;
  }

  std::string name() const override { return "jovanovic"; }
  std::vector<double> theta() const override { return {theta_}; }
  std::vector<ParamBounds> theta_domain() const override {
    return {{0.0, 1.0, true, false}};
  }

 private:
  double theta_;
};

// The identified set of the entry game under observed entry probability p:
// internal consistency constrains only p <= theta^2.
inline std::pair<double, double> jovanovic_identified_set(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("identified set: p must lie in [0, 1]");
  }
  return {std::sqrt(p), 1.0};
}

// Skill-band structure on [0,1]: a job with requirement y can be filled by
// any skill in [max(0, y-s), min(1, y+s)], skills uniform on [0,1]. Images of
// half-lines are evaluated through the closed band, so
// nu(Gamma((-inf,y])) = min(1, y+s) and nu(Gamma([y,1])) = min(1, 1-y+s).
class TinbergenModel final : public StructureModel {
 public:
  explicit TinbergenModel(double s) : s_(s) {
    if (!(s >= 0.0) || !(s < 1.0)) {
      throw std::invalid_argument("tinbergen: s must lie in [0, 1)");
    }
  }

  double band() const { return s_; }

  double nu_gamma(const RectSet& a) const override {
    if (a.discrete_dim != 0 || a.continuous_upper.size() != 1) {
      throw InputError("tinbergen: expects sets over one continuous coordinate");
    }
    double y = a.continuous_upper[0];
    if (y == -empirical::kInf) return a.complemented ? 1.0 : 0.0;
    if (y == empirical::kInf) return a.complemented ? 0.0 : 1.0;
    if (!(y >= 0.0 && y <= 1.0)) {
      throw InputError("tinbergen: threshold " + std::to_string(y) +
                       " is outside the observation space [0, 1]");
    }
    return a.complemented ? std::min(1.0, 1.0 - y + s_) : std::min(1.0, y + s_);
  }

  std::string name() const override { return "tinbergen"; }
  std::vector<double> theta() const override { return {s_}; }
  std::vector<ParamBounds> theta_domain() const override {
    return {{0.0, 1.0, false, true}};
  }

 private:
  double s_;
};

// Internal consistency of a cdf F against the skill band requires
// F_nu(lower(y)) <= F(y) <= F_nu(upper(y)) for all y, i.e. F within these
// clamps pointwise.
inline std::pair<double, double> tinbergen_consistency_bounds(const TinbergenModel& m,
                                                              double y) {
  if (!(y >= 0.0 && y <= 1.0)) {
    throw std::invalid_argument("consistency bounds: y must lie in [0, 1]");
  }
  return {std::max(0.0, y - m.band()), std::min(1.0, y + m.band())};
}

// Generic finite structure: nu(Gamma(A)) tabulated for every element of a
// generated class, keyed by position in the canonical class ordering.
class TabulatedModel final : public StructureModel {
 public:
  TabulatedModel(std::vector<RectSet> cls, std::vector<double> values) {
    if (cls.size() != values.size()) {
      throw InputError("tabulated: need exactly one value per class element");
    }
    for (std::size_t i = 0; i < cls.size(); ++i) {
      if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
        throw InputError("tabulated: value for set " + std::to_string(i) +
                         " is outside [0, 1]");
      }
      if (!cls[i].complemented && cls[i].base_is_empty() && values[i] != 0.0) {
        throw InputError("tabulated: the empty set must map to 0");
      }
    }
    // Monotonicity on every pair whose inclusion is decidable.
    for (std::size_t i = 0; i < cls.size(); ++i) {
      for (std::size_t j = 0; j < cls.size(); ++j) {
        auto inc = empirical::rect_subset(cls[i], cls[j]);
        if (inc.has_value() && *inc && values[i] > values[j] + 1e-12) {
          throw InputError("tabulated: monotonicity violated between sets " +
                           std::to_string(i) + " and " + std::to_string(j));
        }
      }
    }
    entries_.reserve(cls.size());
    for (std::size_t i = 0; i < cls.size(); ++i) {
      entries_.emplace_back(std::move(cls[i]), values[i]);
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  // CSV rows (set_id, value) against the canonical ordering of `cls`; every
  // class element must be covered exactly once.
  static TabulatedModel load(const std::string& path, const std::vector<RectSet>& cls) {
    csv::Table t = csv::read_file(path);
    if (t.header.size() != 2) {
      throw InputError(path + ": expected two columns (set_id, nu_gamma)");
    }
    std::vector<double> values(cls.size());
    std::vector<bool> seen(cls.size(), false);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      double idv = csv::parse_double(t.rows[r][0], path, r + 2, t.header[0]);
      auto id = static_cast<std::size_t>(idv);
      if (idv != static_cast<double>(id) || id >= cls.size()) {
        throw InputError(path + ": row " + std::to_string(r + 2) +
                         ": set_id must be an integer in [0, " +
                         std::to_string(cls.size()) + ")");
      }
      if (seen[id]) {
        throw InputError(path + ": duplicate set_id " + std::to_string(id));
      }
      seen[id] = true;
      values[id] = csv::parse_double(t.rows[r][1], path, r + 2, t.header[1]);
    }
    for (std::size_t i = 0; i < cls.size(); ++i) {
      if (!seen[i]) {
        throw InputError(path + ": set_id " + std::to_string(i) + " is missing");
      }
    }
    return TabulatedModel(cls, values);
  }

  double nu_gamma(const RectSet& a) const override {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), a,
                               [](const auto& e, const RectSet& key) { return e.first < key; });
    if (it == entries_.end() || !(it->first == a)) {
      throw InputError("tabulated: set is not present in the tabulated class");
    }
    return it->second;
  }

  std::string name() const override { return "tabulated"; }
  std::vector<double> theta() const override { return {}; }
  std::vector<ParamBounds> theta_domain() const override { return {}; }

 private:
  std::vector<std::pair<RectSet, double>> entries_;
};

}  // namespace partialid::models
