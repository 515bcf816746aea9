// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "partialid/kstest.hpp"

namespace partialid::region {

using empirical::Sample;
using kstest::TestConfig;
using models::StructureModel;

// Per-parameter closed grid lo..hi with `steps` equally spaced points
// (endpoints included); the full grid is the Cartesian product.
struct GridSpec {
  struct Axis {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t steps = 0;
  };
  std::vector<Axis> axes;

  void validate() const {
    if (axes.empty()) throw std::invalid_argument("grid has no axes");
    for (const auto& a : axes) {
      if (!(a.lo < a.hi)) throw std::invalid_argument("grid requires lo < hi");
      if (a.steps < 2) throw std::invalid_argument("grid requires at least 2 steps");
    }
  }

  std::size_t size() const {
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.steps;
    return total;
  }

  std::vector<double> point(std::size_t index) const {
    std::vector<double> theta(axes.size());
    for (std::size_t d = axes.size(); d-- > 0;) {
      const auto& a = axes[d];
      std::size_t i = index % a.steps;
      index /= a.steps;
      theta[d] = a.lo + (a.hi - a.lo) * static_cast<double>(i) /
                            static_cast<double>(a.steps - 1);
    }
    return theta;
  }
};

struct RegionRow {
  std::vector<double> theta;
  double statistic = 0.0;
  double critical_value = 0.0;
  bool in_region = false;
};

struct RegionResult {
  std::vector<RegionRow> rows;  // grid order
};

struct RegionSummary {
  bool empty = true;              // model rejected at every grid point
  bool contiguous = true;         // included set equals its grid bounding box
  std::vector<double> lo, hi;     // per-parameter bounds of included points
};

using ModelFamily =
    std::function<std::unique_ptr<const StructureModel>(const std::vector<double>&)>;

// Inverts the test over the grid: theta is kept exactly when run_test with
// the same sample and the same master seed accepts at theta. The class, its
// membership rows and the bootstrap resamples do not depend on theta, so
// they are computed once and shared across grid points.
inline RegionResult confidence_region(const Sample& s, const ModelFamily& family,
                                      const GridSpec& grid, const TestConfig& cfg) {
  grid.validate();
  cfg.validate();
  auto cls = empirical::generate_class(s);
  auto pc = kstest::detail::prepare(s, cls);
  double h = cfg.bandwidth ? *cfg.bandwidth : kstest::default_bandwidth(s.n());
  auto diffs = kstest::detail::bootstrap_increments(pc, cfg.bootstrap, cfg.seed, cfg.threads);

  RegionResult result;
  result.rows.resize(grid.size());
  parallel_for(grid.size(), cfg.threads, [&](std::size_t g) {
    RegionRow row;
    row.theta = grid.point(g);
    std::unique_ptr<const StructureModel> model;
    try {
      model = family(row.theta);
    } catch (const std::exception& e) {
      throw InputError("model construction failed at grid point " + std::to_string(g) +
                       ": " + e.what());
    }
    auto nu = kstest::detail::evaluate_nu(*model, cls);
    row.statistic = kstest::detail::statistic_from(pc, nu);
    auto keep = kstest::detail::filtered_indices(pc, nu, h);
    auto draws = kstest::detail::draws_from_increments(diffs, cls.size(), cfg.bootstrap,
                                                       keep, pc.n);
    row.critical_value = kstest::bootstrap_quantile(std::move(draws), cfg.alpha);
    row.in_region = !(row.statistic > row.critical_value);
    result.rows[g] = std::move(row);
  });
  return result;
}

// Included-theta report. Non-contiguity means some excluded grid point lies
// inside the per-parameter bounding box of the included points (for one
// parameter this is exactly "the region is not an interval").
inline RegionSummary region_summary(const RegionResult& r) {
  if (r.rows.empty()) throw std::invalid_argument("region result is empty");
  RegionSummary s;
  const std::size_t dim = r.rows.front().theta.size();
  s.lo.assign(dim, 0.0);
  s.hi.assign(dim, 0.0);
  for (const auto& row : r.rows) {
    if (!row.in_region) continue;
    if (s.empty) {
      s.lo = row.theta;
      s.hi = row.theta;
      s.empty = false;
    } else {
      for (std::size_t d = 0; d < dim; ++d) {
        s.lo[d] = std::min(s.lo[d], row.theta[d]);
        s.hi[d] = std::max(s.hi[d], row.theta[d]);
      }
    }
  }
  if (s.empty) {
    s.contiguous = true;
    return s;
  }
  for (const auto& row : r.rows) {
    if (row.in_region) continue;
    bool inside_box = true;
    for (std::size_t d = 0; d < dim; ++d) {
      if (row.theta[d] < s.lo[d] || row.theta[d] > s.hi[d]) {
        inside_box = false;
        break;
      }
    }
    if (inside_box) {
      s.contiguous = false;
      break;
    }
  }
  return s;
}

}  // namespace partialid::region
