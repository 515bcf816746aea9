// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "partialid/empirical.hpp"
#include "partialid/models.hpp"
#include "partialid/parallel.hpp"
#include "partialid/rng.hpp"

namespace partialid::kstest {

using empirical::RectSet;
using empirical::Sample;
using models::StructureModel;

struct TestConfig {
  double alpha = 0.05;
  int bootstrap = 1000;             // number of bootstrap replications B
  std::optional<double> bandwidth;  // fixed h, or automatic sqrt(lnln n / n)
  std::uint64_t seed = 0;
  int threads = 1;
  bool keep_draws = false;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (bootstrap < 1) throw std::invalid_argument("bootstrap replications must be >= 1");
    if (bandwidth && !(*bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  }
};

struct TestResult {
  double statistic = 0.0;
  double bandwidth_used = 0.0;
  std::size_t class_size = 0;
  std::size_t filtered_size = 0;
  double critical_value = 0.0;
  bool reject = false;
  std::optional<std::vector<double>> bootstrap_draws;
};

// Default tuning sequence h_n = sqrt(ln ln n / n); needs n >= 3 for a
// positive iterated logarithm.
inline double default_bandwidth(std::size_t n) {
  if (n < 3) throw std::invalid_argument("automatic bandwidth requires n >= 3");
  double nd = static_cast<double>(n);
  return std::sqrt(std::log(std::log(nd)) / nd);
}

// Rank of the upper-alpha bootstrap order statistic: the ceil(B(1-alpha))-th
// smallest draw, snapping B(1-alpha) to the nearest integer first so that
// binary-unrepresentable alphas (0.05, 0.1, ...) do not tip the ceiling.
inline std::size_t quantile_rank(std::size_t b_total, double alpha) {
  double x = static_cast<double>(b_total) * (1.0 - alpha);
  double snapped = std::round(x);
  double r = (std::abs(x - snapped) <= 1e-9 * std::max(1.0, x)) ? snapped : std::ceil(x);
  auto rank = static_cast<std::size_t>(r);
  return std::clamp<std::size_t>(rank, 1, b_total);
}

inline double bootstrap_quantile(std::vector<double> draws, double alpha) {
  if (draws.empty()) throw std::invalid_argument("no bootstrap draws");
  std::size_t rank = quantile_rank(draws.size(), alpha);
  std::nth_element(draws.begin(), draws.begin() + (rank - 1), draws.end());
  return draws[rank - 1];
}

namespace detail {

// Membership of every observation in every set, one bit row per set, plus
// the integer counts behind P_n. Built once and shared read-only by all
// bootstrap replications (and across grid points during inversion).
struct PreparedClass {
  std::vector<RectSet> sets;
  std::size_t n = 0;
  std::size_t words = 0;
  std::vector<std::uint64_t> bits;    // sets.size() x words
  std::vector<std::int64_t> counts;   // per set

  std::span<const std::uint64_t> row(std::size_t i) const {
    return {bits.data() + i * words, words};
  }
};

inline PreparedClass prepare(const Sample& s, std::span<const RectSet> cls) {
  PreparedClass pc;
  pc.sets.assign(cls.begin(), cls.end());
  pc.n = s.n();
  pc.words = (pc.n + 63) / 64;
  pc.bits.assign(cls.size() * pc.words, 0);
  pc.counts.assign(cls.size(), 0);
  for (std::size_t i = 0; i < cls.size(); ++i) {
    empirical::check_dims(s, cls[i]);
    std::uint64_t* row = pc.bits.data() + i * pc.words;
    std::int64_t c = 0;
    for (std::size_t j = 0; j < pc.n; ++j) {
      if (cls[i].contains(s.observations()[j])) {
        row[j >> 6] |= std::uint64_t{1} << (j & 63);
        ++c;
      }
    }
    pc.counts[i] = c;
  }
  return pc;
}

// Resample multiplicities expressed as level bitmasks: level t holds the
// indices drawn at least t+1 times, so a set's resampled count is the sum of
// popcounts of its row against each level.
struct LevelMasks {
  std::vector<std::uint64_t> masks;  // levels x words
  std::size_t levels = 0;
  std::size_t words = 0;

  void build(const std::vector<std::uint32_t>& counts, std::size_t words_in) {
    words = words_in;
    std::uint32_t max_mult = 0;
    for (auto c : counts) max_mult = std::max(max_mult, c);
    levels = max_mult;
    masks.assign(levels * words, 0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      for (std::uint32_t t = 0; t < counts[i]; ++t) {
        masks[t * words + (i >> 6)] |= std::uint64_t{1} << (i & 63);
      }
    }
  }

  std::int64_t resampled_count(std::span<const std::uint64_t> row) const {
    std::int64_t total = 0;
    for (std::size_t t = 0; t < levels; ++t) {
      const std::uint64_t* m = masks.data() + t * words;
      for (std::size_t w = 0; w < words; ++w) {
        total += std::popcount(row[w] & m[w]);
      }
    }
    return total;
  }
};

inline double scaled_sup(std::int64_t max_count_diff, std::size_t n) {
  double nd = static_cast<double>(n);
  return std::sqrt(nd) * (static_cast<double>(max_count_diff) / nd);
}

// Integer count differences (resampled - original) for every set and every
// replication, row-major in b. Replication b draws from the stream
// (seed, kBootstrapStream, b), so any scheduling yields the same matrix.
inline std::vector<std::int32_t> bootstrap_increments(const PreparedClass& pc, int b_total,
                                                      std::uint64_t seed, int threads) {
  const std::size_t nsets = pc.sets.size();
  std::vector<std::int32_t> diffs(static_cast<std::size_t>(b_total) * nsets);
  parallel_for(static_cast<std::size_t>(b_total), threads, [&](std::size_t b) {
    thread_local std::vector<std::uint32_t> counts;
    thread_local LevelMasks masks;
    rng::SplitMix64 gen(rng::derive(seed, rng::kBootstrapStream, b + 1));
    rng::bootstrap_counts(gen, pc.n, counts);
    masks.build(counts, pc.words);
    std::int32_t* out = diffs.data() + b * nsets;
    for (std::size_t i = 0; i < nsets; ++i) {
      out[i] = static_cast<std::int32_t>(masks.resampled_count(pc.row(i)) - pc.counts[i]);
    }
  });
  return diffs;
}

inline std::vector<double> draws_from_increments(std::span<const std::int32_t> diffs,
                                                 std::size_t nsets, int b_total,
                                                 std::span<const std::size_t> subset,
                                                 std::size_t n) {
  std::vector<double> draws(b_total);
  for (int b = 0; b < b_total; ++b) {
    const std::int32_t* row = diffs.data() + static_cast<std::size_t>(b) * nsets;
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i : subset) best = std::max<std::int64_t>(best, row[i]);
    draws[b] = scaled_sup(best, n);
  }
  return draws;
}

inline std::vector<double> bootstrap_draws(const PreparedClass& pc,
                                           std::span<const std::size_t> subset, int b_total,
                                           std::uint64_t seed, int threads) {
  std::vector<double> draws(b_total);
  parallel_for(static_cast<std::size_t>(b_total), threads, [&](std::size_t b) {
    thread_local std::vector<std::uint32_t> counts;
    thread_local LevelMasks masks;
    rng::SplitMix64 gen(rng::derive(seed, rng::kBootstrapStream, b + 1));
    rng::bootstrap_counts(gen, pc.n, counts);
    masks.build(counts, pc.words);
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i : subset) {
      best = std::max(best, masks.resampled_count(pc.row(i)) - pc.counts[i]);
    }
    draws[b] = scaled_sup(best, pc.n);
  });
  return draws;
}

inline std::vector<double> evaluate_nu(const StructureModel& m, std::span<const RectSet> cls) {
  std::vector<double> nu(cls.size());
  for (std::size_t i = 0; i < cls.size(); ++i) nu[i] = m.nu_gamma(cls[i]);
  return nu;
}

inline double statistic_from(const PreparedClass& pc, std::span<const double> nu) {
  double best = -empirical::kInf;
  for (std::size_t i = 0; i < pc.sets.size(); ++i) {
    double deficiency = static_cast<double>(pc.counts[i]) / static_cast<double>(pc.n) - nu[i];
    best = std::max(best, deficiency);
  }
  return std::sqrt(static_cast<double>(pc.n)) * best;
}

inline std::vector<std::size_t> filtered_indices(const PreparedClass& pc,
                                                 std::span<const double> nu, double h) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pc.sets.size(); ++i) {
    double pn = static_cast<double>(pc.counts[i]) / static_cast<double>(pc.n);
    if (pn >= nu[i] - h) keep.push_back(i);
  }
  return keep;
}

inline void require_contains_empty(std::span<const RectSet> cls) {
  for (const auto& r : cls) {
    if (!r.complemented && r.base_is_empty()) return;
  }
  throw std::invalid_argument("set class must contain the empty set");
}

}  // namespace detail

// T_n = sqrt(n) * sup over the class of [P_n(A) - nu(Gamma(A))]. The empty
// set contributes exactly zero, so the supremum is never negative.
inline double statistic(const Sample& s, const StructureModel& m,
                        std::span<const RectSet> cls) {
  if (cls.empty()) throw std::invalid_argument("set class is empty");
  detail::require_contains_empty(cls);
  auto pc = detail::prepare(s, cls);
  auto nu = detail::evaluate_nu(m, cls);
  return detail::statistic_from(pc, nu);
}

// Members of the class whose empirical deficiency is within h of binding:
// P_n(A) >= nu(Gamma(A)) - h. The empty set and the full space always pass.
inline std::vector<RectSet> filter_class(const Sample& s, const StructureModel& m,
                                         std::span<const RectSet> cls, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  auto pc = detail::prepare(s, cls);
  auto nu = detail::evaluate_nu(m, cls);
  std::vector<RectSet> out;
  for (std::size_t i : detail::filtered_indices(pc, nu, h)) out.push_back(cls[i]);
  return out;
}

// Draws B resamples, computes T^b = sqrt(n) * sup over the filtered class of
// [P^b(A) - P_n(A)], and returns the upper-alpha order statistic together
// with all draws (in replication order).
inline std::pair<double, std::vector<double>> bootstrap_critical_value(
    const Sample& s, std::span<const RectSet> filtered, const TestConfig& cfg) {
  cfg.validate();
  detail::require_contains_empty(filtered);
  auto pc = detail::prepare(s, filtered);
  std::vector<std::size_t> all(filtered.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto draws = detail::bootstrap_draws(pc, all, cfg.bootstrap, cfg.seed, cfg.threads);
  return {bootstrap_quantile(draws, cfg.alpha), std::move(draws)};
}

// The full procedure: build the data-driven class, compute the statistic,
// filter with the bandwidth, bootstrap the critical value, decide. The
// result is a pure function of (sample, model, config).
inline TestResult run_test(const Sample& s, const StructureModel& m, const TestConfig& cfg) {
  cfg.validate();
  auto cls = empirical::generate_class(s);
  auto pc = detail::prepare(s, cls);
  auto nu = detail::evaluate_nu(m, cls);

  TestResult res;
  res.class_size = cls.size();
  res.statistic = detail::statistic_from(pc, nu);
  res.bandwidth_used = cfg.bandwidth ? *cfg.bandwidth : default_bandwidth(s.n());
  auto keep = detail::filtered_indices(pc, nu, res.bandwidth_used);
  res.filtered_size = keep.size();
  auto draws = detail::bootstrap_draws(pc, keep, cfg.bootstrap, cfg.seed, cfg.threads);
  res.critical_value = bootstrap_quantile(draws, cfg.alpha);
  res.reject = res.statistic > res.critical_value;
  if (cfg.keep_draws) res.bootstrap_draws = std::move(draws);
  return res;
}

}  // namespace partialid::kstest
