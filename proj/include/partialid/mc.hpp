// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "partialid/empirical.hpp"
#include "partialid/kstest.hpp"
#include "partialid/models.hpp"
#include "partialid/parallel.hpp"
#include "partialid/rng.hpp"

namespace partialid::mc {

// Data-generating process for the skill-band experiment: jobs on [0,1] whose
// cdf F rises on [s, 1-s] in three linear branches, touching the band
// envelope min(1, y+s) on the outer branches and max(0, y-s) in between.
// s < 1/3 keeps the five branches ordered.
struct DgpSpec {
  double s = 0.15;

  void validate() const {
    if (!(s >= 0.0 && s < 1.0 / 3.0)) {
      throw std::invalid_argument("dgp: s must lie in [0, 1/3)");
    }
  }

  double cdf(double y) const {
    validate();
    if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("dgp cdf: y must lie in [0, 1]");
    if (y < s) return 0.0;
    if (y < (1.0 + s) / 3.0) return y - s;
    if (y < (2.0 - s) / 3.0) return ((1.0 + 4.0 * s) * y - 3.0 * s) / (1.0 - 2.0 * s);
    if (y < 1.0 - s) return y + s;
    return 1.0;
  }

  double inverse_cdf(double u) const {
    validate();
    if (!(u >= 0.0 && u <= 1.0)) {
      throw std::invalid_argument("dgp inverse cdf: u must lie in [0, 1]");
    }
    if (u < (1.0 - 2.0 * s) / 3.0) return u + s;
    if (u < (2.0 + 2.0 * s) / 3.0) return (u * (1.0 - 2.0 * s) + 3.0 * s) / (1.0 + 4.0 * s);
    return u - s;
  }
};

struct McConfig {
  std::size_t reps = 1000;
  std::vector<std::size_t> sample_sizes = {100, 500, 1000};
  std::vector<double> alphas = {0.01, 0.05, 0.10};
  int bootstrap = 1000;
  std::optional<double> bandwidth;  // fixed h for every n, or automatic
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const {
    if (reps < 1) throw std::invalid_argument("mc: reps must be >= 1");
    if (bootstrap < 1) throw std::invalid_argument("mc: bootstrap must be >= 1");
    if (sample_sizes.empty()) throw std::invalid_argument("mc: no sample sizes");
    for (std::size_t n : sample_sizes) {
      if (n < 3) throw std::invalid_argument("mc: sample sizes must be >= 3");
    }
    if (alphas.empty()) throw std::invalid_argument("mc: no levels");
    for (double a : alphas) {
      if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("mc: levels must lie in (0, 1)");
    }
    if (bandwidth && !(*bandwidth > 0.0)) throw std::invalid_argument("mc: bandwidth must be > 0");
  }
};

struct RejectionTable {
  std::vector<std::size_t> sample_sizes;
  std::vector<double> alphas;
  std::vector<double> bandwidths;          // resolved h per sample size
  std::vector<std::vector<double>> rates;  // [sample size][alpha]
};

struct SensitivityCurve {
  std::size_t n = 0;
  std::vector<double> h_values;
  std::vector<double> alphas;
  std::vector<std::vector<double>> rates;  // [h][alpha]
};

namespace detail {

// The experiment's set class, as in the simulation write-up: the closed
// intervals [0, Y_i] and [Y_i, 1] at the sample points (the empty set and
// full space contribute a zero baseline). For sorted data the empirical
// masses are ranks, which keeps the whole bootstrap in integer arithmetic.
struct IntervalClass {
  std::size_t n = 0;
  std::vector<std::int64_t> pn_count;  // per set, 2n entries: lower sets then upper sets
  std::vector<double> nu;              // nu(Gamma(A)) per set
  std::vector<std::int64_t> le;        // #{j: y_j <= y_i}, per sorted index
  std::vector<std::int64_t> lt;        // #{j: y_j <  y_i}

  void build(const std::vector<double>& y_sorted, double s_model) {
    n = y_sorted.size();
    pn_count.resize(2 * n);
    nu.resize(2 * n);
    le.resize(n);
    lt.resize(n);
    for (std::size_t a = 0; a < n;) {
      std::size_t b = a;
      while (b < n && y_sorted[b] == y_sorted[a]) ++b;
      for (std::size_t i = a; i < b; ++i) {
        lt[i] = static_cast<std::int64_t>(a);
        le[i] = static_cast<std::int64_t>(b);
      }
      a = b;
    }
    for (std::size_t i = 0; i < n; ++i) {
      pn_count[i] = le[i];
      nu[i] = std::min(1.0, y_sorted[i] + s_model);
      pn_count[n + i] = static_cast<std::int64_t>(n) - lt[i];
      nu[n + i] = std::min(1.0, 1.0 - y_sorted[i] + s_model);
    }
  }

  double statistic() const {
    double nd = static_cast<double>(n);
    double best = 0.0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      best = std::max(best, static_cast<double>(pn_count[k]) / nd - nu[k]);
    }
    return std::sqrt(nd) * best;
  }

  // filter threshold per set: A is kept at bandwidth h iff nu - P_n <= h
  double threshold(std::size_t k) const {
    return nu[k] - static_cast<double>(pn_count[k]) / static_cast<double>(n);
  }

  std::int64_t resampled_count(std::size_t k, std::span<const std::int64_t> cum) const {
    return k < n ? cum[le[k]] : static_cast<std::int64_t>(n) - cum[lt[k - n]];
  }
};

// Decisions for one simulated sample across every (h, alpha) pair. The
// bootstrap resamples are shared across bandwidths: sets are visited in
// order of increasing filter threshold, so each bandwidth's supremum is a
// prefix maximum.
inline void one_rep(std::size_t n, const DgpSpec& dgp, double s_model,
                    std::span<const double> h_values, std::span<const double> alphas,
                    int b_total, std::uint64_t rep_seed, std::uint8_t* reject_out) {
  std::vector<double> y(n);
  rng::SplitMix64 data_gen(rng::derive(rep_seed, rng::kDataStream));
  for (auto& v : y) v = dgp.inverse_cdf(data_gen.uniform01());
  std::sort(y.begin(), y.end());

  IntervalClass cls;
  cls.build(y, s_model);
  const double t_stat = cls.statistic();
  const double nd = static_cast<double>(n);

  std::vector<std::size_t> order(2 * n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> t(2 * n);
  for (std::size_t k = 0; k < 2 * n; ++k) t[k] = cls.threshold(k);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
  std::vector<double> t_sorted(2 * n);
  for (std::size_t k = 0; k < 2 * n; ++k) t_sorted[k] = t[order[k]];

  std::vector<std::size_t> cuts(h_values.size());
  std::size_t cut_max = 0;
  for (std::size_t hi = 0; hi < h_values.size(); ++hi) {
    cuts[hi] = static_cast<std::size_t>(
        std::upper_bound(t_sorted.begin(), t_sorted.end(), h_values[hi]) - t_sorted.begin());
    cut_max = std::max(cut_max, cuts[hi]);
  }

  std::vector<std::vector<double>> draws(h_values.size(), std::vector<double>(b_total));
  std::vector<std::uint32_t> counts;
  std::vector<std::int64_t> cum(n + 1);
  std::vector<std::int64_t> prefix_best(2 * n);
  for (int b = 0; b < b_total; ++b) {
    rng::SplitMix64 gen(rng::derive(rep_seed, rng::kBootstrapStream, b + 1));
    rng::bootstrap_counts(gen, n, counts);
    cum[0] = 0;
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + counts[i];
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    for (std::size_t k = 0; k < cut_max; ++k) {
      std::size_t set_id = order[k];
      best = std::max(best, cls.resampled_count(set_id, cum) - cls.pn_count[set_id]);
      prefix_best[k] = best;
    }
    for (std::size_t hi = 0; hi < h_values.size(); ++hi) {
      std::int64_t sup = cuts[hi] > 0 ? std::max<std::int64_t>(prefix_best[cuts[hi] - 1], 0) : 0;
      draws[hi][b] = std::sqrt(nd) * (static_cast<double>(sup) / nd);
    }
  }

  for (std::size_t hi = 0; hi < h_values.size(); ++hi) {
    std::sort(draws[hi].begin(), draws[hi].end());
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
      std::size_t rank = kstest::quantile_rank(draws[hi].size(), alphas[ai]);
      reject_out[hi * alphas.size() + ai] = t_stat > draws[hi][rank - 1] ? 1 : 0;
    }
  }
}

// rates[h][alpha]; repetitions parallelize, each on the derived stream
// (master, n, rep), and the tallies are order-free integer sums.
inline std::vector<std::vector<double>> rejection_rates(
    std::size_t n, const DgpSpec& dgp, double s_model, std::span<const double> h_values,
    std::span<const double> alphas, std::size_t reps, int b_total, std::uint64_t master_seed,
    int threads) {
  const std::size_t cells = h_values.size() * alphas.size();
  std::vector<std::uint8_t> decisions(reps * cells);
  parallel_for(reps, threads, [&](std::size_t rep) {
    one_rep(n, dgp, s_model, h_values, alphas, b_total,
            rng::derive(master_seed, n, rep), decisions.data() + rep * cells);
  });
  std::vector<std::vector<double>> rates(h_values.size(),
                                         std::vector<double>(alphas.size(), 0.0));
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (std::size_t hi = 0; hi < h_values.size(); ++hi) {
      for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        rates[hi][ai] += decisions[rep * cells + hi * alphas.size() + ai];
      }
    }
  }
  for (auto& row : rates) {
    for (double& r : row) r /= static_cast<double>(reps);
  }
  return rates;
}

// Statistic of the interval class for an already sorted sample (test hook).
inline double interval_class_statistic(const std::vector<double>& y_sorted, double s_model) {
  IntervalClass cls;
  cls.build(y_sorted, s_model);
  return cls.statistic();
}

}  // namespace detail

// Rejection frequency per (n, alpha) with the tested band equal to the
// generating band (the null). Bandwidth follows cfg: fixed, or
// sqrt(lnln n / n) per sample size.
inline RejectionTable run_rejection_table(const McConfig& cfg, const DgpSpec& dgp) {
  cfg.validate();
  dgp.validate();
  RejectionTable out;
  out.sample_sizes = cfg.sample_sizes;
  out.alphas = cfg.alphas;
  for (std::size_t n : cfg.sample_sizes) {
    double h = cfg.bandwidth ? *cfg.bandwidth : kstest::default_bandwidth(n);
    out.bandwidths.push_back(h);
    auto rates = detail::rejection_rates(n, dgp, dgp.s, std::vector<double>{h}, cfg.alphas,
                                         cfg.reps, cfg.bootstrap, cfg.seed, cfg.threads);
    out.rates.push_back(rates.front());
  }
  return out;
}

// Rejection frequency against the bandwidth at one sample size. All
// bandwidths share samples and resamples, so for each repetition the
// decision is monotone in h by construction.
inline SensitivityCurve run_sensitivity(const McConfig& cfg, const DgpSpec& dgp, std::size_t n,
                                        std::vector<double> h_values) {
  cfg.validate();
  dgp.validate();
  if (h_values.empty()) throw std::invalid_argument("sensitivity: no bandwidth values");
  for (double h : h_values) {
    if (!(h > 0.0)) throw std::invalid_argument("sensitivity: bandwidths must be > 0");
  }
  SensitivityCurve out;
  out.n = n;
  out.h_values = std::move(h_values);
  out.alphas = cfg.alphas;
  out.rates = detail::rejection_rates(n, dgp, dgp.s, out.h_values, cfg.alphas, cfg.reps,
                                      cfg.bootstrap, cfg.seed, cfg.threads);
  return out;
}

// Rejection frequency when the tested band s_model is narrower than the
// generating band: the cdf leaves the tested envelope, so rates should climb
// toward one as n grows.
inline RejectionTable run_power(const McConfig& cfg, const DgpSpec& dgp, double s_model) {
  cfg.validate();
  dgp.validate();
  if (!(s_model >= 0.0 && s_model < 1.0)) {
    throw std::invalid_argument("power: s_model must lie in [0, 1)");
  }
  RejectionTable out;
  out.sample_sizes = cfg.sample_sizes;
  out.alphas = cfg.alphas;
  for (std::size_t n : cfg.sample_sizes) {
    double h = cfg.bandwidth ? *cfg.bandwidth : kstest::default_bandwidth(n);
    out.bandwidths.push_back(h);
    auto rates = detail::rejection_rates(n, dgp, s_model, std::vector<double>{h}, cfg.alphas,
                                         cfg.reps, cfg.bootstrap, cfg.seed, cfg.threads);
    out.rates.push_back(rates.front());
  }
  return out;
}

// Coverage of the binary-entry structure: fraction of repetitions in which
// each theta survives the test, with data Bernoulli(p_true). Repetitions
// share one sample and one set of resamples across the theta grid, exactly
// as the region inversion does, so each entry replays run_test at that
// theta with seed (master, n, rep). Uses the first entry of
// cfg.sample_sizes and cfg.alphas.
inline std::vector<double> run_coverage(const McConfig& cfg, double p_true,
                                        const std::vector<double>& theta_values) {
  cfg.validate();
  if (!(p_true >= 0.0 && p_true <= 1.0)) {
    throw std::invalid_argument("coverage: p must lie in [0, 1]");
  }
  if (theta_values.empty()) throw std::invalid_argument("coverage: no theta values");
  const std::size_t n = cfg.sample_sizes.front();
  const double alpha = cfg.alphas.front();
  const double h_fixed = cfg.bandwidth ? *cfg.bandwidth : kstest::default_bandwidth(n);

  std::vector<std::uint8_t> covered(cfg.reps * theta_values.size());
  parallel_for(cfg.reps, cfg.threads, [&](std::size_t rep) {
    std::uint64_t rep_seed = rng::derive(cfg.seed, n, rep);
    rng::SplitMix64 gen(rng::derive(rep_seed, rng::kDataStream));
    std::vector<empirical::Observation> obs(n);
    for (auto& o : obs) o.discrete = {gen.uniform01() < p_true ? 1 : 0};
    auto sample = empirical::Sample::from_observations(std::move(obs));
    auto cls = empirical::generate_class(sample);
    auto pc = kstest::detail::prepare(sample, cls);
    auto diffs = kstest::detail::bootstrap_increments(pc, cfg.bootstrap, rep_seed, 1);
    for (std::size_t ti = 0; ti < theta_values.size(); ++ti) {
      models::JovanovicModel model(theta_values[ti]);
      auto nu = kstest::detail::evaluate_nu(model, cls);
      double t_stat = kstest::detail::statistic_from(pc, nu);
      auto keep = kstest::detail::filtered_indices(pc, nu, h_fixed);
      auto draws = kstest::detail::draws_from_increments(diffs, cls.size(), cfg.bootstrap,
                                                         keep, pc.n);
      double c_star = kstest::bootstrap_quantile(std::move(draws), alpha);
      covered[rep * theta_values.size() + ti] = t_stat > c_star ? 0 : 1;
    }
  });

  std::vector<double> coverage(theta_values.size(), 0.0);
  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    for (std::size_t ti = 0; ti < theta_values.size(); ++ti) {
      coverage[ti] += covered[rep * theta_values.size() + ti];
    }
  }
  for (double& c : coverage) c /= static_cast<double>(cfg.reps);
  return coverage;
}

// The simulation write-up's bandwidth variations: two fixed h per sample
// size, chosen around the automatic rate.
inline const std::vector<std::pair<std::size_t, std::pair<double, double>>>&
table6_bandwidths() {
  static const std::vector<std::pair<std::size_t, std::pair<double, double>>> v = {
      {100, {0.05, 0.15}}, {500, {0.02, 0.10}}, {1000, {0.01, 0.07}}};
  return v;
}

struct Table6Row {
  std::size_t n;
  double h;
  double alpha;
  double rate;
};

inline std::vector<Table6Row> run_table6(const McConfig& cfg, const DgpSpec& dgp) {
  cfg.validate();
  dgp.validate();
  std::vector<Table6Row> rows;
  for (const auto& [n, hs] : table6_bandwidths()) {
    std::vector<double> h_pair = {hs.first, hs.second};
    auto rates = detail::rejection_rates(n, dgp, dgp.s, h_pair, cfg.alphas, cfg.reps,
                                         cfg.bootstrap, cfg.seed, cfg.threads);
    for (std::size_t hi = 0; hi < h_pair.size(); ++hi) {
      for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
        rows.push_back({n, h_pair[hi], cfg.alphas[ai], rates[hi][ai]});
      }
    }
  }
  return rows;
}

}  // namespace partialid::mc
