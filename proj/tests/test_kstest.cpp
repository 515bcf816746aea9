// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "partialid/kstest.hpp"
#include "partialid/mc.hpp"
#include "partialid/rng.hpp"
#include "test_util.hpp"

using namespace partialid;
using Catch::Approx;
using empirical::RectSet;

namespace {

RectSet entry_set(std::vector<int> codes) {
  RectSet r;
  r.discrete_dim = 1;
  std::sort(codes.begin(), codes.end());
  for (int c : codes) r.discrete_part.push_back({c});
  return r;
}

constexpr double kZ95 = 1.6448536269514722;  // standard normal 0.95 quantile

}  // namespace

TEST_CASE("default bandwidth follows sqrt(lnln n / n)", "[kstest]") {
  REQUIRE(kstest::default_bandwidth(1000) == Approx(0.044).margin(5e-4));
  REQUIRE(kstest::default_bandwidth(500) == Approx(0.060).margin(5e-4));
  REQUIRE(kstest::default_bandwidth(100) ==
          Approx(std::sqrt(std::log(std::log(100.0)) / 100.0)).margin(1e-12));
  REQUIRE(kstest::default_bandwidth(100) == Approx(0.120).margin(4e-3));
  REQUIRE_THROWS_AS(kstest::default_bandwidth(2), std::invalid_argument);
}

TEST_CASE("bootstrap quantile uses the upper order statistic", "[kstest]") {
  REQUIRE(kstest::quantile_rank(4, 0.25) == 3);
  REQUIRE(kstest::quantile_rank(1000, 0.05) == 950);
  REQUIRE(kstest::quantile_rank(1000, 0.10) == 900);
  REQUIRE(kstest::quantile_rank(1000, 0.01) == 990);
  REQUIRE(kstest::quantile_rank(5, 0.999) == 1);
  REQUIRE(kstest::bootstrap_quantile({0.0, 0.1, 0.2, 0.3}, 0.25) == 0.2);
  REQUIRE(kstest::bootstrap_quantile({0.3, 0.0, 0.2, 0.1}, 0.25) == 0.2);
}

TEST_CASE("entry-game statistic matches the enumerated subsets", "[kstest]") {
  auto s = testutil::bernoulli_sample(100, 30);
  auto cls = empirical::generate_class(s);
  // sqrt(100) * max(0, 0.30 - 0.25, 0.70 - 1, 0)
  REQUIRE(kstest::statistic(s, models::JovanovicModel(0.5), cls) ==
          Approx(0.5).margin(1e-12));
  REQUIRE(kstest::statistic(s, models::JovanovicModel(1.0), cls) == 0.0);
  REQUIRE(kstest::statistic(s, models::JovanovicModel(0.1), cls) ==
          Approx(2.9).margin(1e-12));
}

TEST_CASE("entry-game statistic equals its closed form exactly", "[kstest]") {
  rng::SplitMix64 gen(314);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 2 + gen.uniform_below(300);
    std::size_t k = gen.uniform_below(n + 1);
    double theta = 0.05 + 0.95 * gen.uniform01();
    auto s = testutil::bernoulli_sample(n, k);
    auto cls = empirical::generate_class(s);
    double lhs = kstest::statistic(s, models::JovanovicModel(theta), cls);
    double p_n = static_cast<double>(k) / static_cast<double>(n);
    double rhs = std::sqrt(static_cast<double>(n)) * std::max(0.0, p_n - theta * theta);
    REQUIRE(lhs == rhs);
  }
}

TEST_CASE("skill-band statistic over the generated class", "[kstest]") {
  auto s = testutil::continuous_sample({0.2, 0.5, 0.8});
  auto cls = empirical::generate_class(s);
  REQUIRE(kstest::statistic(s, models::TinbergenModel(0.15), cls) ==
          Approx(std::sqrt(3.0) * 0.05).margin(1e-12));
}

TEST_CASE("statistic preconditions", "[kstest]") {
  auto s = testutil::bernoulli_sample(10, 3);
  models::JovanovicModel m(0.5);
  REQUIRE_THROWS_AS(kstest::statistic(s, m, std::vector<RectSet>{}), std::invalid_argument);
  std::vector<RectSet> no_empty = {entry_set({1})};
  REQUIRE_THROWS_AS(kstest::statistic(s, m, no_empty), std::invalid_argument);
}

TEST_CASE("filter keeps near-binding sets", "[kstest]") {
  auto s = testutil::bernoulli_sample(10, 3);  // p_n = 0.30
  auto cls = empirical::generate_class(s);

  auto kept = kstest::filter_class(s, models::JovanovicModel(0.6), cls, 0.12);
  REQUIRE(kept.size() == 3);  // {0} fails: 0.70 < 1 - 0.12
  REQUIRE(std::find(kept.begin(), kept.end(), entry_set({0})) == kept.end());
  REQUIRE(std::find(kept.begin(), kept.end(), entry_set({1})) != kept.end());

  auto tight = kstest::filter_class(s, models::JovanovicModel(0.6), cls, 0.01);
  REQUIRE(tight.size() == 2);  // {1} fails too: 0.30 < 0.36 - 0.01
  REQUIRE(std::find(tight.begin(), tight.end(), entry_set({1})) == tight.end());

  REQUIRE(kstest::filter_class(s, models::JovanovicModel(0.6), cls, 1.0).size() == cls.size());
  REQUIRE_THROWS_AS(kstest::filter_class(s, models::JovanovicModel(0.6), cls, 0.0),
                    std::invalid_argument);
}

TEST_CASE("degenerate sample has a zero critical value", "[kstest]") {
  auto s = testutil::discrete_sample({7, 7, 7, 7, 7});
  auto cls = empirical::generate_class(s);
  kstest::TestConfig cfg;
  cfg.alpha = 0.05;
  cfg.bootstrap = 64;
  cfg.seed = 5;
  auto [c_star, draws] = kstest::bootstrap_critical_value(s, cls, cfg);
  REQUIRE(c_star == 0.0);
  for (double d : draws) REQUIRE(d == 0.0);
}

TEST_CASE("bootstrap critical value matches the binomial oracle", "[kstest]") {
  // With p_n = 0.30 and theta = 0.5, the filtered class at the automatic
  // bandwidth keeps only the zero baseline and the entry set, so each T^b is
  // max(sqrt(n) (p* - p_n), 0) with n p* ~ Binomial(100, 0.3).
  auto s = testutil::bernoulli_sample(100, 30);
  auto cls = empirical::generate_class(s);
  kstest::TestConfig cfg;
  cfg.alpha = 0.05;
  cfg.bootstrap = 1000;
  cfg.seed = 20240917;
  auto filtered = kstest::filter_class(s, models::JovanovicModel(0.5), cls,
                                       kstest::default_bandwidth(100));
  auto [c_star, draws] = kstest::bootstrap_critical_value(s, filtered, cfg);
  REQUIRE(draws.size() == 1000);

  // exact enumeration of the resampling distribution
  auto pmf = testutil::binomial_pmf(100, 0.3);
  double cdf = 0.0;
  int k95 = 0;
  for (int k = 0; k <= 100; ++k) {
    cdf += pmf[k];
    if (cdf >= 0.95) {
      k95 = k;
      break;
    }
  }
  double exact_quantile = std::max(0.0, (k95 - 30) / 10.0);
  REQUIRE(exact_quantile == 0.8);  // self-check of the enumeration

  double normal_limit = std::sqrt(0.3 * 0.7) * kZ95;
  REQUIRE(c_star == Approx(normal_limit).margin(0.05));
  REQUIRE(std::abs(c_star - exact_quantile) <= 0.1 + 1e-12);
}

TEST_CASE("run_test decides and is fully reproducible", "[kstest]") {
  kstest::TestConfig cfg;
  cfg.alpha = 0.05;
  cfg.bootstrap = 400;
  cfg.seed = 11;
  cfg.keep_draws = true;

  auto s = testutil::bernoulli_sample(100, 30);
  auto always_ok = kstest::run_test(s, models::JovanovicModel(1.0), cfg);
  REQUIRE(always_ok.statistic == 0.0);
  REQUIRE_FALSE(always_ok.reject);

  auto far_off = kstest::run_test(s, models::JovanovicModel(0.1), cfg);
  REQUIRE(far_off.statistic == Approx(2.9).margin(1e-12));
  REQUIRE(far_off.reject);
  REQUIRE(far_off.class_size == 4);
  REQUIRE(far_off.reject == (far_off.statistic > far_off.critical_value));

  auto again = kstest::run_test(s, models::JovanovicModel(0.1), cfg);
  REQUIRE(again.statistic == far_off.statistic);
  REQUIRE(again.critical_value == far_off.critical_value);
  REQUIRE(*again.bootstrap_draws == *far_off.bootstrap_draws);

  cfg.threads = 4;
  auto threaded = kstest::run_test(s, models::JovanovicModel(0.1), cfg);
  REQUIRE(threaded.critical_value == far_off.critical_value);
  REQUIRE(*threaded.bootstrap_draws == *far_off.bootstrap_draws);
}

TEST_CASE("rejection is monotone non-increasing in the bandwidth", "[kstest]") {
  rng::SplitMix64 gen(555);
  mc::DgpSpec dgp{0.15};
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 30 + gen.uniform_below(60);
    std::vector<double> vals(n);
    rng::SplitMix64 data(rng::derive(1000, trial));
    for (auto& v : vals) v = dgp.inverse_cdf(data.uniform01());
    auto s = testutil::continuous_sample(vals);
    models::TinbergenModel m(0.12);  // slightly misspecified, decisions vary
    auto cls = empirical::generate_class(s);

    kstest::TestConfig cfg;
    cfg.bootstrap = 200;
    cfg.seed = 99 + trial;
    double prev_c = -1.0;
    bool prev_reject = true;
    std::size_t prev_kept = 0;
    for (double h : {0.02, 0.05, 0.1, 0.3, 1.0}) {
      auto kept = kstest::filter_class(s, m, cls, h);
      REQUIRE(kept.size() >= prev_kept);
      prev_kept = kept.size();
      cfg.bandwidth = h;
      auto res = kstest::run_test(s, m, cfg);
      REQUIRE(res.critical_value >= prev_c);
      // once accepted at a small h, larger h cannot flip back to rejection
      if (!prev_reject) REQUIRE_FALSE(res.reject);
      prev_c = res.critical_value;
      prev_reject = res.reject;
    }
  }
}

TEST_CASE("decisions are invariant to a common positive rescaling", "[kstest]") {
  std::vector<double> draws = {0.0, 0.4, 0.1, 0.9, 0.6, 0.2, 0.5, 0.3};
  for (double t_stat : {0.05, 0.45, 0.95}) {
    bool base = t_stat > kstest::bootstrap_quantile(draws, 0.25);
    for (double c : {0.5, 3.0, 17.0}) {
      std::vector<double> scaled = draws;
      for (double& d : scaled) d *= c;
      REQUIRE((c * t_stat > kstest::bootstrap_quantile(scaled, 0.25)) == base);
    }
  }
}

TEST_CASE("band zero reduces to the classical KS distance", "[kstest]") {
  rng::SplitMix64 gen(2718);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 5 + gen.uniform_below(46);
    std::vector<double> vals(n);
    for (auto& v : vals) v = gen.uniform01();
    auto s = testutil::continuous_sample(vals);
    auto cls = empirical::generate_class(s);
    double lhs = kstest::statistic(s, models::TinbergenModel(0.0), cls);
    REQUIRE(lhs == Approx(testutil::ks_halfline_distance(vals)).margin(1e-12));
  }
}
