// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "partialid/rng.hpp"

using namespace partialid;

TEST_CASE("splitmix64 is reproducible from its seed", "[rng]") {
  rng::SplitMix64 a(1234), b(1234), c(1235);
  for (int i = 0; i < 100; ++i) {
    auto x = a.next();
    REQUIRE(x == b.next());
    if (i == 0) REQUIRE(x != c.next());
  }
}

TEST_CASE("derived streams depend on every key", "[rng]") {
  auto base = rng::derive(7, 1, 2);
  REQUIRE(base == rng::derive(7, 1, 2));
  REQUIRE(base != rng::derive(7, 2, 1));
  REQUIRE(base != rng::derive(8, 1, 2));
  REQUIRE(base != rng::derive(7, 1));
  REQUIRE(rng::derive(7) != rng::derive(7, 0));
}

TEST_CASE("uniform01 stays in the half-open unit interval", "[rng]") {
  rng::SplitMix64 gen(99);
  for (int i = 0; i < 10000; ++i) {
    double u = gen.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("uniform_below covers the range and respects the bound", "[rng]") {
  rng::SplitMix64 gen(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = gen.uniform_below(7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (int h : hits) REQUIRE(h > 0);
}

TEST_CASE("bootstrap counts sum to the sample size", "[rng]") {
  rng::SplitMix64 gen(42);
  std::vector<std::uint32_t> counts;
  for (std::size_t n : {1u, 5u, 100u, 1000u}) {
    rng::bootstrap_counts(gen, n, counts);
    REQUIRE(counts.size() == n);
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    REQUIRE(total == n);
  }
}
