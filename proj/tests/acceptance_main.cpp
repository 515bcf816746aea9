// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one line per criterion, exit code = number of failures.
// --profile full  (default) runs the published-table scale (reps=1000, B=1000)
// --profile smoke runs reps=200, B=300 with widened tolerance bands.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "partialid/kstest.hpp"
#include "partialid/mc.hpp"
#include "partialid/oracle.hpp"
#include "partialid/region.hpp"
#include "partialid/rng.hpp"
#include "test_util.hpp"

using namespace partialid;

namespace {

constexpr std::uint64_t kMasterSeed = 1;

struct Profile {
  std::string name = "full";
  std::size_t reps = 1000;
  int bootstrap = 1000;
  double widen = 0.0;          // added to every tolerance band
  double table4_budget = 900;  // seconds
};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& out, double seconds) {
  std::printf("[%s] criterion %d: %s (%s; %.1fs)\n", out.pass ? "PASS" : "FAIL", id,
              name.c_str(), out.detail.str().c_str(), seconds);
  std::fflush(stdout);
  if (!out.pass) ++g_failures;
}

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
  auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    fn(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << "exception: " << e.what();
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(id, name, out, seconds);
}

void check_cells(Outcome& out, const mc::RejectionTable& got,
                 const std::vector<std::vector<double>>& paper, double tol) {
  double worst = 0.0;
  std::string worst_cell;
  for (std::size_t ai = 0; ai < got.alphas.size(); ++ai) {
    for (std::size_t ni = 0; ni < got.sample_sizes.size(); ++ni) {
      double dev = std::abs(got.rates[ni][ai] - paper[ai][ni]);
      if (dev > worst) {
        worst = dev;
        worst_cell = "n=" + std::to_string(got.sample_sizes[ni]) +
                     ",alpha=" + std::to_string(got.alphas[ai]);
      }
      if (dev > tol) out.pass = false;
    }
  }
  out.detail << "max |dev| " << worst << " at " << worst_cell << " vs band " << tol;
}

void print_table(const mc::RejectionTable& t, const char* label) {
  std::printf("  %s rates:\n", label);
  for (std::size_t ai = 0; ai < t.alphas.size(); ++ai) {
    std::printf("    alpha=%.2f:", t.alphas[ai]);
    for (std::size_t ni = 0; ni < t.sample_sizes.size(); ++ni) {
      std::printf(" %.3f", t.rates[ni][ai]);
    }
    std::printf("\n");
  }
  std::fflush(stdout);
}

oracle::DiscreteStructure random_structure(rng::SplitMix64& gen) {
  std::size_t m = 1 + gen.uniform_below(8);
  std::size_t k = 1 + gen.uniform_below(8);
  auto masses = [&](std::size_t count) {
    std::vector<double> v(count);
    double total = 0.0;
    for (auto& x : v) {
      x = -std::log(1.0 - gen.uniform01());
      total += x;
    }
    for (auto& x : v) x /= total;
    return v;
  };
  std::vector<std::vector<bool>> allowed(m, std::vector<bool>(k, false));
  for (std::size_t i = 0; i < m; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < k; ++j) {
      allowed[i][j] = gen.uniform01() < 0.45;
      any = any || allowed[i][j];
    }
    if (!any) allowed[i][gen.uniform_below(k)] = true;
  }
  return oracle::DiscreteStructure(masses(m), masses(k), allowed);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& cli, const std::string& args, const std::string& log) {
  std::string cmd = cli + " " + args + " > " + log + " 2>&1";
  int status = std::system(cmd.c_str());
  return status < 0 ? -1 : WEXITSTATUS(status);
}

}  // namespace

int main(int argc, char** argv) {
  Profile profile;
  std::string cli_path;
  int threads = default_threads();
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    auto next = [&] {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "missing value for %s\n", arg.c_str());
        std::exit(2);
      }
      return std::string(argv[++i]);
    };
    if (arg == "--cli") {
      cli_path = next();
    } else if (arg == "--profile") {
      std::string p = next();
      if (p == "smoke") {
        profile = Profile{"smoke", 200, 300, 0.02, 60};
      } else if (p != "full") {
        std::fprintf(stderr, "unknown profile '%s'\n", p.c_str());
        return 2;
      }
    } else if (arg == "--threads") {
      threads = std::stoi(next());
    } else {
      std::fprintf(stderr, "unknown flag '%s'\n", arg.c_str());
      return 2;
    }
  }
  std::printf("acceptance profile=%s reps=%zu bootstrap=%d seed=%llu threads=%d\n",
              profile.name.c_str(), profile.reps, profile.bootstrap,
              static_cast<unsigned long long>(kMasterSeed), threads);

  mc::McConfig base;
  base.reps = profile.reps;
  base.bootstrap = profile.bootstrap;
  base.seed = kMasterSeed;
  base.threads = threads;

  criterion(1, "rejection table, partially identified band", [&](Outcome& out) {
    auto start = std::chrono::steady_clock::now();
    auto table = mc::run_rejection_table(base, mc::DgpSpec{0.15});
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    print_table(table, "partially identified");
    check_cells(out, table,
                {{0.001, 0.007, 0.008}, {0.010, 0.024, 0.029}, {0.029, 0.049, 0.066}},
                0.02 + profile.widen);
    // conservativeness under the null: no cell may exceed alpha by more than
    // three binomial standard errors
    for (std::size_t ai = 0; ai < table.alphas.size(); ++ai) {
      double a = table.alphas[ai];
      double cap = a + 3.0 * std::sqrt(a * (1.0 - a) / static_cast<double>(profile.reps));
      for (std::size_t ni = 0; ni < table.sample_sizes.size(); ++ni) {
        if (table.rates[ni][ai] > cap) {
          out.pass = false;
          out.detail << "; null rate " << table.rates[ni][ai] << " above cap " << cap;
        }
      }
    }
    if (elapsed > profile.table4_budget) {
      out.pass = false;
      out.detail << "; over time budget " << profile.table4_budget << "s";
    }
  });

  criterion(2, "rejection table, exactly identified benchmark", [&](Outcome& out) {
    auto cfg = base;
    cfg.bandwidth = 1.0;
    auto table = mc::run_rejection_table(cfg, mc::DgpSpec{0.0});
    print_table(table, "exactly identified");
    check_cells(out, table,
                {{0.019, 0.024, 0.014}, {0.074, 0.079, 0.050}, {0.138, 0.135, 0.105}},
                0.03 + profile.widen);
  });

  criterion(3, "bandwidth sensitivity at n=500", [&](Outcome& out) {
    auto cfg = base;
    cfg.alphas = {0.05};
    auto cells = mc::run_sensitivity(cfg, mc::DgpSpec{0.15}, 500, {0.02, 0.10});
    double low_h = cells.rates[0][0], high_h = cells.rates[1][0];
    out.detail << "rate(h=0.02) " << low_h << " vs 0.049+-" << 0.02 + profile.widen
               << ", rate(h=0.10) " << high_h << " vs 0.017+-" << 0.015 + profile.widen;
    if (std::abs(low_h - 0.049) > 0.02 + profile.widen) out.pass = false;
    if (std::abs(high_h - 0.017) > 0.015 + profile.widen) out.pass = false;

    std::vector<double> hs(30);
    for (int i = 0; i < 30; ++i) hs[i] = 0.005 + (0.15 - 0.005) * i / 29.0;
    auto curve = mc::run_sensitivity(cfg, mc::DgpSpec{0.15}, 500, hs);
    bool monotone = true;
    for (std::size_t i = 1; i < hs.size(); ++i) {
      monotone = monotone && curve.rates[i][0] <= curve.rates[i - 1][0];
    }
    out.detail << "; curve monotone " << (monotone ? "yes" : "NO");
    if (!monotone) out.pass = false;
  });

  criterion(4, "duality oracle on random finite structures", [&](Outcome& out) {
    auto start = std::chrono::steady_clock::now();
    rng::SplitMix64 gen(rng::derive(kMasterSeed, 4));
    int agree = 0, feasible_count = 0;
    double worst_marginal = 0.0;
    const int total = 1000;
    for (int trial = 0; trial < total; ++trial) {
      auto d = random_structure(gen);
      bool by_deficiency = oracle::sup_deficiency(d) <= oracle::kDeficiencyTol;
      auto coupling = oracle::feasible_coupling(d);
      if (by_deficiency == coupling.feasible) ++agree;
      if (coupling.feasible) {
        ++feasible_count;
        for (std::size_t i = 0; i < d.m(); ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < d.k(); ++j) row += coupling.coupling[i][j];
          worst_marginal = std::max(worst_marginal, std::abs(row - d.p()[i]));
        }
        std::vector<double> cols(d.k(), 0.0);
        for (std::size_t i = 0; i < d.m(); ++i) {
          for (std::size_t j = 0; j < d.k(); ++j) cols[j] += coupling.coupling[i][j];
        }
        for (std::size_t j = 0; j < d.k(); ++j) {
          worst_marginal = std::max(worst_marginal, std::max(0.0, cols[j] - d.q()[j]));
        }
      }
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.detail << "agreement " << agree << "/" << total << " (" << feasible_count
               << " feasible), worst marginal residual " << worst_marginal << ", "
               << elapsed << "s";
    if (agree != total || worst_marginal > 1e-9 || elapsed > 10.0) out.pass = false;
  });

  criterion(5, "entry-game closed forms and region inversion", [&](Outcome& out) {
    rng::SplitMix64 gen(rng::derive(kMasterSeed, 5));
    int exact = 0;
    const int total = 200;
    for (int trial = 0; trial < total; ++trial) {
      std::size_t n = 2 + gen.uniform_below(500);
      std::size_t k = gen.uniform_below(n + 1);
      double theta = 0.05 + 0.95 * gen.uniform01();
      auto s = testutil::bernoulli_sample(n, k);
      double lhs = kstest::statistic(s, models::JovanovicModel(theta),
                                     empirical::generate_class(s));
      double p_n = static_cast<double>(k) / static_cast<double>(n);
      double rhs = std::sqrt(static_cast<double>(n)) * std::max(0.0, p_n - theta * theta);
      if (lhs == rhs) ++exact;
    }
    out.detail << "statistic identity exact " << exact << "/" << total;
    if (exact != total) out.pass = false;

    auto ident = models::jovanovic_identified_set(0.25);
    if (ident.first != 0.5 || ident.second != 1.0) {
      out.pass = false;
      out.detail << "; identified set wrong";
    }

    auto s = testutil::bernoulli_sample(10000, 2500);
    region::GridSpec grid;
    grid.axes.push_back({0.05, 1.0, 20});
    kstest::TestConfig cfg;
    cfg.alpha = 0.05;
    cfg.bootstrap = profile.bootstrap;
    cfg.seed = kMasterSeed;
    cfg.threads = threads;
    auto family = [](const std::vector<double>& th) {
      return std::make_unique<const models::JovanovicModel>(th.at(0));
    };
    auto result = region::confidence_region(s, family, grid, cfg);
    auto summary = region::region_summary(result);
    const double step = (1.0 - 0.05) / 19.0;
    out.detail << "; region [" << summary.lo[0] << ", " << summary.hi[0] << "]";
    if (summary.empty || !summary.contiguous || summary.hi[0] != 1.0 ||
        std::abs(summary.lo[0] - 0.5) > step + 1e-9) {
      out.pass = false;
    }
  });

  criterion(6, "boundary and interior coverage", [&](Outcome& out) {
    auto cfg = base;
    cfg.sample_sizes = {1000};
    cfg.alphas = {0.05};
    auto coverage = mc::run_coverage(cfg, 0.25, {0.40, 0.5, 0.75, 1.0});
    double lo = profile.widen > 0 ? 0.90 : 0.92;
    double hi = profile.widen > 0 ? 1.0 : 0.99;
    double interior_floor = profile.widen > 0 ? 0.98 : 0.99;
    double outside_cap = profile.widen > 0 ? 0.02 : 0.01;
    out.detail << "boundary " << coverage[1] << " in [" << lo << ", " << hi
               << "], interior " << coverage[2] << "/" << coverage[3] << " >= "
               << interior_floor << ", far outside " << coverage[0] << " <= " << outside_cap;
    if (coverage[1] < lo || coverage[1] > hi) out.pass = false;
    if (coverage[2] < interior_floor || coverage[3] < interior_floor) out.pass = false;
    if (coverage[0] > outside_cap) out.pass = false;
  });

  criterion(7, "consistency under a too-narrow band", [&](Outcome& out) {
    auto cfg = base;
    cfg.alphas = {0.05};
    auto table = mc::run_power(cfg, mc::DgpSpec{0.15}, 0.05);
    out.detail << "rates";
    bool monotone = true;
    for (std::size_t ni = 0; ni < table.sample_sizes.size(); ++ni) {
      out.detail << " " << table.rates[ni][0];
      if (ni > 0) monotone = monotone && table.rates[ni][0] >= table.rates[ni - 1][0];
    }
    if (!monotone) {
      out.pass = false;
      out.detail << " not monotone";
    }
    if (table.rates.back()[0] < 0.95) {
      out.pass = false;
      out.detail << " final rate below 0.95";
    }
  });

  criterion(8, "classical reduction of the statistic", [&](Outcome& out) {
    rng::SplitMix64 gen(rng::derive(kMasterSeed, 8));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::size_t n = 10 + gen.uniform_below(291);
      std::vector<double> vals(n);
      for (auto& v : vals) v = gen.uniform01();
      auto s = testutil::continuous_sample(vals);
      double lhs =
          kstest::statistic(s, models::TinbergenModel(0.0), empirical::generate_class(s));
      worst = std::max(worst, std::abs(lhs - testutil::ks_halfline_distance(vals)));
    }
    out.detail << "max |dev| " << worst << " vs 1e-12 over 100 samples";
    if (worst > 1e-12) out.pass = false;
  });

  criterion(9, "byte-identical reruns across thread counts", [&](Outcome& out) {
    if (cli_path.empty()) {
      out.pass = false;
      out.detail << "no --cli path given";
      return;
    }
    testutil::TempDir tmp;
    std::string data = tmp.file("d.csv", [] {
      std::string body = "entry\n";
      for (int i = 0; i < 200; ++i) body += (i < 60 ? "1\n" : "0\n");
      return body;
    }());

    auto compare = [&](const std::string& label, const std::string& args) {
      std::string a = tmp.path(label + "_a"), b = tmp.path(label + "_b"),
                  c = tmp.path(label + "_c");
      bool ok = run_cli(cli_path, args + " --threads 1 --out " + a, tmp.path("log")) == 0 &&
                run_cli(cli_path, args + " --threads 4 --out " + b, tmp.path("log")) == 0 &&
                run_cli(cli_path, args + " --threads 4 --out " + c, tmp.path("log")) == 0;
      std::string bytes = slurp(a);
      ok = ok && !bytes.empty() && bytes == slurp(b) && bytes == slurp(c);
      out.detail << label << (ok ? " ok; " : " DIFFERS; ");
      if (!ok) out.pass = false;
    };
    compare("test", "test --data " + data +
                        " --schema d --model jovanovic --theta 0.45 --bootstrap 300"
                        " --seed 99 --dump-draws");
    compare("region", "region --data " + data +
                          " --schema d --model jovanovic --grid 0.1:1.0:10"
                          " --bootstrap 200 --seed 5");
    compare("mc", "mc --table 4 --reps 20 --bootstrap 50 --seed 3");
  });

  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures;
}
