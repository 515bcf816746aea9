// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
//
// partial-id: internal-consistency tests and confidence regions for
// partially identified structures.

#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "partialid/empirical.hpp"
#include "partialid/errors.hpp"
#include "partialid/kstest.hpp"
#include "partialid/manifest.hpp"
#include "partialid/mc.hpp"
#include "partialid/models.hpp"
#include "partialid/oracle.hpp"
#include "partialid/parallel.hpp"
#include "partialid/region.hpp"

namespace {

using json = nlohmann::json;
using namespace partialid;

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + out_path);
  out << text;
}

std::optional<double> parse_bandwidth(const std::string& s) {
  if (s == "auto") return std::nullopt;
  double h = 0.0;
  try {
    std::size_t pos = 0;
    h = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
  } catch (const std::exception&) {
    throw std::invalid_argument("--bandwidth must be 'auto' or a positive number");
  }
  if (!(h > 0.0)) throw std::invalid_argument("--bandwidth must be positive");
  return h;
}

struct RangeSpec {
  double lo = 0.0, hi = 0.0;
  std::size_t steps = 0;
};

RangeSpec parse_range(const std::string& s, const char* flag) {
  RangeSpec r;
  std::istringstream in(s);
  char c1 = 0, c2 = 0;
  if (!(in >> r.lo >> c1 >> r.hi >> c2 >> r.steps) || c1 != ':' || c2 != ':' ||
      !in.eof()) {
    throw std::invalid_argument(std::string(flag) + " must look like lo:hi:steps");
  }
  return r;
}

struct ModelArgs {
  std::string name;
  double theta = 0.0;
  bool theta_set = false;
  double s = 0.0;
  bool s_set = false;
  std::string model_file;
};

// The entry-game model reads codes 0/1 literally; re-express dictionary
// codes through their labels so a file whose column happens to contain only
// "1" still means entry.
empirical::Sample bind_binary_sample(const empirical::Sample& s) {
  if (s.discrete_dim() != 1 || s.continuous_dim() != 0) {
    throw InputError("jovanovic: data must have exactly one discrete column");
  }
  std::vector<empirical::Observation> obs = s.observations();
  if (!s.labels().empty()) {
    const auto& lab = s.labels()[0];
    for (auto& o : obs) {
      const std::string& text = lab[static_cast<std::size_t>(o.discrete[0])];
      if (text == "0") {
        o.discrete[0] = 0;
      } else if (text == "1") {
        o.discrete[0] = 1;
      } else {
        throw InputError("jovanovic: discrete values must be 0 or 1, got '" + text + "'");
      }
    }
  } else {
    for (const auto& o : obs) {
      if (o.discrete[0] != 0 && o.discrete[0] != 1) {
        throw InputError("jovanovic: discrete values must be 0 or 1");
      }
    }
  }
  return empirical::Sample::from_observations(std::move(obs), s.labels());
}

std::unique_ptr<const models::StructureModel> make_model(const ModelArgs& args,
                                                         empirical::Sample& sample) {
  if (args.name == "jovanovic") {
    if (!args.theta_set) throw std::invalid_argument("jovanovic requires --theta");
    sample = bind_binary_sample(sample);
    return std::make_unique<models::JovanovicModel>(args.theta);
  }
  if (args.name == "tinbergen") {
    if (!args.s_set) throw std::invalid_argument("tinbergen requires --s");
    if (sample.discrete_dim() != 0 || sample.continuous_dim() != 1) {
      throw InputError("tinbergen: data must have exactly one continuous column");
    }
    return std::make_unique<models::TinbergenModel>(args.s);
  }
  if (args.name == "tabulated") {
    if (args.model_file.empty()) throw std::invalid_argument("tabulated requires --model-file");
    auto cls = empirical::generate_class(sample);
    return std::make_unique<models::TabulatedModel>(
        models::TabulatedModel::load(args.model_file, cls));
  }
  throw std::invalid_argument("unknown model '" + args.name +
                              "' (expected jovanovic, tinbergen or tabulated)");
}

oracle::DiscreteStructure load_structure(const std::string& path) {
  auto ends_with = [&](const char* suffix) {
    std::string s(suffix);
    return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
  };
  std::vector<double> p, q;
  std::vector<std::vector<bool>> allowed;
  if (ends_with(".json")) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw InputError(path + ": invalid JSON: " + e.what());
    }
    if (!j.contains("p") || !j.contains("q") || !j.contains("allowed")) {
      throw InputError(path + ": expected keys p, q, allowed");
    }
    p = j["p"].get<std::vector<double>>();
    q = j["q"].get<std::vector<double>>();
    for (const auto& row : j["allowed"]) {
      std::vector<bool> r;
      for (const auto& cell : row) r.push_back(cell.get<double>() != 0.0);
      allowed.push_back(std::move(r));
    }
  } else {
    // headerless CSV: row 1 = p, row 2 = q, then the m x k allowed matrix
    auto t = csv::read_file(path, /*expect_header=*/false);
    if (t.rows.size() < 3) throw InputError(path + ": expected p, q and allowed rows");
    for (std::size_t i = 0; i < t.rows[0].size(); ++i) {
      p.push_back(csv::parse_double(t.rows[0][i], path, 1, "p"));
    }
    for (std::size_t i = 0; i < t.rows[1].size(); ++i) {
      q.push_back(csv::parse_double(t.rows[1][i], path, 2, "q"));
    }
    for (std::size_t r = 2; r < t.rows.size(); ++r) {
      std::vector<bool> row;
      for (std::size_t j = 0; j < t.rows[r].size(); ++j) {
        row.push_back(csv::parse_double(t.rows[r][j], path, r + 1, "allowed") != 0.0);
      }
      allowed.push_back(std::move(row));
    }
  }
  return oracle::DiscreteStructure(std::move(p), std::move(q), allowed);
}

json manifest_common(const std::string& sub, const kstest::TestConfig& cfg) {
  json c;
  c["alpha"] = cfg.alpha;
  c["bootstrap"] = cfg.bootstrap;
  c["seed"] = cfg.seed;
  (void)sub;
  return c;
}

int cmd_test(const std::string& data_path, const std::string& schema_str,
             const ModelArgs& margs, kstest::TestConfig cfg, const std::string& out_path) {
  auto sample = empirical::load_sample(data_path, empirical::parse_schema(schema_str));
  auto model = make_model(margs, sample);
  if (!cfg.bandwidth) cfg.bandwidth = kstest::default_bandwidth(sample.n());
  auto res = kstest::run_test(sample, *model, cfg);

  RunManifest manifest;
  manifest.subcommand = "test";
  manifest.config = manifest_common("test", cfg);
  manifest.config["data"] = data_path;
  manifest.config["schema"] = schema_str;
  manifest.config["model"] = margs.name;
  if (margs.theta_set) manifest.config["theta"] = margs.theta;
  if (margs.s_set) manifest.config["s"] = margs.s;
  if (!margs.model_file.empty()) manifest.config["model_file"] = margs.model_file;
  manifest.config["bandwidth"] = *cfg.bandwidth;
  manifest.input_digest = digest_file(data_path);

  json out;
  out["manifest"] = manifest.to_json();
  out["n"] = sample.n();
  out["statistic"] = res.statistic;
  out["bandwidth"] = res.bandwidth_used;
  out["class_size"] = res.class_size;
  out["filtered_size"] = res.filtered_size;
  out["critical_value"] = res.critical_value;
  out["reject"] = res.reject;
  if (res.bootstrap_draws) out["bootstrap_draws"] = *res.bootstrap_draws;
  write_text(out_path, out.dump(2) + "\n");
  return 0;
}

int cmd_region(const std::string& data_path, const std::string& schema_str,
               const ModelArgs& margs, const std::vector<std::string>& grid_args,
               kstest::TestConfig cfg, const std::string& out_path) {
  auto sample = empirical::load_sample(data_path, empirical::parse_schema(schema_str));

  region::ModelFamily family;
  std::vector<models::ParamBounds> domain;
  if (margs.name == "jovanovic") {
    sample = bind_binary_sample(sample);
    domain = models::JovanovicModel(0.5).theta_domain();
    family = [](const std::vector<double>& th) {
      return std::make_unique<const models::JovanovicModel>(th.at(0));
    };
  } else if (margs.name == "tinbergen") {
    if (sample.discrete_dim() != 0 || sample.continuous_dim() != 1) {
      throw InputError("tinbergen: data must have exactly one continuous column");
    }
    domain = models::TinbergenModel(0.0).theta_domain();
    family = [](const std::vector<double>& th) {
      return std::make_unique<const models::TinbergenModel>(th.at(0));
    };
  } else {
    throw std::invalid_argument("region requires a parametric model (jovanovic or tinbergen)");
  }

  region::GridSpec grid;
  for (const auto& g : grid_args) {
    auto r = parse_range(g, "--grid");
    grid.axes.push_back({r.lo, r.hi, r.steps});
  }
  grid.validate();
  if (grid.axes.size() != domain.size()) {
    throw std::invalid_argument("model has " + std::to_string(domain.size()) +
                                " parameter(s); give one --grid per parameter");
  }
  for (std::size_t d = 0; d < domain.size(); ++d) {
    const auto& a = grid.axes[d];
    const auto& b = domain[d];
    bool lo_ok = b.lo_open ? a.lo > b.lo : a.lo >= b.lo;
    bool hi_ok = b.hi_open ? a.hi < b.hi : a.hi <= b.hi;
    if (!lo_ok || !hi_ok) {
      throw std::invalid_argument("--grid lies outside the model's parameter domain");
    }
  }

  if (!cfg.bandwidth) cfg.bandwidth = kstest::default_bandwidth(sample.n());
  auto result = region::confidence_region(sample, family, grid, cfg);
  auto summary = region::region_summary(result);

  RunManifest manifest;
  manifest.subcommand = "region";
  manifest.config = manifest_common("region", cfg);
  manifest.config["data"] = data_path;
  manifest.config["schema"] = schema_str;
  manifest.config["model"] = margs.name;
  manifest.config["grid"] = grid_args;
  manifest.config["bandwidth"] = *cfg.bandwidth;
  manifest.input_digest = digest_file(data_path);

  std::ostringstream out;
  out << "# manifest: " << manifest.to_json().dump() << "\n";
  for (std::size_t d = 0; d < grid.axes.size(); ++d) {
    out << (grid.axes.size() == 1 ? std::string("theta")
                                  : "theta" + std::to_string(d)) << ",";
  }
  out << "statistic,critical_value,in_region\n";
  for (const auto& row : result.rows) {
    for (double th : row.theta) out << fmt(th) << ",";
    out << fmt(row.statistic) << "," << fmt(row.critical_value) << ","
        << (row.in_region ? 1 : 0) << "\n";
  }
  json s;
  s["empty"] = summary.empty;
  s["contiguous"] = summary.contiguous;
  if (!summary.empty) {
    s["lo"] = summary.lo;
    s["hi"] = summary.hi;
  } else {
    s["note"] = "model rejected at every grid point at this level";
  }
  out << "# summary: " << s.dump() << "\n";
  write_text(out_path, out.str());
  return 0;
}

int cmd_oracle(const std::string& structure_path, const std::string& out_path) {
  auto d = load_structure(structure_path);
  auto witness = oracle::sup_deficiency_witness(d);
  auto coupling = oracle::feasible_coupling(d);
  bool consistent = witness.value <= oracle::kDeficiencyTol;
  bool agree = consistent == coupling.feasible;

  std::ostringstream out;
  out << "sup_deficiency: " << fmt(witness.value) << "\n";
  out << "internally_consistent: " << (consistent ? "yes" : "no") << "\n";
  out << "coupling_feasible: " << (coupling.feasible ? "yes" : "no")
      << " (max_flow: " << fmt(coupling.max_flow) << ")\n";
  out << "duality_agreement: " << (agree ? "yes" : "no") << "\n";
  if (!consistent) {
    out << "violated_set:";
    for (std::size_t i = 0; i < d.m(); ++i) {
      if (witness.argmax_mask & (1u << i)) out << " y" << i;
    }
    out << "\n";
  }
  if (coupling.feasible) {
    out << "coupling:\n";
    for (const auto& row : coupling.coupling) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        out << (j ? "," : "") << fmt(row[j]);
      }
      out << "\n";
    }
  }
  std::cout << out.str();

  if (!out_path.empty()) {
    RunManifest manifest;
    manifest.subcommand = "oracle";
    manifest.config["structure"] = structure_path;
    manifest.input_digest = digest_file(structure_path);
    json j;
    j["manifest"] = manifest.to_json();
    j["sup_deficiency"] = witness.value;
    j["internally_consistent"] = consistent;
    j["coupling_feasible"] = coupling.feasible;
    j["max_flow"] = coupling.max_flow;
    j["duality_agreement"] = agree;
    if (!consistent) {
      std::vector<std::size_t> vio;
      for (std::size_t i = 0; i < d.m(); ++i) {
        if (witness.argmax_mask & (1u << i)) vio.push_back(i);
      }
      j["violated_set"] = vio;
    }
    if (coupling.feasible) j["coupling"] = coupling.coupling;
    write_text(out_path, j.dump(2) + "\n");
  }
  return agree ? 0 : 1;
}

int cmd_mc(int table, bool sensitivity, std::size_t sens_n, double sens_alpha,
           const std::string& h_range, double dgp_s, mc::McConfig cfg,
           const std::string& out_path) {
  RunManifest manifest;
  manifest.subcommand = "mc";
  manifest.config["reps"] = cfg.reps;
  manifest.config["bootstrap"] = cfg.bootstrap;
  manifest.config["seed"] = cfg.seed;

  std::ostringstream out;
  auto emit_rows = [&](const mc::RejectionTable& t) {
    for (std::size_t ni = 0; ni < t.sample_sizes.size(); ++ni) {
      for (std::size_t ai = 0; ai < t.alphas.size(); ++ai) {
        out << t.sample_sizes[ni] << "," << fmt(t.alphas[ai]) << ","
            << fmt(t.bandwidths[ni]) << "," << fmt(t.rates[ni][ai]) << "\n";
      }
    }
  };

  if (sensitivity) {
    auto r = parse_range(h_range, "--h-range");
    std::vector<double> hs(r.steps);
    for (std::size_t i = 0; i < r.steps; ++i) {
      hs[i] = r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(r.steps - 1);
    }
    cfg.alphas = {sens_alpha};
    manifest.config["mode"] = "sensitivity";
    manifest.config["n"] = sens_n;
    manifest.config["alpha"] = sens_alpha;
    manifest.config["h_range"] = h_range;
    manifest.config["dgp_s"] = dgp_s;
    auto curve = mc::run_sensitivity(cfg, mc::DgpSpec{dgp_s}, sens_n, hs);
    out << "# manifest: " << manifest.to_json().dump() << "\n";
    out << "n,alpha,h,rejection_rate\n";
    for (std::size_t hi = 0; hi < curve.h_values.size(); ++hi) {
      out << curve.n << "," << fmt(sens_alpha) << "," << fmt(curve.h_values[hi]) << ","
          << fmt(curve.rates[hi][0]) << "\n";
    }
    write_text(out_path, out.str());
    return 0;
  }

  manifest.config["mode"] = "table";
  manifest.config["table"] = table;
  out << "n,alpha,h,rejection_rate\n";
  if (table == 4) {
    manifest.config["dgp_s"] = 0.15;
    manifest.config["bandwidth"] = "auto";
    emit_rows(mc::run_rejection_table(cfg, mc::DgpSpec{0.15}));
  } else if (table == 5) {
    manifest.config["dgp_s"] = 0.0;
    manifest.config["bandwidth"] = 1.0;
    cfg.bandwidth = 1.0;
    emit_rows(mc::run_rejection_table(cfg, mc::DgpSpec{0.0}));
  } else if (table == 6) {
    manifest.config["dgp_s"] = 0.15;
    for (const auto& row : mc::run_table6(cfg, mc::DgpSpec{0.15})) {
      out << row.n << "," << fmt(row.alpha) << "," << fmt(row.h) << "," << fmt(row.rate)
          << "\n";
    }
  } else {
    throw std::invalid_argument("--table must be 4, 5 or 6");
  }
  std::string header = "# manifest: " + manifest.to_json().dump() + "\n";
  write_text(out_path, header + out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Internal-consistency tests and confidence regions for partially identified structures"};
  app.set_version_flag("--version", std::string("partial-id ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  int threads = default_threads();
  app.add_option("--threads", threads, "Worker pool width (does not affect results)")
      ->check(CLI::PositiveNumber);

  std::string data_path, schema_str, out_path, bandwidth_str = "auto";
  ModelArgs margs;
  kstest::TestConfig tcfg;
  bool dump_draws = false;

  auto add_model_opts = [&](CLI::App* sub) {
    sub->add_option("--data", data_path, "CSV data file")->required();
    sub->add_option("--schema", schema_str, "Column roles, e.g. d,c")->required();
    sub->add_option("--model", margs.name, "jovanovic | tinbergen | tabulated")->required();
    sub->add_option("--theta", margs.theta, "Entry-game parameter")->each([&](const std::string&) {
      margs.theta_set = true;
    });
    sub->add_option("--s", margs.s, "Skill-band half width")->each([&](const std::string&) {
      margs.s_set = true;
    });
    sub->add_option("--model-file", margs.model_file, "Tabulated nu values (CSV)");
    sub->add_option("--alpha", tcfg.alpha, "Test level")->capture_default_str();
    sub->add_option("--bootstrap", tcfg.bootstrap, "Bootstrap replications")
        ->capture_default_str();
    sub->add_option("--bandwidth", bandwidth_str, "auto or a fixed h > 0")
        ->capture_default_str();
    sub->add_option("--seed", tcfg.seed, "Master seed")->capture_default_str();
    sub->add_option("--out", out_path, "Output file (default: stdout)");
  };

  auto* test_cmd = app.add_subcommand("test", "Test internal consistency at one parameter value");
  add_model_opts(test_cmd);
  test_cmd->add_flag("--dump-draws", dump_draws, "Store bootstrap draws in the output");

  auto* region_cmd = app.add_subcommand("region", "Invert the test over a parameter grid");
  add_model_opts(region_cmd);
  std::vector<std::string> grid_args;
  region_cmd->add_option("--grid", grid_args, "Parameter grid lo:hi:steps (one per parameter)")
      ->required();

  auto* oracle_cmd = app.add_subcommand("oracle", "Finite-structure consistency oracle");
  std::string structure_path;
  oracle_cmd->add_option("--structure", structure_path, "Structure file (JSON or CSV)")
      ->required();
  oracle_cmd->add_option("--out", out_path, "Optional JSON output file");

  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo rejection tables and sensitivity curves");
  int mc_table = 0;
  bool mc_sensitivity = false;
  std::size_t sens_n = 500;
  double sens_alpha = 0.05;
  double dgp_s = 0.15;
  std::string h_range = "0.005:0.15:30";
  mc::McConfig mcfg;
  auto* table_opt = mc_cmd->add_option("--table", mc_table, "Reproduce rejection table 4, 5 or 6");
  auto* sens_opt = mc_cmd->add_flag("--sensitivity", mc_sensitivity,
                                    "Rejection rate against the bandwidth");
  table_opt->excludes(sens_opt);
  mc_cmd->add_option("--reps", mcfg.reps, "Monte Carlo repetitions")->capture_default_str();
  mc_cmd->add_option("--bootstrap", mcfg.bootstrap, "Bootstrap replications")
      ->capture_default_str();
  mc_cmd->add_option("--seed", mcfg.seed, "Master seed")->capture_default_str();
  mc_cmd->add_option("--n", sens_n, "Sample size for --sensitivity")->capture_default_str();
  mc_cmd->add_option("--alpha", sens_alpha, "Level for --sensitivity")->capture_default_str();
  mc_cmd->add_option("--h-range", h_range, "Bandwidth grid lo:hi:steps")->capture_default_str();
  mc_cmd->add_option("--s", dgp_s, "Band parameter of the generating process")
      ->capture_default_str();
  mc_cmd->add_option("--out", out_path, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
    tcfg.threads = threads;
    tcfg.keep_draws = dump_draws;
    tcfg.bandwidth = parse_bandwidth(bandwidth_str);
    mcfg.threads = threads;

    if (*test_cmd) return cmd_test(data_path, schema_str, margs, tcfg, out_path);
    if (*region_cmd) return cmd_region(data_path, schema_str, margs, grid_args, tcfg, out_path);
    if (*oracle_cmd) return cmd_oracle(structure_path, out_path);
    if (*mc_cmd) {
      if (!mc_sensitivity && mc_table == 0) {
        throw std::invalid_argument("mc requires --table or --sensitivity");
      }
      return cmd_mc(mc_table, mc_sensitivity, sens_n, sens_alpha, h_range, dgp_s, mcfg,
                    out_path);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
