#pragma once

// Configuration loading, report writers, and the command runner behind
// the CLI.  A run is a pure function of (config, seed): every artifact
// is built in memory, hashed, then written, and the manifest lists every
// output file with its sha256 so reruns can be compared byte for byte.
//
// Config format: JSON with documented defaults forming the canonical
// default problem
//   d=1, n=8, M=32, T=1, steps=256, integrator="semi_implicit_ito",
//   h = constant (0,0,1), m0 = constant (1/2,0,0),
//   a=0, b=1, c=1, target = -m0, p=4, atom_count=2, K=4,
//   seed=0, paths=200
// Fields are specified as {"constant":[x,y,z]}, as
// {"modes":[{"c":0,"k":[1],"v":0.25}, ...]} with k per-axis mode indices,
// or as both together (constant applied first, then the listed modes).
// An empty config {} is valid.  CSV artifacts use 17 significant digits
// so every double round-trips exactly.

#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sllb/control.hpp"
#include "sllb/cost.hpp"
#include "sllb/dynamics.hpp"
#include "sllb/field.hpp"
#include "sllb/optimizer.hpp"
#include "sllb/verification.hpp"

namespace sllb {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int mdlen = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("sha256: EVP_MD_CTX_new failed");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &mdlen) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * mdlen);
  for (unsigned int i = 0; i < mdlen; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T field_or(const nlohmann::json& j, const std::string& key, const T& dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config." + key + ": " + e.what());
  }
}

} // namespace detail

inline SpectralField parse_field(const nlohmann::json& j, const BasisSpec& b,
                                 const std::string& where) {
  SpectralField f = zero_field(b);
  if (!j.contains("constant") && !j.contains("modes"))
    throw std::invalid_argument(where + ": expected \"constant\" or \"modes\"");
  if (j.contains("constant")) {
    const auto v = j.at("constant").get<std::vector<double>>();
    if (v.size() != 3)
      throw std::invalid_argument(where + ".constant: need exactly 3 components");
    for (int c = 0; c < 3; ++c) f.coeffs[c][0] = v[static_cast<std::size_t>(c)];
  }
  if (j.contains("modes")) {
    for (const auto& e : j.at("modes")) {
      const int c = e.at("c").get<int>();
      if (c < 0 || c > 2) throw std::invalid_argument(where + ".modes: component out of [0,2]");
      const auto k = e.at("k").get<std::vector<int>>();
      if (static_cast<int>(k.size()) != b.d)
        throw std::invalid_argument(where + ".modes: k needs " + std::to_string(b.d) +
                                    " indices");
      std::size_t flat = 0;
      for (int idx : k) {
        if (idx < 0 || idx >= b.n)
          throw std::invalid_argument(where + ".modes: index out of [0," +
                                      std::to_string(b.n - 1) + "]");
        flat = flat * static_cast<std::size_t>(b.n) + static_cast<std::size_t>(idx);
      }
      f.coeffs[c][flat] = e.at("v").get<double>();
    }
  }
  return f;
}

struct ExperimentSettings {
  std::vector<int> n_list = {4, 8, 16, 32};
  std::vector<double> dt_list;              // default T * 2^-6 .. 2^-10
  std::vector<double> deltas = {1e-2, 1e-3, 1e-4};
  SpectralField direction;                  // default constant (1,0,0)
};

struct RunSetup {
  SimConfig sim;
  CostSpec cost;
  ControlOperatorSpec op;
  RelaxedControlSchedule schedule;
  OptimizerConfig optimizer;
  ExperimentSettings experiments;
  int paths = 200;  // Monte Carlo paths for energy/uniqueness/consistency
};

inline RunSetup load_config(const nlohmann::json& j) {
  RunSetup s;

  BasisSpec b;
  b.d = detail::field_or(j, "d", 1);
  b.n = detail::field_or(j, "n", 8);
  b.M = detail::field_or(j, "M", 32);
  validate(b);

  s.sim.basis = b;
  s.sim.T = detail::field_or(j, "T", 1.0);
  s.sim.steps = detail::field_or(j, "steps", 256);
  s.sim.seed = detail::field_or<std::uint64_t>(j, "seed", 0);

  const std::string integ = detail::field_or<std::string>(j, "integrator", "semi_implicit_ito");
  if (integ == "euler_maruyama_ito")
    s.sim.integrator = Integrator::euler_maruyama_ito;
  else if (integ == "heun_stratonovich")
    s.sim.integrator = Integrator::heun_stratonovich;
  else if (integ == "semi_implicit_ito")
    s.sim.integrator = Integrator::semi_implicit_ito;
  else
    throw std::invalid_argument("config.integrator: unknown \"" + integ + "\"");

  const std::string mode = detail::field_or<std::string>(j, "mode", "full");
  if (mode == "full")
    s.sim.mode = DynamicsMode::full;
  else if (mode == "linear_only")
    s.sim.mode = DynamicsMode::linear_only;
  else if (mode == "noise_only")
    s.sim.mode = DynamicsMode::noise_only;
  else
    throw std::invalid_argument("config.mode: unknown \"" + mode + "\"");

  nlohmann::json m0_spec = nlohmann::json{{"constant", {0.5, 0.0, 0.0}}};
  if (j.contains("m0")) m0_spec = j.at("m0");
  s.sim.m0 = parse_field(m0_spec, b, "config.m0");
  nlohmann::json h_spec = nlohmann::json{{"constant", {0.0, 0.0, 1.0}}};
  if (j.contains("h")) h_spec = j.at("h");
  s.sim.h = parse_field(h_spec, b, "config.h");
  validate(s.sim);

  s.cost.a = detail::field_or(j, "a", 0.0);
  s.cost.b = detail::field_or(j, "b", 1.0);
  s.cost.c = detail::field_or(j, "c", 1.0);
  s.cost.target = j.contains("target") ? parse_field(j.at("target"), b, "config.target")
                                       : scaled(s.sim.m0, -1.0);
  validate(s.cost, b);

  const std::string opk = detail::field_or<std::string>(j, "control_operator", "additive");
  if (opk == "additive")
    s.op.kind = ControlOperatorSpec::Kind::additive;
  else if (opk == "pure_additive")
    s.op.kind = ControlOperatorSpec::Kind::pure_additive;
  else if (opk == "multiplicative")
    s.op.kind = ControlOperatorSpec::Kind::multiplicative;
  else
    throw std::invalid_argument("config.control_operator: unknown \"" + opk + "\"");

  const int p = detail::field_or(j, "p", 4);
  const int atom_count = detail::field_or(j, "atom_count", 2);
  const int K = detail::field_or(j, "K", 4);
  if (j.contains("schedule")) {
    try {
      s.schedule = schedule_from_json(j.at("schedule"), b);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("config.schedule: ") + e.what());
    }
    validate_schedule(s.schedule, s.sim.T);
  } else {
    s.schedule = zero_schedule(b, p, atom_count, K, s.sim.T);
  }

  s.paths = detail::field_or(j, "paths", 200);
  if (s.paths < 2) throw std::invalid_argument("config.paths: must be >= 2");

  const nlohmann::json opt = j.contains("optimizer") ? j.at("optimizer") : nlohmann::json::object();
  s.optimizer.population = detail::field_or(opt, "population", 16);
  s.optimizer.elite_fraction = detail::field_or(opt, "elite_fraction", 0.25);
  s.optimizer.iterations = detail::field_or(opt, "iterations", 20);
  s.optimizer.paths = detail::field_or(opt, "paths", 100);
  s.optimizer.base_seed = detail::field_or<std::uint64_t>(opt, "base_seed", s.sim.seed);
  s.optimizer.init_spread = detail::field_or(opt, "init_spread", 0.5);
  s.optimizer.atom_count = atom_count;
  s.optimizer.knot_count = K;
  s.optimizer.theta_dim = p;
  validate(s.optimizer, s.sim);

  const nlohmann::json ex = j.contains("experiments") ? j.at("experiments") : nlohmann::json::object();
  s.experiments.n_list = detail::field_or(ex, "n_list", std::vector<int>{4, 8, 16, 32});
  s.experiments.deltas = detail::field_or(ex, "deltas", std::vector<double>{1e-2, 1e-3, 1e-4});
  if (ex.contains("dt_list")) {
    s.experiments.dt_list = ex.at("dt_list").get<std::vector<double>>();
  } else {
    for (int e = 6; e <= 10; ++e) s.experiments.dt_list.push_back(s.sim.T / double(1 << e));
  }
  nlohmann::json dir_spec = nlohmann::json{{"constant", {1.0, 0.0, 0.0}}};
  if (ex.contains("direction")) dir_spec = ex.at("direction");
  s.experiments.direction = parse_field(dir_spec, b, "config.experiments.direction");

  return s;
}

inline RunSetup load_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  return load_config(j);
}

// ---------------------------------------------------------------------
// artifact builders

// Fixed verification table: one row per n, dt, or delta, empty cells for
// columns the experiment does not produce.
inline constexpr const char* kVerificationHeader =
    "n,dt,delta,sup_L2_sq,int_H1_sq,int_L4_4,sup_H1_sq,int_H2_sq,r_T,phi_integral,"
    "gronwall_ratio,slope,em_mean_L2_sq,heun_mean_L2_sq,abs_diff\n";

inline std::string trajectory_csv(const Trajectory& traj, const BasisOps& ops) {
  const BasisSpec& b = ops.basis();
  std::string out = "t,l2,h1,h2,l4,linf";
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < b.num_modes(); ++k) {
      out += ",c" + std::to_string(c) + "_k";
      if (b.d == 1)
        out += std::to_string(k);
      else
        out += std::to_string(k / b.n) + "_" + std::to_string(k % b.n);
    }
  out += "\n";
  for (std::size_t jd = 0; jd < traj.states.size(); ++jd) {
    const SpectralField& m = traj.states[jd];
    out += detail::fmt17(traj.times[jd]);
    out += "," + detail::fmt17(norm(m, NormKind::L2, ops));
    out += "," + detail::fmt17(norm(m, NormKind::H1, ops));
    out += "," + detail::fmt17(norm(m, NormKind::H2, ops));
    out += "," + detail::fmt17(norm(m, NormKind::L4, ops));
    out += "," + detail::fmt17(norm(m, NormKind::Linf, ops));
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < b.num_modes(); ++k)
        out += "," + detail::fmt17(m.coeffs[c][static_cast<std::size_t>(k)]);
    out += "\n";
  }
  return out;
}

inline std::string energy_csv(const GalerkinStudy& study) {
  std::string out = kVerificationHeader;
  for (std::size_t i = 0; i < study.n_values.size(); ++i) {
    const auto means = energy_means(study.reports[i]);
    out += std::to_string(study.n_values[i]) + ",,";
    for (double v : means) out += "," + detail::fmt17(v);
    out += ",,,,,,,\n"; // r_T..abs_diff unused
  }
  return out;
}

inline nlohmann::json energy_json(const GalerkinStudy& study) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < study.n_values.size(); ++i) {
    const EnergyReport& r = study.reports[i];
    rows.push_back({{"n", study.n_values[i]},
                    {"sup_L2_sq", {{"mean", r.sup_L2_sq.mean}, {"std_error", r.sup_L2_sq.std_error}}},
                    {"int_H1_sq", {{"mean", r.int_H1_sq.mean}, {"std_error", r.int_H1_sq.std_error}}},
                    {"int_L4_4", {{"mean", r.int_L4_4.mean}, {"std_error", r.int_L4_4.std_error}}},
                    {"sup_H1_sq", {{"mean", r.sup_H1_sq.mean}, {"std_error", r.sup_H1_sq.std_error}}},
                    {"int_H2_sq", {{"mean", r.int_H2_sq.mean}, {"std_error", r.int_H2_sq.std_error}}}});
  }
  nlohmann::json maxm, minm;
  for (int k = 0; k < 5; ++k) {
    maxm[kEnergyColumns[k]] = study.max_mean[static_cast<std::size_t>(k)];
    minm[kEnergyColumns[k]] = study.min_mean[static_cast<std::size_t>(k)];
  }
  return {{"levels", rows}, {"max_mean", maxm}, {"min_mean", minm}};
}

inline std::string uniqueness_csv(const std::vector<double>& deltas,
                                  const std::vector<UniquenessReport>& reps) {
  std::string out = kVerificationHeader;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    out += ",," + detail::fmt17(deltas[i]) + ",,,,,";
    out += "," + detail::fmt17(reps[i].r_T);
    out += "," + detail::fmt17(reps[i].phi_integral);
    out += "," + detail::fmt17(reps[i].gronwall_ratio);
    out += ",,,,\n"; // slope and consistency extras unused
  }
  return out;
}

inline std::string r_curve_csv(const UniquenessReport& rep) {
  std::string out = "t,r\n";
  for (std::size_t jd = 0; jd < rep.r.size(); ++jd)
    out += detail::fmt17(rep.times[jd]) + "," + detail::fmt17(rep.r[jd]) + "\n";
  return out;
}

inline std::string consistency_csv(const ConsistencyTable& table) {
  std::string out = kVerificationHeader;
  for (const auto& row : table.rows) {
    out += "," + detail::fmt17(row.dt) + ",,,,,,,,,";
    out += "," + detail::fmt17(table.slope);
    out += "," + detail::fmt17(row.em_mean_L2_sq);
    out += "," + detail::fmt17(row.heun_mean_L2_sq);
    out += "," + detail::fmt17(row.abs_diff) + "\n";
  }
  return out;
}

inline std::string trace_csv(const OptimizationTrace& trace) {
  std::string out = "iteration,best_J,std_error,kappa4_moment\n";
  for (const auto& row : trace.rows) {
    out += std::to_string(row.iteration);
    out += "," + detail::fmt17(row.best_J);
    out += "," + detail::fmt17(row.std_error);
    out += "," + detail::fmt17(row.kappa4_moment) + "\n";
  }
  return out;
}

inline nlohmann::json cost_report_json(const CostEstimate& est) {
  return {{"mean", est.mean},
          {"std_error", est.std_error},
          {"N", est.N},
          {"base_seed", est.base_seed}};
}

// ---------------------------------------------------------------------
// manifest and runner

struct RunManifest {
  std::string command;
  std::string config_path;   // as given on the command line; "" for inline
  std::string config_sha256; // hash of the raw config bytes
  std::uint64_t seed = 0;
  int paths = 0;
  std::string outdir;
  std::vector<std::pair<std::string, std::string>> files; // name -> sha256, sorted
};

inline nlohmann::json manifest_json(const RunManifest& m) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& [name, sha] : m.files) files.push_back({{"name", name}, {"sha256", sha}});
  return {{"command", m.command},      {"config_path", m.config_path},
          {"config_sha256", m.config_sha256}, {"seed", m.seed},
          {"paths", m.paths},          {"outdir", m.outdir},
          {"files", files}};
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace detail

// Executes one command, writes its artifacts plus manifest.json into
// outdir, and returns the manifest.  The manifest is written last, after
// every listed file, and records each file's sha256.
inline RunManifest run_command(const std::string& command, const RunSetup& setup,
                               const std::string& outdir, const std::string& config_path = "",
                               const std::string& config_text = "{}", bool quiet = true) {
  const std::filesystem::path dir(outdir);
  std::filesystem::create_directories(dir);

  RunManifest man;
  man.command = command;
  man.config_path = config_path;
  man.config_sha256 = sha256_hex(config_text);
  man.seed = setup.sim.seed;
  man.paths = (command == "optimize") ? setup.optimizer.paths : setup.paths;
  man.outdir = outdir;

  auto emit = [&](const std::string& name, const std::string& content) {
    detail::write_file(dir / name, content);
    man.files.emplace_back(name, sha256_hex(content));
    if (!quiet) std::fprintf(stdout, "wrote %s (%zu bytes)\n", (dir / name).c_str(), content.size());
  };

  const BasisOps ops(setup.sim.basis);
  if (command == "simulate") {
    const Trajectory traj = simulate(setup.sim, setup.schedule, setup.op,
                                     sample_wiener(setup.sim.T, setup.sim.steps, setup.sim.seed),
                                     ops);
    emit("trajectory.csv", trajectory_csv(traj, ops));
    const CostBreakdown parts = trajectory_cost_parts(setup.cost, traj, setup.schedule, ops);
    emit("cost.json", nlohmann::json{{"running", parts.running},
                                     {"terminal", parts.terminal},
                                     {"total", parts.total}}
                          .dump(2) +
                          "\n");
  } else if (command == "energy") {
    const GalerkinStudy study = galerkin_stability_study(
        setup.sim, setup.experiments.n_list, setup.schedule, setup.op, setup.paths, setup.sim.seed);
    emit("verification.csv", energy_csv(study));
    emit("energy.json", energy_json(study).dump(2) + "\n");
  } else if (command == "uniqueness") {
    std::vector<UniquenessReport> reps;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < setup.experiments.deltas.size(); ++i) {
      const double delta = setup.experiments.deltas[i];
      reps.push_back(pathwise_uniqueness_experiment(setup.sim, setup.schedule, setup.op, delta,
                                                    setup.experiments.direction, setup.sim.seed,
                                                    ops));
      const UniquenessReport& rep = reps.back();
      rows.push_back({{"delta", delta},
                      {"r_T", rep.r_T},
                      {"phi_integral", rep.phi_integral},
                      {"gronwall_ratio", rep.gronwall_ratio},
                      {"degenerate", rep.degenerate}});
      emit("r_curve_" + std::to_string(i) + ".csv", r_curve_csv(rep));
    }
    emit("verification.csv", uniqueness_csv(setup.experiments.deltas, reps));
    emit("uniqueness.json", rows.dump(2) + "\n");
  } else if (command == "consistency") {
    const ConsistencyTable table =
        ito_stratonovich_consistency(setup.sim, setup.schedule, setup.op,
                                     setup.experiments.dt_list, setup.paths, setup.sim.seed, ops);
    emit("verification.csv", consistency_csv(table));
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows)
      rows.push_back({{"dt", row.dt},
                      {"em_mean_L2_sq", row.em_mean_L2_sq},
                      {"heun_mean_L2_sq", row.heun_mean_L2_sq},
                      {"abs_diff", row.abs_diff}});
    emit("consistency.json", nlohmann::json{{"slope", table.slope}, {"rows", rows}}.dump(2) + "\n");
  } else if (command == "optimize") {
    const OptimizationTrace trace = optimize(setup.sim, setup.cost, setup.op, setup.optimizer);
    emit("trace.csv", trace_csv(trace));
    emit("best_schedule.json", schedule_to_json(trace.best_schedule).dump(2) + "\n");
    emit("cost.json", cost_report_json(trace.best_estimate).dump(2) + "\n");
    if (!trace.coercivity_ok)
      throw std::runtime_error("optimize: coercivity chain violated by an evaluated candidate");
  } else {
    throw std::invalid_argument("unknown command \"" + command +
                                "\" (expected simulate, energy, uniqueness, consistency, or "
                                "optimize)");
  }

  std::sort(man.files.begin(), man.files.end());
  detail::write_file(dir / "manifest.json", manifest_json(man).dump(2) + "\n");
  if (!quiet) std::fprintf(stdout, "wrote %s\n", (dir / "manifest.json").c_str());
  return man;
}

} // namespace sllb
