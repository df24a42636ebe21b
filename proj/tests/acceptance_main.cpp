// Acceptance runner: exercises the end-to-end guarantees of the
// laboratory on the canonical default problem and prints one PASS/FAIL
// line per criterion.  Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sllb/cli_io.hpp"

#include "oracles.hpp"

using namespace sllb;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

class Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool fields_equal(const SpectralField& x, const SpectralField& y) {
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < x.coeffs[c].size(); ++k)
      if (x.coeffs[c][k] != y.coeffs[c][k]) return false;
  return true;
}

// 1. Deterministic energy identity: defect of
//    1/2|m(T)|^2_{L2} + sum_j dt(|m|^2_{H1} + |m|^4_{L4}) - 1/2|m0|^2_{L2}
//    shrinks >= 1.8x per step doubling on the default problem with h = 0.
Result criterion1() {
  Timer timer;
  Result r;
  RunSetup s = load_config(nlohmann::json::object());
  s.sim.h = zero_field(s.sim.basis);
  const BasisOps ops(s.sim.basis);

  double defect[3] = {0, 0, 0};
  const int steps[3] = {256, 512, 1024};
  for (int i = 0; i < 3; ++i) {
    SimConfig cfg = s.sim;
    cfg.steps = steps[i];
    defect[i] = deterministic_energy_defect(cfg, ops);
  }
  const double r1 = defect[0] / defect[1];
  const double r2 = defect[1] / defect[2];
  r.seconds = timer.seconds();
  r.pass = r1 >= 1.8 && r2 >= 1.8 && r.seconds < 10.0;
  r.detail = "defect ratios " + fmt(r1) + ", " + fmt(r2) + " (>= 1.8)";
  return r;
}

// 2. Galerkin uniformity: energy statistics stay within a factor 2 across
//    n in {4,8,16,32} on a multi-mode problem with noise and a 2-atom
//    control, 200 paths, no blow-up.  m0 carries modes 1 and 2 so the
//    truncation levels genuinely differ.
Result criterion2() {
  Timer timer;
  Result r;
  RunSetup s = load_config(nlohmann::json::object());
  s.sim.m0.coeffs[1][1] = 0.2;
  s.sim.m0.coeffs[2][2] = 0.1;

  RelaxedControlSchedule q;
  q.knots = {0.0, s.sim.T};
  q.mixtures = {{{0.5, make_atom({0.25, -0.1}, s.sim.basis)},
                 {0.5, make_atom({-0.15, 0.2}, s.sim.basis)}}};

  double worst = 0.0;
  try {
    const GalerkinStudy study =
        galerkin_stability_study(s.sim, {4, 8, 16, 32}, q, s.op, 200, s.sim.seed);
    for (int k = 0; k < 5; ++k) {
      const double lo = study.min_mean[static_cast<std::size_t>(k)];
      const double hi = study.max_mean[static_cast<std::size_t>(k)];
      if (!(lo > 0.0)) {
        r.detail = std::string("column ") + kEnergyColumns[k] + " not positive";
        r.seconds = timer.seconds();
        return r;
      }
      worst = std::max(worst, hi / lo);
    }
  } catch (const blow_up_error& e) {
    r.detail = std::string("blow-up: ") + e.what();
    r.seconds = timer.seconds();
    return r;
  }
  r.seconds = timer.seconds();
  r.pass = worst <= 2.0 && r.seconds < 120.0;
  r.detail = "worst max/min over n and columns " + fmt(worst) + " (<= 2)";
  return r;
}

// 3. Ito/Stratonovich correction: scheme gap shrinks with slope >= 0.8 on
//    dt = T * 2^-6 .. 2^-10, 1000 paths.
Result criterion3() {
  Timer timer;
  Result r;
  const RunSetup s = load_config(nlohmann::json::object());
  const BasisOps ops(s.sim.basis);
  const ConsistencyTable table = ito_stratonovich_consistency(
      s.sim, s.schedule, s.op, s.experiments.dt_list, 1000, s.sim.seed, ops);
  r.seconds = timer.seconds();
  r.pass = std::isfinite(table.slope) && table.slope >= 0.8 && r.seconds < 120.0;
  r.detail = "log-log slope " + fmt(table.slope) + " (>= 0.8)";
  return r;
}

// 4. Pathwise uniqueness: delta = 0 gives r identically zero; r(T)/delta^2
//    is constant within 10% over three decades; Gronwall ratios finite.
//    Both d = 1 and d = 2.
Result criterion4() {
  Timer timer;
  Result r;
  bool ok = true;
  std::string note;

  const nlohmann::json configs[2] = {nlohmann::json::object(),
                                     {{"d", 2}, {"n", 8}, {"M", 32}}};
  for (const auto& j : configs) {
    const RunSetup s = load_config(j);
    const BasisOps ops(s.sim.basis);
    const auto& dir = s.experiments.direction;

    const UniquenessReport zero =
        pathwise_uniqueness_experiment(s.sim, s.schedule, s.op, 0.0, dir, s.sim.seed, ops);
    for (double v : zero.r) ok = ok && v == 0.0;

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double delta : {1e-2, 1e-3, 1e-4}) {
      const UniquenessReport rep =
          pathwise_uniqueness_experiment(s.sim, s.schedule, s.op, delta, dir, s.sim.seed, ops);
      const double ratio = rep.r_T / (delta * delta);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      ok = ok && std::isfinite(rep.gronwall_ratio);
    }
    ok = ok && hi / lo <= 1.1;
    note += (note.empty() ? "" : ", ") + std::string("d=") +
            std::to_string(s.sim.basis.d) + " spread " + fmt(hi / lo);
  }
  r.seconds = timer.seconds();
  r.pass = ok && r.seconds < 60.0;
  r.detail = note + " (<= 1.1)";
  return r;
}

// 5. Relaxed controls contain classical ones: a Dirac schedule and the
//    classical stepping loop with its atom produce bitwise-identical
//    trajectories and costs under the same Wiener path.
Result criterion5() {
  Timer timer;
  Result r;
  const RunSetup s = load_config(nlohmann::json::object());
  const BasisOps ops(s.sim.basis);

  const ControlAtom u = make_atom({0.3, -0.2}, s.sim.basis);
  const auto q = dirac({u}, {0.0, s.sim.T});
  const WienerPath W = sample_wiener(s.sim.T, s.sim.steps, 2718);
  const Trajectory traj = simulate(s.sim, q, s.op, W, ops);

  const Mixture classical{{1.0, u}};
  const double dt = s.sim.T / s.sim.steps;
  SpectralField m = s.sim.m0;
  bool bitwise = fields_equal(m, traj.states[0]);
  for (int j = 0; j < s.sim.steps; ++j) {
    m = step(m, dt, W.increments[static_cast<std::size_t>(j)], classical, s.op, s.sim.h, ops,
             s.sim.integrator, s.sim.mode);
    bitwise = bitwise && fields_equal(m, traj.states[static_cast<std::size_t>(j) + 1]);
  }

  double state = 0.0;
  if (s.cost.a != 0.0)
    for (int j = 0; j < s.sim.steps; ++j) {
      const double h1 = norm(traj.states[static_cast<std::size_t>(j)], NormKind::H1, ops);
      state += dt * (s.cost.a * h1 * h1);
    }
  const double k = kappa(u, ops);
  const double k2 = k * k;
  const double classical_running = state + s.cost.b * (s.sim.T * (k2 * k2));
  const double classical_total =
      classical_running + terminal_cost(s.cost, traj.states.back(), ops);
  const CostBreakdown parts = trajectory_cost_parts(s.cost, traj, q, ops);
  const bool costs = parts.running == classical_running && parts.total == classical_total;

  r.seconds = timer.seconds();
  r.pass = bitwise && costs;
  r.detail = std::string("trajectory ") + (bitwise ? "bitwise" : "DIFFERS") + ", cost " +
             (costs ? "bitwise" : "DIFFERS");
  return r;
}

// 7a. Pure control-energy cost: with a = c = 0 the zero control is optimal
//     with J = 0; the search must return to within 5% of its first-
//     iteration best (which contains the zero control as the distribution
//     mean) within 30 iterations.
Result criterion7a(OptimizationTrace& trace_out) {
  Timer timer;
  Result r;
  RunSetup s = load_config(nlohmann::json::object());
  s.cost.c = 0.0;
  s.optimizer.population = 16;
  s.optimizer.iterations = 30;
  s.optimizer.paths = 100;

  const OptimizationTrace trace = optimize(s.sim, s.cost, s.op, s.optimizer);
  const double first = trace.rows.front().best_J;
  const double last = trace.rows.back().best_J;
  r.seconds = timer.seconds();
  r.pass = std::isfinite(last) && last <= 0.05 * first && r.seconds < 300.0;
  r.detail = "best_J iteration 1: " + fmt(first) + ", iteration 30: " + fmt(last);
  trace_out = trace;
  return r;
}

// 7b. Switching problem: steering toward -m0 with a pure additive control
//     beats the zero-control baseline by at least 3 combined standard
//     errors under common random numbers.
Result criterion7b(OptimizationTrace& trace_out) {
  Timer timer;
  Result r;
  RunSetup s = load_config(nlohmann::json::object());  // cost a=0, b=1, c=1, target -m0
  s.op.kind = ControlOperatorSpec::Kind::pure_additive;
  s.optimizer.population = 16;
  s.optimizer.iterations = 12;
  s.optimizer.paths = 200;
  s.optimizer.atom_count = 1;
  s.optimizer.knot_count = 1;
  s.optimizer.theta_dim = 1;
  const BasisOps ops(s.sim.basis);

  const auto zero = zero_schedule(s.sim.basis, 1, 1, 1, s.sim.T);
  const CostEstimate baseline =
      mc_estimate_J(s.sim, zero, s.op, s.cost, s.optimizer.paths, s.optimizer.base_seed, ops);
  const OptimizationTrace trace = optimize(s.sim, s.cost, s.op, s.optimizer);

  const double gain = baseline.mean - trace.best_estimate.mean;
  const double se = std::sqrt(baseline.std_error * baseline.std_error +
                              trace.best_estimate.std_error * trace.best_estimate.std_error);
  r.seconds = timer.seconds();
  r.pass = gain >= 3.0 * se && r.seconds < 300.0;
  r.detail = "baseline " + fmt(baseline.mean) + ", best " + fmt(trace.best_estimate.mean) +
             ", gain " + fmt(gain) + " vs 3 SE " + fmt(3.0 * se);
  trace_out = trace;
  return r;
}

// 6. Coercivity chain: b * kappa_moment(q, 4) <= estimated running part
//    for every candidate evaluated in-loop, across a dedicated run with
//    wide spread plus both optimizer runs of criterion 7.
Result criterion6(const OptimizationTrace& t7a, const OptimizationTrace& t7b) {
  Timer timer;
  Result r;
  RunSetup s = load_config(nlohmann::json::object());
  s.sim.steps = 64;
  s.optimizer.population = 8;
  s.optimizer.iterations = 4;
  s.optimizer.paths = 4;
  s.optimizer.atom_count = 2;
  s.optimizer.knot_count = 2;
  s.optimizer.theta_dim = 2;
  s.optimizer.init_spread = 0.7;
  s.optimizer.base_seed = 5;

  const OptimizationTrace own = optimize(s.sim, s.cost, s.op, s.optimizer);
  r.seconds = timer.seconds();
  r.pass = own.coercivity_ok && t7a.coercivity_ok && t7b.coercivity_ok;
  r.detail = std::to_string(own.evaluations + t7a.evaluations + t7b.evaluations) +
             " candidates evaluated, chain " + (r.pass ? "exact" : "VIOLATED");
  return r;
}

// 8. Reproducibility: the same CLI command with the same config and seed
//    writes byte-identical artifacts (equal manifest checksums).
Result criterion8() {
  Timer timer;
  Result r;
  const std::filesystem::path base =
      std::filesystem::temp_directory_path() / "sllb_acceptance" / "repro";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);

  const nlohmann::json cfg = {{"n", 4}, {"M", 8}, {"steps", 64}, {"seed", 9}};
  {
    std::ofstream out(base / "config.json");
    out << cfg.dump(2) << "\n";
  }

  const std::string cli = SLLB_CLI_PATH;
  const auto run = [&](const std::string& out) {
    const std::string cmd = "\"" + cli + "\" simulate --config \"" +
                            (base / "config.json").string() + "\" --out \"" +
                            (base / out).string() + "\" --seed 123 --quiet";
    return std::system(cmd.c_str());
  };
  if (run("A") != 0 || run("B") != 0) {
    r.detail = "CLI invocation failed";
    r.seconds = timer.seconds();
    return r;
  }

  const auto ma = nlohmann::json::parse(slurp(base / "A" / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(base / "B" / "manifest.json"));
  bool equal = ma.at("files") == mb.at("files") && !ma.at("files").empty();
  for (const auto& f : ma.at("files")) {
    const std::string name = f.at("name").get<std::string>();
    equal = equal && slurp(base / "A" / name) == slurp(base / "B" / name);
  }
  r.seconds = timer.seconds();
  r.pass = equal;
  r.detail = std::string("manifest checksums ") + (equal ? "identical" : "DIFFER") + " across " +
             std::to_string(ma.at("files").size()) + " artifacts";
  return r;
}

// 9. Spectral oracles: eigenvalues against extrapolated finite-difference
//    eigensolves; H1/H2 norms against fine-grid quadrature.
Result criterion9() {
  Timer timer;
  Result r;
  bool ok = true;
  double worst_eig = 0.0, worst_norm = 0.0;

  const BasisSpec b1{1, 8, 32};
  for (int k = 1; k <= 4; ++k) {
    const std::array<int, 1> kk{k};
    const double lam = eigenvalue(std::span<const int>(kk), b1);
    const double ref = oracle::fd_neumann_eigenvalue_extrapolated(k, 128);
    const double rel = std::abs(lam - ref) / ref;
    worst_eig = std::max(worst_eig, rel);
    ok = ok && rel < 1e-3;
  }

  for (const BasisSpec b : {BasisSpec{1, 8, 32}, BasisSpec{2, 4, 8}}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const SpectralField f = oracle::random_field(b, 1000 + seed);
      const int N = b.d == 1 ? 4096 : 512;
      const double h1 = norm(f, NormKind::H1);
      const double h2 = norm(f, NormKind::H2);
      const double rel1 = std::abs(h1 * h1 - oracle::h1_sq_by_quadrature(f, N)) /
                          oracle::h1_sq_by_quadrature(f, N);
      const double rel2 = std::abs(h2 * h2 - oracle::h2_sq_by_quadrature(f, N)) /
                          oracle::h2_sq_by_quadrature(f, N);
      worst_norm = std::max(worst_norm, std::max(rel1, rel2));
      ok = ok && rel1 <= 1e-6 && rel2 <= 1e-6;
    }
  }
  r.seconds = timer.seconds();
  r.pass = ok;
  r.detail = "worst eigenvalue rel err " + fmt(worst_eig) + " (< 1e-3), worst norm rel err " +
             fmt(worst_norm) + " (<= 1e-6)";
  return r;
}

} // namespace

int main() {
  const char* names[9] = {
      "deterministic energy identity",
      "Galerkin uniformity of energy statistics",
      "Ito/Stratonovich scheme consistency",
      "pathwise uniqueness and Gronwall control",
      "Dirac schedule equals classical control",
      "coercivity chain for every candidate",
      "optimizer sanity (control-energy optimum, switching gain)",
      "CLI reproducibility under fixed config and seed",
      "spectral oracle agreement",
  };

  Result res[9];
  res[0] = criterion1();
  res[1] = criterion2();
  res[2] = criterion3();
  res[3] = criterion4();
  res[4] = criterion5();
  OptimizationTrace t7a, t7b;
  const Result r7a = criterion7a(t7a);
  const Result r7b = criterion7b(t7b);
  res[6].pass = r7a.pass && r7b.pass;
  res[6].detail = "(a) " + r7a.detail + "; (b) " + r7b.detail;
  res[6].seconds = r7a.seconds + r7b.seconds;
  res[5] = criterion6(t7a, t7b);
  res[7] = criterion8();
  res[8] = criterion9();

  int failures = 0;
  for (int i = 0; i < 9; ++i) {
    std::printf("%s  criterion %d: %s: %s [%.1f s]\n", res[i].pass ? "PASS" : "FAIL", i + 1,
                names[i], res[i].detail.c_str(), res[i].seconds);
    if (!res[i].pass) ++failures;
  }
  return failures;
}
