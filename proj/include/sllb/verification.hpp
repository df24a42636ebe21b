#pragma once

// Numerical experiments around the a-priori structure of the discretized
// system:
//
//  * energy_report / galerkin_stability_study: Monte-Carlo estimates of
//    the five energy functionals (sup |m|^2_{L2}, int |m|^2_{H1},
//    int |m|^4_{L4}, sup |m|^2_{H1}, int |m|^2_{H2}) whose bounds are
//    uniform across the mode count n; the study re-runs one problem over
//    an ascending n list under common random numbers.
//
//  * pathwise_uniqueness_experiment: integrates two copies m1, m2 off
//    initial states m0 and m0 + delta*direction against the SAME Wiener
//    path and control, tracks r(t) = |m1-m2|^2_{L2}, and reports the
//    Gronwall diagnostic log(r(T)/r(0)) / int Phi with the dimension-
//    dependent weight Phi (constant normalized to 1):
//      d=1: 1 + |m2|_inf(|m1|_inf+|m2|_inf) + |grad m2|^4_{L2} + int kappa dq
//      d=2: |grad m2|^4_{L2} replaced by |grad m2|^2_{L2} |m1-m2|^2_{H2}
//
//  * ito_stratonovich_consistency: the explicit Ito scheme and the Heun
//    Stratonovich scheme discretize the same law; with common refined
//    Wiener paths the gap |E|m_EM(T)|^2 - E|m_Heun(T)|^2| shrinks with
//    dt, and the log-log slope estimates the consistency order.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sllb/control.hpp"
#include "sllb/cost.hpp"
#include "sllb/dynamics.hpp"
#include "sllb/field.hpp"
#include "sllb/wiener.hpp"

namespace sllb {

struct MomentStat {
  double mean = 0.0;
  double std_error = 0.0;
};

struct EnergyReport {
  MomentStat sup_L2_sq;
  MomentStat int_H1_sq;
  MomentStat int_L4_4;
  MomentStat sup_H1_sq;
  MomentStat int_H2_sq;
};

namespace detail {

inline MomentStat mean_stderr(const std::vector<double>& x) {
  MomentStat out;
  const std::size_t N = x.size();
  if (N == 0) return out;
  bool all_equal = true;
  for (double v : x)
    if (v != x[0]) {
      all_equal = false;
      break;
    }
  if (all_equal) {
    out.mean = x[0];
    return out; // zero dispersion exactly
  }
  double sum = 0.0;
  for (double v : x) sum += v;
  out.mean = sum / static_cast<double>(N);
  double ss = 0.0;
  for (double v : x) ss += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(ss / static_cast<double>(N - 1) / static_cast<double>(N));
  return out;
}

// The five per-trajectory energy functionals: running suprema over all
// grid points, left-endpoint quadrature for the time integrals.
struct EnergySample {
  double sup_L2_sq = 0.0, int_H1_sq = 0.0, int_L4_4 = 0.0, sup_H1_sq = 0.0, int_H2_sq = 0.0;
};

inline EnergySample energy_sample(const Trajectory& traj, const BasisOps& ops) {
  EnergySample s;
  const std::size_t J = traj.states.size() - 1;
  const double dt = traj.times.back() / static_cast<double>(J);
  for (std::size_t j = 0; j <= J; ++j) {
    const SpectralField& m = traj.states[j];
    const double l2 = norm(m, NormKind::L2, ops);
    const double h1 = norm(m, NormKind::H1, ops);
    s.sup_L2_sq = std::max(s.sup_L2_sq, l2 * l2);
    s.sup_H1_sq = std::max(s.sup_H1_sq, h1 * h1);
    if (j < J) {
      const double l4 = norm(m, NormKind::L4, ops);
      const double h2 = norm(m, NormKind::H2, ops);
      s.int_H1_sq += dt * h1 * h1;
      s.int_L4_4 += dt * l4 * l4 * l4 * l4;
      s.int_H2_sq += dt * h2 * h2;
    }
  }
  return s;
}

} // namespace detail

inline EnergyReport energy_report(const SimConfig& cfg, const RelaxedControlSchedule& q,
                                  const ControlOperatorSpec& op, int N, std::uint64_t base_seed,
                                  const BasisOps& ops) {
  if (N < 1) throw std::invalid_argument("energy_report: N must be >= 1");
  std::vector<double> a(static_cast<std::size_t>(N)), b(a), c(a), d(a), e(a);
  for (int i = 0; i < N; ++i) {
    const WienerPath W =
        sample_wiener(cfg.T, cfg.steps, derive_seed(base_seed, static_cast<std::uint64_t>(i)));
    try {
      const detail::EnergySample s = detail::energy_sample(simulate(cfg, q, op, W, ops), ops);
      const auto ui = static_cast<std::size_t>(i);
      a[ui] = s.sup_L2_sq;
      b[ui] = s.int_H1_sq;
      c[ui] = s.int_L4_4;
      d[ui] = s.sup_H1_sq;
      e[ui] = s.int_H2_sq;
    } catch (blow_up_error& err) {
      err.path_index = i;
      throw;
    }
  }
  return EnergyReport{detail::mean_stderr(a), detail::mean_stderr(b), detail::mean_stderr(c),
                      detail::mean_stderr(d), detail::mean_stderr(e)};
}

inline EnergyReport energy_report(const SimConfig& cfg, const RelaxedControlSchedule& q,
                                  const ControlOperatorSpec& op, int N, std::uint64_t base_seed) {
  return energy_report(cfg, q, op, N, base_seed, BasisOps(cfg.basis));
}

// Column order used by tables and CSV output.
inline constexpr const char* kEnergyColumns[5] = {"sup_L2_sq", "int_H1_sq", "int_L4_4",
                                                  "sup_H1_sq", "int_H2_sq"};

inline std::array<double, 5> energy_means(const EnergyReport& r) {
  return {r.sup_L2_sq.mean, r.int_H1_sq.mean, r.int_L4_4.mean, r.sup_H1_sq.mean,
          r.int_H2_sq.mean};
}

struct GalerkinStudy {
  std::vector<int> n_values;
  std::vector<EnergyReport> reports;
  std::array<double, 5> max_mean{};  // per-column max over n
  std::array<double, 5> min_mean{};  // per-column min over n
};

// Re-runs the problem of cfg at each mode count in n_list (ascending),
// re-embedding m0, h, and the schedule atoms, with common random numbers
// across n.  The collocation grid scales as the next power of two >= 2n
// (never below the original M) so the nonlinear projections stay exact.
inline GalerkinStudy galerkin_stability_study(const SimConfig& cfg, const std::vector<int>& n_list,
                                              const RelaxedControlSchedule& q,
                                              const ControlOperatorSpec& op, int N,
                                              std::uint64_t base_seed) {
  if (n_list.empty()) throw std::invalid_argument("galerkin_stability_study: empty n_list");
  for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
    if (!(n_list[i] < n_list[i + 1]))
      throw std::invalid_argument("galerkin_stability_study: n_list must be ascending");

  GalerkinStudy study;
  study.max_mean.fill(-std::numeric_limits<double>::infinity());
  study.min_mean.fill(std::numeric_limits<double>::infinity());
  for (int n : n_list) {
    BasisSpec bn{cfg.basis.d, n, 1};
    unsigned grid = static_cast<unsigned>(std::max(2 * n, cfg.basis.M));
    bn.M = static_cast<int>(std::bit_ceil(grid));
    SimConfig cn = cfg;
    cn.basis = bn;
    cn.m0 = rebase(cfg.m0, bn);
    cn.h = rebase(cfg.h, bn);
    const BasisOps ops(bn);
    const EnergyReport rep = energy_report(cn, rebase_schedule(q, bn), op, N, base_seed, ops);
    study.n_values.push_back(n);
    study.reports.push_back(rep);
    const auto means = energy_means(rep);
    for (std::size_t k = 0; k < 5; ++k) {
      study.max_mean[k] = std::max(study.max_mean[k], means[k]);
      study.min_mean[k] = std::min(study.min_mean[k], means[k]);
    }
  }
  return study;
}

struct UniquenessReport {
  std::vector<double> times;
  std::vector<double> r;  // |m1(t_j) - m2(t_j)|^2_{L2}
  double r_T = 0.0;
  double phi_integral = 0.0;
  double gronwall_ratio = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  // r(0) = 0: identical inputs reproduce identically
};

inline UniquenessReport pathwise_uniqueness_experiment(const SimConfig& cfg,
                                                       const RelaxedControlSchedule& q,
                                                       const ControlOperatorSpec& op, double delta,
                                                       const SpectralField& direction,
                                                       std::uint64_t seed, const BasisOps& ops) {
  if (!(delta >= 0.0))
    throw std::invalid_argument("pathwise_uniqueness_experiment: delta must be >= 0");
  require_same_basis(direction.basis, cfg.basis, "pathwise_uniqueness_experiment: direction");

  SimConfig cfg2 = cfg;
  axpy(delta, direction, cfg2.m0);
  const WienerPath W = sample_wiener(cfg.T, cfg.steps, seed);
  const Trajectory t1 = simulate(cfg, q, op, W, ops);
  const Trajectory t2 = simulate(cfg2, q, op, W, ops);

  const std::size_t J = static_cast<std::size_t>(cfg.steps);
  const double dt = cfg.T / static_cast<double>(cfg.steps);
  const double nudge = dt * 0x1.0p-30;

  // first kappa moment of each interval's mixture, reused across steps
  std::vector<double> k1(q.mixtures.size(), 0.0);
  for (std::size_t i = 0; i < q.mixtures.size(); ++i)
    for (const auto& wa : q.mixtures[i]) k1[i] += wa.w * kappa(wa.atom, ops);

  UniquenessReport rep;
  rep.times = t1.times;
  rep.r.resize(J + 1);
  for (std::size_t j = 0; j <= J; ++j) {
    const double rj = norm(difference(t1.states[j], t2.states[j]), NormKind::L2, ops);
    rep.r[j] = rj * rj;
  }
  rep.r_T = rep.r.back();
  rep.degenerate = (rep.r.front() == 0.0);

  for (std::size_t j = 0; j < J; ++j) {
    const SpectralField& m1 = t1.states[j];
    const SpectralField& m2 = t2.states[j];
    const double inf1 = norm(m1, NormKind::Linf, ops);
    const double inf2 = norm(m2, NormKind::Linf, ops);
    const double l2 = norm(m2, NormKind::L2, ops);
    const double h1 = norm(m2, NormKind::H1, ops);
    const double grad_sq = h1 * h1 - l2 * l2;
    double phi = 1.0 + inf2 * (inf1 + inf2) + k1[interval_index(q, t1.times[j] + nudge)];
    if (cfg.basis.d == 1) {
      phi += grad_sq * grad_sq;
    } else {
      const double dh2 = norm(difference(m1, m2), NormKind::H2, ops);
      phi += grad_sq * dh2 * dh2;
    }
    rep.phi_integral += dt * phi;
  }
  if (!rep.degenerate && rep.r_T > 0.0)
    rep.gronwall_ratio = std::log(rep.r_T / rep.r.front()) / rep.phi_integral;
  return rep;
}

inline UniquenessReport pathwise_uniqueness_experiment(const SimConfig& cfg,
                                                       const RelaxedControlSchedule& q,
                                                       const ControlOperatorSpec& op, double delta,
                                                       const SpectralField& direction,
                                                       std::uint64_t seed) {
  return pathwise_uniqueness_experiment(cfg, q, op, delta, direction, seed, BasisOps(cfg.basis));
}

struct ConsistencyRow {
  double dt = 0.0;
  double em_mean_L2_sq = 0.0;
  double heun_mean_L2_sq = 0.0;
  double abs_diff = 0.0;
};

struct ConsistencyTable {
  std::vector<ConsistencyRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();  // log-log fit of abs_diff vs dt
};

// Weak-endpoint comparison of the two conventions on common noise: each
// path is sampled once at the finest level and coarsened by block sums,
// so every dt sees the same Brownian increments.
inline ConsistencyTable ito_stratonovich_consistency(const SimConfig& cfg,
                                                     const RelaxedControlSchedule& q,
                                                     const ControlOperatorSpec& op,
                                                     const std::vector<double>& dt_list, int N,
                                                     std::uint64_t base_seed, const BasisOps& ops) {
  if (dt_list.size() < 2)
    throw std::invalid_argument("ito_stratonovich_consistency: need at least 2 dt levels");
  if (N < 1) throw std::invalid_argument("ito_stratonovich_consistency: N must be >= 1");

  std::vector<int> steps(dt_list.size());
  for (std::size_t k = 0; k < dt_list.size(); ++k) {
    if (k > 0 && !(dt_list[k] < dt_list[k - 1]))
      throw std::invalid_argument("ito_stratonovich_consistency: dt_list must be descending");
    const double raw = cfg.T / dt_list[k];
    steps[k] = static_cast<int>(std::llround(raw));
    if (steps[k] < 1 || std::abs(steps[k] - raw) > 1e-9 * raw)
      throw std::invalid_argument("ito_stratonovich_consistency: dt " + std::to_string(dt_list[k]) +
                                  " does not divide T=" + std::to_string(cfg.T));
  }
  const int fine = steps.back();
  for (int s : steps)
    if (fine % s != 0)
      throw std::invalid_argument(
          "ito_stratonovich_consistency: coarse steps must divide the finest level");

  std::vector<double> em_sum(dt_list.size(), 0.0), heun_sum(dt_list.size(), 0.0);
  for (int i = 0; i < N; ++i) {
    const WienerPath Wf =
        sample_wiener(cfg.T, fine, derive_seed(base_seed, static_cast<std::uint64_t>(i)));
    for (std::size_t k = 0; k < dt_list.size(); ++k) {
      const WienerPath Wk = coarsen(Wf, steps[k]);
      SimConfig ck = cfg;
      ck.steps = steps[k];
      ck.integrator = Integrator::euler_maruyama_ito;
      const double em = norm(simulate(ck, q, op, Wk, ops).states.back(), NormKind::L2, ops);
      ck.integrator = Integrator::heun_stratonovich;
      const double he = norm(simulate(ck, q, op, Wk, ops).states.back(), NormKind::L2, ops);
      em_sum[k] += em * em;
      heun_sum[k] += he * he;
    }
  }

  ConsistencyTable table;
  for (std::size_t k = 0; k < dt_list.size(); ++k) {
    ConsistencyRow row;
    row.dt = dt_list[k];
    row.em_mean_L2_sq = em_sum[k] / N;
    row.heun_mean_L2_sq = heun_sum[k] / N;
    row.abs_diff = std::abs(row.em_mean_L2_sq - row.heun_mean_L2_sq);
    table.rows.push_back(row);
  }

  // least squares on log(diff) against log(dt), zero gaps excluded
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int npts = 0;
  for (const auto& row : table.rows)
    if (row.abs_diff > 0.0) {
      const double x = std::log(row.dt), y = std::log(row.abs_diff);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++npts;
    }
  if (npts >= 2) {
    const double denom = npts * sxx - sx * sx;
    if (denom > 0.0) table.slope = (npts * sxy - sx * sy) / denom;
  }
  return table;
}

inline ConsistencyTable ito_stratonovich_consistency(const SimConfig& cfg,
                                                     const RelaxedControlSchedule& q,
                                                     const ControlOperatorSpec& op,
                                                     const std::vector<double>& dt_list, int N,
                                                     std::uint64_t base_seed) {
  return ito_stratonovich_consistency(cfg, q, op, dt_list, N, base_seed, BasisOps(cfg.basis));
}

// Discrete residual of the deterministic energy balance
//   1/2 |m(T)|^2 + int_0^T ( |m|^2_{H1} + |m|^4_{L4} ) dt = 1/2 |m0|^2,
// which holds for h = 0 and zero control because <m, m x Delta m> = 0 and
// <m, Delta m - (1+|m|^2) m> = -|m|^2_{H1} - |m|^4_{L4}.  First order in
// dt for the builtin one-step schemes.
inline double deterministic_energy_defect(const SimConfig& cfg, const BasisOps& ops) {
  if (!(norm(cfg.h, NormKind::L2, ops) == 0.0))
    throw std::invalid_argument("deterministic_energy_defect: requires h = 0");
  const auto q = zero_schedule(cfg.basis, 1, 1, 1, cfg.T);
  const Trajectory traj =
      simulate(cfg, q, ControlOperatorSpec{}, sample_wiener(cfg.T, cfg.steps, cfg.seed), ops);
  const double dt = cfg.T / cfg.steps;
  const double l2T = norm(traj.states.back(), NormKind::L2, ops);
  const double l20 = norm(traj.states.front(), NormKind::L2, ops);
  double quad = 0.0;
  for (int j = 0; j < cfg.steps; ++j) {
    const SpectralField& m = traj.states[static_cast<std::size_t>(j)];
    const double h1 = norm(m, NormKind::H1, ops);
    const double l4 = norm(m, NormKind::L4, ops);
    quad += dt * (h1 * h1 + l4 * l4 * l4 * l4);
  }
  return std::abs(0.5 * l2T * l2T + quad - 0.5 * l20 * l20);
}

inline double deterministic_energy_defect(const SimConfig& cfg) {
  return deterministic_energy_defect(cfg, BasisOps(cfg.basis));
}

} // namespace sllb
