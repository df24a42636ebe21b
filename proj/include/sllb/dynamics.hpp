#pragma once

// Faedo-Galerkin dynamics of the controlled stochastic Landau-Lifshitz-
// Bloch equation, all material constants normalized to one:
//
//   dm = [ Delta m + m x Delta m - (1+|m|^2) m + int L(m,u) q_t(du) ] dt
//        + (m x h + h) o dW            (Stratonovich)
//
// In Ito form the drift gains the correction + 1/2 (m x h) x h.  Every
// nonlinear term is evaluated pseudo-spectrally: synthesize to the grid,
// apply the nodewise operation, analyze back; with M >= 2n the analysis
// of the cubic terms is quadrature-exact, so the composition equals the
// exact Galerkin projection P_n.
//
// Integrators:
//   euler_maruyama_ito   explicit Euler on the Ito form
//   heun_stratonovich    predictor-corrector on the Stratonovich form;
//                        the averaged noise evaluation supplies the
//                        correction the drift omits
//   semi_implicit_ito    Ito form with the stiff Delta part folded in
//                        implicitly per mode, factor 1/(1 + dt lambda_k)

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sllb/control.hpp"
#include "sllb/field.hpp"
#include "sllb/pointwise.hpp"
#include "sllb/wiener.hpp"

namespace sllb {

enum class Integrator { euler_maruyama_ito, heun_stratonovich, semi_implicit_ito };
enum class DriftConvention { ito, stratonovich };

// Debug reductions of the right-hand side.  linear_only drops the
// exchange cross term and the Bloch term (heat flow plus the affine
// pieces); noise_only zeroes the whole drift.
enum class DynamicsMode { full, linear_only, noise_only };

class blow_up_error : public std::runtime_error {
public:
  blow_up_error(int step_index, const std::string& what)
      : std::runtime_error(what), step_index_(step_index) {}
  int step_index() const { return step_index_; }
  int path_index = -1; // filled by Monte Carlo drivers

private:
  int step_index_;
};

struct SimConfig {
  BasisSpec basis;
  double T = 1.0;
  int steps = 256;
  Integrator integrator = Integrator::semi_implicit_ito;
  SpectralField m0;
  SpectralField h;
  std::uint64_t seed = 0;
  DynamicsMode mode = DynamicsMode::full;
};

inline void validate(const SimConfig& cfg) {
  validate(cfg.basis);
  if (!(cfg.T > 0.0)) throw std::invalid_argument("SimConfig.T must be positive");
  if (cfg.steps < 1) throw std::invalid_argument("SimConfig.steps must be >= 1");
  require_same_basis(cfg.m0.basis, cfg.basis, "SimConfig.m0");
  require_same_basis(cfg.h.basis, cfg.basis, "SimConfig.h");
}

struct Trajectory {
  std::vector<double> times;          // j * dt, j = 0..steps
  std::vector<SpectralField> states;  // states[j] = m(t_j)
};

namespace detail {

// Pre-synthesized control mixture: weights with atom grids.
struct MixtureGrids {
  std::vector<double> w;
  std::vector<GridField> u;
};

inline MixtureGrids synthesize_mixture(const Mixture& mix, const BasisOps& ops) {
  MixtureGrids out;
  out.w.reserve(mix.size());
  out.u.reserve(mix.size());
  for (const auto& wa : mix) {
    require_same_basis(wa.atom.field.basis, ops.basis(), "control mixture");
    out.w.push_back(wa.w);
    out.u.push_back(to_physical(wa.atom.field, ops));
  }
  return out;
}

// Drift with the Laplacian split off: callers that treat Delta implicitly
// take rest only; explicit schemes add lap back.
struct DriftParts {
  SpectralField lap;  // P_n Delta m
  SpectralField rest; // everything else at the requested convention
};

inline DriftParts drift_parts(const SpectralField& m, const GridField& mg,
                              const MixtureGrids& mix, const ControlOperatorSpec& op,
                              const GridField& hg, const BasisOps& ops, DriftConvention conv,
                              DynamicsMode mode) {
  DriftParts out{laplacian(m, ops), zero_field(m.basis)};
  if (mode == DynamicsMode::noise_only) {
    for (int c = 0; c < 3; ++c)
      for (double& v : out.lap.coeffs[c]) v = 0.0;
    return out;
  }

  GridField acc = zero_grid(m.basis);
  const std::size_t N = acc.values[0].size();

  if (mode == DynamicsMode::full) {
    const GridField lg = to_physical(out.lap, ops);
    const GridField mxl = cross(mg, lg);
    const GridField bl = bloch_term(mg);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < N; ++i)
        acc.values[c][i] += mxl.values[c][i] - bl.values[c][i];
  }

  if (conv == DriftConvention::ito) {
    const GridField dc = double_cross(mg, hg);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < N; ++i) acc.values[c][i] += 0.5 * dc.values[c][i];
  }

  for (std::size_t a = 0; a < mix.w.size(); ++a) {
    const GridField L = apply_control_operator(op, mg, mix.u[a]);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < N; ++i) acc.values[c][i] += mix.w[a] * L.values[c][i];
  }

  out.rest = to_spectral(acc, ops);
  return out;
}

} // namespace detail

// P_n[ Delta m + m x Delta m - (1+|m|^2) m + conv-correction + control ].
inline SpectralField drift(const SpectralField& m, const Mixture& mix,
                           const ControlOperatorSpec& op, const SpectralField& h,
                           const BasisOps& ops, DriftConvention conv = DriftConvention::ito,
                           DynamicsMode mode = DynamicsMode::full) {
  require_same_basis(m.basis, ops.basis(), "drift");
  require_same_basis(h.basis, ops.basis(), "drift");
  const GridField mg = to_physical(m, ops);
  const GridField hg = to_physical(h, ops);
  const auto mixg = detail::synthesize_mixture(mix, ops);
  auto parts = detail::drift_parts(m, mg, mixg, op, hg, ops, conv, mode);
  axpy(1.0, parts.lap, parts.rest);
  return parts.rest;
}

inline SpectralField drift(const SpectralField& m, const Mixture& mix,
                           const ControlOperatorSpec& op, const SpectralField& h,
                           DriftConvention conv = DriftConvention::ito,
                           DynamicsMode mode = DynamicsMode::full) {
  return drift(m, mix, op, h, BasisOps(m.basis), conv, mode);
}

// g(m) = P_n(m x h + h), the affine diffusion against the scalar noise.
inline SpectralField diffusion(const SpectralField& m, const SpectralField& h,
                               const BasisOps& ops) {
  require_same_basis(m.basis, ops.basis(), "diffusion");
  require_same_basis(h.basis, ops.basis(), "diffusion");
  const GridField mg = to_physical(m, ops);
  const GridField hg = to_physical(h, ops);
  return to_spectral(cross_plus(mg, hg), ops);
}

inline SpectralField diffusion(const SpectralField& m, const SpectralField& h) {
  return diffusion(m, h, BasisOps(m.basis));
}

namespace detail {

inline SpectralField step_impl(const SpectralField& m, double dt, double dW,
                               const MixtureGrids& mix, const ControlOperatorSpec& op,
                               const GridField& hg, const BasisOps& ops, Integrator scheme,
                               DynamicsMode mode) {
  const GridField mg = to_physical(m, ops);
  const auto g = to_spectral(cross_plus(mg, hg), ops);

  switch (scheme) {
    case Integrator::euler_maruyama_ito: {
      auto parts = drift_parts(m, mg, mix, op, hg, ops, DriftConvention::ito, mode);
      SpectralField out = m;
      axpy(dt, parts.lap, out);
      axpy(dt, parts.rest, out);
      axpy(dW, g, out);
      return out;
    }
    case Integrator::heun_stratonovich: {
      auto parts = drift_parts(m, mg, mix, op, hg, ops, DriftConvention::stratonovich, mode);
      SpectralField a0 = parts.lap;
      axpy(1.0, parts.rest, a0);

      SpectralField pred = m;
      axpy(dt, a0, pred);
      axpy(dW, g, pred);
      if (!finite(pred)) return pred;

      const GridField pg = to_physical(pred, ops);
      auto parts1 = drift_parts(pred, pg, mix, op, hg, ops, DriftConvention::stratonovich, mode);
      SpectralField a1 = parts1.lap;
      axpy(1.0, parts1.rest, a1);
      const auto g1 = to_spectral(cross_plus(pg, hg), ops);

      SpectralField out = m;
      axpy(0.5 * dt, a0, out);
      axpy(0.5 * dt, a1, out);
      axpy(0.5 * dW, g, out);
      axpy(0.5 * dW, g1, out);
      return out;
    }
    case Integrator::semi_implicit_ito: {
      auto parts = drift_parts(m, mg, mix, op, hg, ops, DriftConvention::ito, mode);
      SpectralField out = m;
      axpy(dt, parts.rest, out);
      axpy(dW, g, out);
      if (mode != DynamicsMode::noise_only) {
        const auto& lam = ops.mode_lambda();
        for (int c = 0; c < 3; ++c)
          for (std::size_t k = 0; k < lam.size(); ++k)
            out.coeffs[c][k] /= 1.0 + dt * lam[k];
      }
      return out;
    }
  }
  throw std::invalid_argument("step: unknown integrator");
}

} // namespace detail

inline SpectralField step(const SpectralField& m, double dt, double dW, const Mixture& mix,
                          const ControlOperatorSpec& op, const SpectralField& h,
                          const BasisOps& ops, Integrator scheme,
                          DynamicsMode mode = DynamicsMode::full) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  require_same_basis(m.basis, ops.basis(), "step");
  const GridField hg = to_physical(h, ops);
  const auto mixg = detail::synthesize_mixture(mix, ops);
  return detail::step_impl(m, dt, dW, mixg, op, hg, ops, scheme, mode);
}

inline SpectralField step(const SpectralField& m, double dt, double dW, const Mixture& mix,
                          const ControlOperatorSpec& op, const SpectralField& h, Integrator scheme,
                          DynamicsMode mode = DynamicsMode::full) {
  return step(m, dt, dW, mix, op, h, BasisOps(m.basis), scheme, mode);
}

// Integrate the full horizon against a supplied Wiener path.  States are
// checked for finiteness after every step; divergence raises
// blow_up_error with the offending step index rather than clamping.
inline Trajectory simulate(const SimConfig& cfg, const RelaxedControlSchedule& q,
                           const ControlOperatorSpec& op, const WienerPath& W,
                           const BasisOps& ops) {
  validate(cfg);
  validate_schedule(q, cfg.T);
  require_same_basis(q.mixtures[0][0].atom.field.basis, cfg.basis, "simulate: schedule");
  if (W.steps != cfg.steps)
    throw std::invalid_argument("simulate: W.steps=" + std::to_string(W.steps) +
                                " != cfg.steps=" + std::to_string(cfg.steps));
  if (std::abs(W.T - cfg.T) > 1e-12 * std::max(1.0, cfg.T))
    throw std::invalid_argument("simulate: W.T != cfg.T");

  const double dt = cfg.T / cfg.steps;
  const GridField hg = to_physical(cfg.h, ops);

  // Pre-synthesize each interval's atoms and resolve each step's interval
  // once.  Lookups nudge right by dt/2^30 so a knot that lands exactly on
  // a grid point starts its interval at that step.
  std::vector<detail::MixtureGrids> interval_grids;
  interval_grids.reserve(q.mixtures.size());
  for (const auto& mix : q.mixtures) interval_grids.push_back(detail::synthesize_mixture(mix, ops));
  const double nudge = dt * 0x1.0p-30;

  Trajectory traj;
  traj.times.resize(static_cast<std::size_t>(cfg.steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  for (int j = 0; j <= cfg.steps; ++j) traj.times[static_cast<std::size_t>(j)] = j * dt;

  SpectralField m = cfg.m0;
  traj.states.push_back(m);
  for (int j = 0; j < cfg.steps; ++j) {
    const double t = traj.times[static_cast<std::size_t>(j)];
    const auto& mixg = interval_grids[interval_index(q, t + nudge)];

    m = detail::step_impl(m, dt, W.increments[static_cast<std::size_t>(j)], mixg, op, hg, ops,
                          cfg.integrator, cfg.mode);
    if (!finite(m))
      throw blow_up_error(j + 1, "simulate: non-finite state at step " + std::to_string(j + 1) +
                                     " (t=" + std::to_string((j + 1) * dt) + ")");
    traj.states.push_back(m);
  }
  return traj;
}

inline Trajectory simulate(const SimConfig& cfg, const RelaxedControlSchedule& q,
                           const ControlOperatorSpec& op, const WienerPath& W) {
  return simulate(cfg, q, op, W, BasisOps(cfg.basis));
}

// Convenience overload sampling the path from cfg.seed.
inline Trajectory simulate(const SimConfig& cfg, const RelaxedControlSchedule& q,
                           const ControlOperatorSpec& op) {
  return simulate(cfg, q, op, sample_wiener(cfg.T, cfg.steps, cfg.seed));
}

} // namespace sllb
