#pragma once

// Relaxed (Young-measure) controls restricted to finite mixtures: on each
// knot interval the control law is a convex combination of finitely many
// atoms, each atom a control field u in the same spectral space as the
// state.  An atom is parameterized by a coefficient vector theta embedded
// linearly into the first p modes of the first component, so optimization
// happens over a finite-dimensional slice of the relaxed class.
//
// kappa(u) = |u|_{H^2} is the inf-compactness weight: H^2-balls are
// compact in L^2 here, and the quartic kappa moment is the coercive part
// of the running cost.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sllb/field.hpp"
#include "sllb/pointwise.hpp"

namespace sllb {

struct ControlAtom {
  std::vector<double> theta;
  SpectralField field; // embedding of theta, kept materialized
};

// theta[j] -> coefficient j (flat mode order) of component 0.
inline ControlAtom make_atom(const std::vector<double>& theta, const BasisSpec& b) {
  validate(b);
  if (theta.size() > static_cast<std::size_t>(b.num_modes()))
    throw std::invalid_argument("make_atom: theta has " + std::to_string(theta.size()) +
                                " entries, basis has " + std::to_string(b.num_modes()) +
                                " modes");
  ControlAtom a{theta, zero_field(b)};
  for (std::size_t j = 0; j < theta.size(); ++j) a.field.coeffs[0][j] = theta[j];
  return a;
}

inline double kappa(const ControlAtom& a, const BasisOps& ops) {
  return norm(a.field, NormKind::H2, ops);
}
inline double kappa(const ControlAtom& a) { return norm(a.field, NormKind::H2); }

struct WeightedAtom {
  double w = 0.0;
  ControlAtom atom;
};
using Mixture = std::vector<WeightedAtom>;

// Piecewise-constant-in-time relaxed control: mixtures[k] acts on
// [knots[k], knots[k+1]).
struct RelaxedControlSchedule {
  std::vector<double> knots;     // 0 = s_0 < ... < s_K = T
  std::vector<Mixture> mixtures; // one per interval
};

inline void validate_schedule(const RelaxedControlSchedule& s, double T) {
  if (s.knots.size() < 2) throw std::invalid_argument("schedule.knots: need at least 2 knots");
  if (s.mixtures.size() + 1 != s.knots.size())
    throw std::invalid_argument("schedule.mixtures: got " + std::to_string(s.mixtures.size()) +
                                " intervals for " + std::to_string(s.knots.size()) + " knots");
  if (std::abs(s.knots.front()) > 1e-12)
    throw std::invalid_argument("schedule.knots: first knot must be 0");
  if (std::abs(s.knots.back() - T) > 1e-9 * std::max(1.0, std::abs(T)))
    throw std::invalid_argument("schedule.knots: last knot must equal the horizon T=" +
                                std::to_string(T));
  for (std::size_t k = 0; k + 1 < s.knots.size(); ++k)
    if (!(s.knots[k] < s.knots[k + 1]))
      throw std::invalid_argument("schedule.knots: not strictly increasing at index " +
                                  std::to_string(k));
  for (std::size_t k = 0; k < s.mixtures.size(); ++k) {
    const Mixture& mix = s.mixtures[k];
    if (mix.empty())
      throw std::invalid_argument("schedule.mixtures[" + std::to_string(k) + "]: empty mixture");
    double sum = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i) {
      if (mix[i].w < 0.0)
        throw std::invalid_argument("schedule.mixtures[" + std::to_string(k) + "][" +
                                    std::to_string(i) + "].w: negative weight");
      sum += mix[i].w;
      require_same_basis(mix[i].atom.field.basis, s.mixtures[0][0].atom.field.basis,
                         "validate_schedule");
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("schedule.mixtures[" + std::to_string(k) +
                                  "]: weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

// Index of the interval [s_k, s_{k+1}) containing t, with t before the
// first interior knot clamped to interval 0 and t >= the final knot to
// the last interval.  Time-grid callers add their nudge to t beforehand
// so a knot sitting exactly on a grid point resolves identically
// everywhere.
inline std::size_t interval_index(const RelaxedControlSchedule& s, double t) {
  const auto it = std::upper_bound(s.knots.begin(), s.knots.end(), t);
  std::size_t k = static_cast<std::size_t>(it - s.knots.begin());
  if (k == 0) k = 1;
  if (k >= s.knots.size()) k = s.knots.size() - 1; // t = T falls in the last interval
  return k - 1;
}

inline const Mixture& mixture_at(const RelaxedControlSchedule& s, double t) {
  if (s.knots.size() < 2) throw std::invalid_argument("mixture_at: empty schedule");
  if (t < s.knots.front() - 1e-12 || t > s.knots.back() + 1e-12)
    throw std::out_of_range("mixture_at: t=" + std::to_string(t) + " outside [" +
                            std::to_string(s.knots.front()) + "," +
                            std::to_string(s.knots.back()) + "]");
  return s.mixtures[interval_index(s, t)];
}

// Dirac embedding of a classical piecewise-constant control path.
inline RelaxedControlSchedule dirac(const std::vector<ControlAtom>& atoms,
                                    const std::vector<double>& knots) {
  if (atoms.size() + 1 != knots.size())
    throw std::invalid_argument("dirac: " + std::to_string(atoms.size()) + " atoms cannot cover " +
                                std::to_string(knots.size()) + " knots");
  RelaxedControlSchedule s;
  s.knots = knots;
  for (const auto& a : atoms) s.mixtures.push_back(Mixture{{1.0, a}});
  if (!s.knots.empty()) validate_schedule(s, s.knots.back());
  return s;
}

// Uniform-knot schedule whose atoms are all zero: the no-control law.
inline RelaxedControlSchedule zero_schedule(const BasisSpec& b, int p, int atom_count,
                                            int intervals, double T) {
  if (intervals < 1) throw std::invalid_argument("zero_schedule: intervals must be >= 1");
  if (atom_count < 1) throw std::invalid_argument("zero_schedule: atom_count must be >= 1");
  RelaxedControlSchedule s;
  s.knots.resize(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k)
    s.knots[static_cast<std::size_t>(k)] = T * static_cast<double>(k) / intervals;
  const ControlAtom zero = make_atom(std::vector<double>(static_cast<std::size_t>(p), 0.0), b);
  const double w = 1.0 / atom_count;
  for (int k = 0; k < intervals; ++k) {
    Mixture mix;
    for (int i = 0; i < atom_count; ++i) mix.push_back({w, zero});
    // make the weights sum to exactly 1 regardless of atom_count
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < mix.size(); ++i) acc += mix[i].w;
    mix.back().w = 1.0 - acc;
    s.mixtures.push_back(std::move(mix));
  }
  return s;
}

// Re-embed a schedule into another basis, keeping knots and weights.
// Atoms built from theta are re-embedded exactly; atoms whose fields were
// set directly carry their shared modes over.
inline RelaxedControlSchedule rebase_schedule(const RelaxedControlSchedule& q,
                                              const BasisSpec& to) {
  RelaxedControlSchedule out;
  out.knots = q.knots;
  out.mixtures.reserve(q.mixtures.size());
  for (const auto& mix : q.mixtures) {
    Mixture m;
    m.reserve(mix.size());
    for (const auto& wa : mix)
      m.push_back({wa.w, wa.atom.theta.empty()
                             ? ControlAtom{{}, rebase(wa.atom.field, to)}
                             : make_atom(wa.atom.theta, to)});
    out.mixtures.push_back(std::move(m));
  }
  return out;
}

// The three built-in control operators L(m,u).
struct ControlOperatorSpec {
  enum class Kind { additive, pure_additive, multiplicative };
  Kind kind = Kind::additive;
};

inline GridField apply_control_operator(const ControlOperatorSpec& op, const GridField& m,
                                        const GridField& u) {
  switch (op.kind) {
    case ControlOperatorSpec::Kind::additive: return cross_plus(m, u); // m x u + u
    case ControlOperatorSpec::Kind::pure_additive: return u;
    case ControlOperatorSpec::Kind::multiplicative: return cross(m, u);
  }
  throw std::invalid_argument("apply_control_operator: unknown kind");
}

// P_n sum_i w_i L(m, u_i): the relaxed control term of the Galerkin drift.
inline SpectralField evaluate_control_term(const SpectralField& m, const Mixture& mix,
                                           const ControlOperatorSpec& op, const BasisOps& ops) {
  require_same_basis(m.basis, ops.basis(), "evaluate_control_term");
  const GridField mg = to_physical(m, ops);
  GridField acc = zero_grid(m.basis);
  for (const auto& wa : mix) {
    require_same_basis(wa.atom.field.basis, m.basis, "evaluate_control_term");
    const GridField ug = to_physical(wa.atom.field, ops);
    const GridField Lg = apply_control_operator(op, mg, ug);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < acc.values[c].size(); ++i)
        acc.values[c][i] += wa.w * Lg.values[c][i];
  }
  return to_spectral(acc, ops);
}

inline SpectralField evaluate_control_term(const SpectralField& m, const Mixture& mix,
                                           const ControlOperatorSpec& op) {
  return evaluate_control_term(m, mix, op, BasisOps(m.basis));
}

// integral over [0,T] of the p-th kappa moment of the mixture,
// sum_k (s_{k+1}-s_k) sum_i w_i kappa(u_i)^p, power in {2,4}.
inline double kappa_moment(const RelaxedControlSchedule& s, int power, const BasisOps& ops) {
  if (power != 2 && power != 4)
    throw std::invalid_argument("kappa_moment: power must be 2 or 4, got " +
                                std::to_string(power));
  double total = 0.0;
  for (std::size_t k = 0; k < s.mixtures.size(); ++k) {
    const double ds = s.knots[k + 1] - s.knots[k];
    double inner = 0.0;
    for (const auto& wa : s.mixtures[k]) {
      const double ka = kappa(wa.atom, ops);
      const double k2 = ka * ka;
      inner += wa.w * (power == 2 ? k2 : k2 * k2);
    }
    total += ds * inner;
  }
  return total;
}

inline double kappa_moment(const RelaxedControlSchedule& s, int power) {
  if (s.mixtures.empty() || s.mixtures[0].empty())
    throw std::invalid_argument("kappa_moment: empty schedule");
  return kappa_moment(s, power, BasisOps(s.mixtures[0][0].atom.field.basis));
}

// Fraction of control mass (time-weighted) sitting at kappa > R.  Levels
// of the embedded mixtures are tight exactly when this decays in R.
inline double tightness_diagnostic(const RelaxedControlSchedule& s, double R,
                                   const BasisOps& ops) {
  if (s.knots.size() < 2) throw std::invalid_argument("tightness_diagnostic: empty schedule");
  const double T = s.knots.back() - s.knots.front();
  double mass = 0.0;
  for (std::size_t k = 0; k < s.mixtures.size(); ++k) {
    const double ds = s.knots[k + 1] - s.knots[k];
    for (const auto& wa : s.mixtures[k])
      if (kappa(wa.atom, ops) > R) mass += ds * wa.w;
  }
  return mass / T;
}

inline double tightness_diagnostic(const RelaxedControlSchedule& s, double R) {
  if (s.mixtures.empty() || s.mixtures[0].empty())
    throw std::invalid_argument("tightness_diagnostic: empty schedule");
  return tightness_diagnostic(s, R, BasisOps(s.mixtures[0][0].atom.field.basis));
}

// JSON form: {"knots": [...], "mixtures": [[{"w": .., "theta": [..]}, ..], ..]}.
// Only theta is serialized; the embedding is reapplied on load.  nlohmann
// emits shortest-round-trip decimal literals, so values reload bit-exact.
inline nlohmann::json schedule_to_json(const RelaxedControlSchedule& s) {
  nlohmann::json j;
  j["knots"] = s.knots;
  nlohmann::json mixtures = nlohmann::json::array();
  for (const auto& mix : s.mixtures) {
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& wa : mix) jm.push_back({{"w", wa.w}, {"theta", wa.atom.theta}});
    mixtures.push_back(jm);
  }
  j["mixtures"] = mixtures;
  return j;
}

inline RelaxedControlSchedule schedule_from_json(const nlohmann::json& j, const BasisSpec& b) {
  RelaxedControlSchedule s;
  if (!j.contains("knots") || !j.contains("mixtures"))
    throw std::invalid_argument("schedule: missing \"knots\" or \"mixtures\"");
  s.knots = j.at("knots").get<std::vector<double>>();
  for (const auto& jm : j.at("mixtures")) {
    Mixture mix;
    for (const auto& ja : jm)
      mix.push_back({ja.at("w").get<double>(),
                     make_atom(ja.at("theta").get<std::vector<double>>(), b)});
    s.mixtures.push_back(std::move(mix));
  }
  return s;
}

} // namespace sllb
