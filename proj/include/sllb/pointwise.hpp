#pragma once

// Nodewise R^3 algebra on grid fields: the cross products and the Bloch
// saturation term that make up the nonlinearities.  All operations are
// purely local per node, so they commute with any node reordering and
// preserve bitwise-constant grids.

#include <cmath>
#include <cstddef>

#include "sllb/field.hpp"

namespace sllb {

namespace detail {
inline void cross3(const double* a, const double* b, double* out) {
  out[0] = a[1] * b[2] - a[2] * b[1];
  out[1] = a[2] * b[0] - a[0] * b[2];
  out[2] = a[0] * b[1] - a[1] * b[0];
}
} // namespace detail

// a x b nodewise.
inline GridField cross(const GridField& a, const GridField& b) {
  require_same_basis(a.basis, b.basis, "cross");
  GridField out = zero_grid(a.basis);
  const std::size_t N = a.values[0].size();
  for (std::size_t i = 0; i < N; ++i) {
    const double av[3] = {a.values[0][i], a.values[1][i], a.values[2][i]};
    const double bv[3] = {b.values[0][i], b.values[1][i], b.values[2][i]};
    double cv[3];
    detail::cross3(av, bv, cv);
    out.values[0][i] = cv[0];
    out.values[1][i] = cv[1];
    out.values[2][i] = cv[2];
  }
  return out;
}

// (1 + |m|^2) m nodewise, |.| the euclidean norm on R^3.
inline GridField bloch_term(const GridField& m) {
  GridField out = zero_grid(m.basis);
  const std::size_t N = m.values[0].size();
  for (std::size_t i = 0; i < N; ++i) {
    const double q = 1.0 + m.values[0][i] * m.values[0][i] + m.values[1][i] * m.values[1][i] +
                     m.values[2][i] * m.values[2][i];
    out.values[0][i] = q * m.values[0][i];
    out.values[1][i] = q * m.values[1][i];
    out.values[2][i] = q * m.values[2][i];
  }
  return out;
}

// (m x h) x h nodewise; the Stratonovich-to-Ito drift correction shape.
inline GridField double_cross(const GridField& m, const GridField& h) {
  require_same_basis(m.basis, h.basis, "double_cross");
  GridField out = zero_grid(m.basis);
  const std::size_t N = m.values[0].size();
  for (std::size_t i = 0; i < N; ++i) {
    const double mv[3] = {m.values[0][i], m.values[1][i], m.values[2][i]};
    const double hv[3] = {h.values[0][i], h.values[1][i], h.values[2][i]};
    double t[3], o[3];
    detail::cross3(mv, hv, t);
    detail::cross3(t, hv, o);
    out.values[0][i] = o[0];
    out.values[1][i] = o[1];
    out.values[2][i] = o[2];
  }
  return out;
}

// m x h + h nodewise; the diffusion shape.
inline GridField cross_plus(const GridField& m, const GridField& h) {
  require_same_basis(m.basis, h.basis, "cross_plus");
  GridField out = cross(m, h);
  const std::size_t N = out.values[0].size();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < N; ++i) out.values[c][i] += h.values[c][i];
  return out;
}

inline GridField add(const GridField& a, const GridField& b) {
  require_same_basis(a.basis, b.basis, "add");
  GridField out = a;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out.values[c].size(); ++i) out.values[c][i] += b.values[c][i];
  return out;
}

} // namespace sllb
