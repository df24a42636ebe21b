#pragma once

// Neumann cosine spectral basis on the unit box [0,1]^d, d = 1 or 2.
//
// Axis basis: e_0(x) = 1, e_k(x) = sqrt(2) cos(k pi x), orthonormal in
// L^2(0,1) and Neumann-compatible (e_k'(0) = e_k'(1) = 0).  For d = 2 the
// modes are tensor products, multi-index k = (k1,k2) with 0 <= k_j < n.
// -Delta e_k = lambda_k e_k with lambda_k = sum_j (k_j pi)^2.
//
// Collocation uses the M midpoint nodes x_i = (i+1/2)/M per axis.  The
// midpoint rule on these nodes integrates cos(a pi x) exactly for all
// 0 < a < 2M, so with M >= 2n every Galerkin inner product against a
// cubic nonlinearity of n-mode fields is evaluated without aliasing
// error.  The cosine table is built with its dyadic mirror symmetry
// enforced bitwise and analysis dot products are reduced over a balanced
// binary tree; for power-of-two M this makes the analysis of an exactly
// constant grid return an exactly zero coefficient for every mode k >= 1.
// Explicit integrators run outside their linear stability region on the
// high modes whenever the exact solution never leaves the low ones, and
// this exactness is what keeps the discrete solution on that invariant
// subspace instead of feeding rounding residue into the unstable modes.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sllb {

struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BasisSpec {
  int d = 1;  // spatial dimension
  int n = 8;  // modes per axis
  int M = 32; // collocation nodes per axis

  int modes_per_axis() const { return n; }
  int num_modes() const { return d == 2 ? n * n : n; }
  int num_nodes() const { return d == 2 ? M * M : M; }
  bool operator==(const BasisSpec&) const = default;
};

inline void validate(const BasisSpec& b) {
  if (b.d != 1 && b.d != 2)
    throw std::invalid_argument("BasisSpec.d must be 1 or 2, got " + std::to_string(b.d));
  if (b.n < 1)
    throw std::invalid_argument("BasisSpec.n must be >= 1, got " + std::to_string(b.n));
  if (b.M < 2 * b.n)
    throw std::invalid_argument("BasisSpec.M must be >= 2n, got M=" + std::to_string(b.M) +
                                " with n=" + std::to_string(b.n));
}

// R^3-valued field in coefficient space: coeffs[c][k], k flat mode index
// (d=2: k = k1*n + k2).
struct SpectralField {
  BasisSpec basis;
  std::array<std::vector<double>, 3> coeffs;
};

// R^3-valued field sampled on the collocation grid: values[c][i]
// (d=2: i = i1*M + i2).
struct GridField {
  BasisSpec basis;
  std::array<std::vector<double>, 3> values;
};

inline SpectralField zero_field(const BasisSpec& b) {
  validate(b);
  SpectralField f{b, {}};
  for (auto& c : f.coeffs) c.assign(static_cast<std::size_t>(b.num_modes()), 0.0);
  return f;
}

inline GridField zero_grid(const BasisSpec& b) {
  validate(b);
  GridField g{b, {}};
  for (auto& c : g.values) c.assign(static_cast<std::size_t>(b.num_nodes()), 0.0);
  return g;
}

inline void require_same_basis(const BasisSpec& a, const BasisSpec& b, const char* where) {
  if (!(a == b))
    throw shape_error(std::string(where) + ": basis mismatch (d,n,M)=(" + std::to_string(a.d) +
                      "," + std::to_string(a.n) + "," + std::to_string(a.M) + ") vs (" +
                      std::to_string(b.d) + "," + std::to_string(b.n) + "," +
                      std::to_string(b.M) + ")");
}

// lambda_k for a multi-index with d entries.
inline double eigenvalue(std::span<const int> k, const BasisSpec& b) {
  validate(b);
  if (static_cast<int>(k.size()) != b.d)
    throw std::out_of_range("eigenvalue: multi-index has " + std::to_string(k.size()) +
                            " entries, basis dimension is " + std::to_string(b.d));
  double lam = 0.0;
  for (int j = 0; j < b.d; ++j) {
    if (k[j] < 0 || k[j] >= b.n)
      throw std::out_of_range("eigenvalue: k[" + std::to_string(j) + "]=" + std::to_string(k[j]) +
                              " outside [0," + std::to_string(b.n - 1) + "]");
    const double kp = static_cast<double>(k[j]) * std::numbers::pi;
    lam += kp * kp;
  }
  return lam;
}

namespace detail {

// cos(k pi x_i) on midpoint nodes with the reflection
// row[M-1-i] = (-1)^k row[i] enforced bitwise.  Even rows of an even-M
// table are copies of the half-size table (same real numbers: the node
// set is dyadically self-similar), which is what propagates the exact
// reflection through every level needed by the tree reduction below.
inline void cos_row(int k, int M, double* out) {
  if (k == 0) {
    std::fill(out, out + M, 1.0);
    return;
  }
  if (M % 2 == 0 && k % 2 == 0) {
    cos_row(k / 2, M / 2, out);
    for (int i = 0; i < M / 2; ++i) out[M - 1 - i] = out[i];
    return;
  }
  const int half = M / 2;
  for (int i = 0; i < half; ++i)
    out[i] = std::cos(std::numbers::pi * static_cast<double>(k * (2 * i + 1)) /
                      static_cast<double>(2 * M));
  if (M % 2 == 1) out[half] = (k % 2 == 1) ? 0.0 : std::cos(std::numbers::pi * (k / 2));
  const double sign = (k % 2 == 1) ? -1.0 : 1.0;
  for (int i = 0; i < half; ++i) out[M - 1 - i] = sign * out[i];
}

// Balanced pairwise reduction of a[i]*b[i], zero-padded to a power of
// two.  Rounding-exact antisymmetric cancellation: if the products occur
// in mirrored +/- pairs the result is exactly zero.
inline double paired_dot(const double* a, const double* b, int len, double* scratch) {
  const int P = static_cast<int>(std::bit_ceil(static_cast<unsigned>(len)));
  for (int i = 0; i < len; ++i) scratch[i] = a[i] * b[i];
  for (int i = len; i < P; ++i) scratch[i] = 0.0;
  for (int s = P / 2; s >= 1; s /= 2)
    for (int i = 0; i < s; ++i) scratch[i] = scratch[2 * i] + scratch[2 * i + 1];
  return scratch[0];
}

} // namespace detail

// Cached per-basis tables: synthesis rows e_k(x_i) and analysis rows
// e_k(x_i)/M (midpoint-rule weights are uniform).
class BasisOps {
public:
  explicit BasisOps(const BasisSpec& b) : basis_(b) {
    validate(b);
    const int n = b.n, M = b.M;
    synth_.assign(static_cast<std::size_t>(n) * M, 0.0);
    anal_.assign(static_cast<std::size_t>(n) * M, 0.0);
    std::vector<double> row(static_cast<std::size_t>(M));
    const double invM = 1.0 / static_cast<double>(M);
    for (int k = 0; k < n; ++k) {
      detail::cos_row(k, M, row.data());
      const double scale = (k == 0) ? 1.0 : std::numbers::sqrt2;
      for (int i = 0; i < M; ++i) {
        const double e = scale * row[i];
        synth_[static_cast<std::size_t>(k) * M + i] = e;
        anal_[static_cast<std::size_t>(k) * M + i] = e * invM;
      }
    }
    axis_lambda_.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double kp = static_cast<double>(k) * std::numbers::pi;
      axis_lambda_[static_cast<std::size_t>(k)] = kp * kp;
    }
    mode_lambda_.resize(static_cast<std::size_t>(b.num_modes()));
    if (b.d == 1) {
      mode_lambda_ = axis_lambda_;
    } else {
      for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2)
          mode_lambda_[static_cast<std::size_t>(k1) * n + k2] =
              axis_lambda_[static_cast<std::size_t>(k1)] + axis_lambda_[static_cast<std::size_t>(k2)];
    }
  }

  const BasisSpec& basis() const { return basis_; }
  const std::vector<double>& mode_lambda() const { return mode_lambda_; }
  double quad_weight() const {
    const double w = 1.0 / static_cast<double>(basis_.M);
    return basis_.d == 2 ? w * w : w;
  }

  // coeffs (num_modes) -> values (num_nodes), one component.
  void synthesize(const double* c, double* v) const {
    const int n = basis_.n, M = basis_.M;
    if (basis_.d == 1) {
      std::fill(v, v + M, 0.0);
      for (int k = 0; k < n; ++k) {
        const double ck = c[k];
        const double* row = &synth_[static_cast<std::size_t>(k) * M];
        for (int i = 0; i < M; ++i) v[i] += ck * row[i];
      }
    } else {
      // axis 2 then axis 1; tmp[k1][i2]
      std::vector<double> tmp(static_cast<std::size_t>(n) * M, 0.0);
      for (int k1 = 0; k1 < n; ++k1) {
        double* t = &tmp[static_cast<std::size_t>(k1) * M];
        for (int k2 = 0; k2 < n; ++k2) {
          const double ck = c[static_cast<std::size_t>(k1) * n + k2];
          const double* row = &synth_[static_cast<std::size_t>(k2) * M];
          for (int i2 = 0; i2 < M; ++i2) t[i2] += ck * row[i2];
        }
      }
      std::fill(v, v + static_cast<std::size_t>(M) * M, 0.0);
      for (int i1 = 0; i1 < M; ++i1) {
        double* line = v + static_cast<std::size_t>(i1) * M;
        for (int k1 = 0; k1 < n; ++k1) {
          const double s = synth_[static_cast<std::size_t>(k1) * M + i1];
          const double* t = &tmp[static_cast<std::size_t>(k1) * M];
          for (int i2 = 0; i2 < M; ++i2) line[i2] += s * t[i2];
        }
      }
    }
  }

  // values (num_nodes) -> coeffs (num_modes), one component.
  void analyze(const double* v, double* c) const {
    const int n = basis_.n, M = basis_.M;
    const int P = static_cast<int>(std::bit_ceil(static_cast<unsigned>(M)));
    std::vector<double> scratch(static_cast<std::size_t>(P));
    if (basis_.d == 1) {
      for (int k = 0; k < n; ++k)
        c[k] = detail::paired_dot(&anal_[static_cast<std::size_t>(k) * M], v, M, scratch.data());
    } else {
      // axis 2 per line, then axis 1 per retained k2
      std::vector<double> t(static_cast<std::size_t>(M) * n);
      for (int i1 = 0; i1 < M; ++i1)
        for (int k2 = 0; k2 < n; ++k2)
          t[static_cast<std::size_t>(i1) * n + k2] = detail::paired_dot(
              &anal_[static_cast<std::size_t>(k2) * M], v + static_cast<std::size_t>(i1) * M, M,
              scratch.data());
      std::vector<double> col(static_cast<std::size_t>(M));
      for (int k2 = 0; k2 < n; ++k2) {
        for (int i1 = 0; i1 < M; ++i1) col[static_cast<std::size_t>(i1)] = t[static_cast<std::size_t>(i1) * n + k2];
        for (int k1 = 0; k1 < n; ++k1)
          c[static_cast<std::size_t>(k1) * n + k2] = detail::paired_dot(
              &anal_[static_cast<std::size_t>(k1) * M], col.data(), M, scratch.data());
      }
    }
  }

private:
  BasisSpec basis_;
  std::vector<double> synth_; // [k*M + i] = e_k(x_i)
  std::vector<double> anal_;  // [k*M + i] = e_k(x_i)/M
  std::vector<double> axis_lambda_;
  std::vector<double> mode_lambda_;
};

inline GridField to_physical(const SpectralField& f, const BasisOps& ops) {
  require_same_basis(f.basis, ops.basis(), "to_physical");
  GridField g = zero_grid(f.basis);
  for (int c = 0; c < 3; ++c) ops.synthesize(f.coeffs[c].data(), g.values[c].data());
  return g;
}

inline SpectralField to_spectral(const GridField& g, const BasisOps& ops) {
  require_same_basis(g.basis, ops.basis(), "to_spectral");
  SpectralField f = zero_field(g.basis);
  for (int c = 0; c < 3; ++c) ops.analyze(g.values[c].data(), f.coeffs[c].data());
  return f;
}

inline GridField to_physical(const SpectralField& f) { return to_physical(f, BasisOps(f.basis)); }
inline SpectralField to_spectral(const GridField& g) { return to_spectral(g, BasisOps(g.basis)); }

// Truncation P_{n'}: zero every mode with any index component >= n_prime.
// The basis object is unchanged, so projections of the same field nest.
inline SpectralField project(const SpectralField& f, int n_prime) {
  validate(f.basis);
  if (n_prime < 1 || n_prime > f.basis.n)
    throw std::out_of_range("project: n_prime=" + std::to_string(n_prime) +
                            " outside [1," + std::to_string(f.basis.n) + "]");
  SpectralField out = f;
  const int n = f.basis.n;
  if (f.basis.d == 1) {
    for (int c = 0; c < 3; ++c)
      for (int k = n_prime; k < n; ++k) out.coeffs[c][static_cast<std::size_t>(k)] = 0.0;
  } else {
    for (int c = 0; c < 3; ++c)
      for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2)
          if (k1 >= n_prime || k2 >= n_prime)
            out.coeffs[c][static_cast<std::size_t>(k1) * n + k2] = 0.0;
  }
  return out;
}

// Copy the shared modes into a possibly different-resolution basis: the
// Galerkin inclusion when the target has more modes, the projection P_n
// when it has fewer.
inline SpectralField rebase(const SpectralField& f, const BasisSpec& to) {
  validate(f.basis);
  validate(to);
  if (f.basis.d != to.d)
    throw shape_error("rebase: dimension mismatch (" + std::to_string(f.basis.d) + " vs " +
                      std::to_string(to.d) + ")");
  if (f.basis == to) return f;
  SpectralField out = zero_field(to);
  const int nc = std::min(f.basis.n, to.n);
  if (to.d == 1) {
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < nc; ++k)
        out.coeffs[c][static_cast<std::size_t>(k)] = f.coeffs[c][static_cast<std::size_t>(k)];
  } else {
    for (int c = 0; c < 3; ++c)
      for (int k1 = 0; k1 < nc; ++k1)
        for (int k2 = 0; k2 < nc; ++k2)
          out.coeffs[c][static_cast<std::size_t>(k1) * to.n + k2] =
              f.coeffs[c][static_cast<std::size_t>(k1) * f.basis.n + k2];
  }
  return out;
}

// Delta in coefficient space: multiply mode k by -lambda_k.
inline SpectralField laplacian(const SpectralField& f, const BasisOps& ops) {
  require_same_basis(f.basis, ops.basis(), "laplacian");
  SpectralField out = f;
  const auto& lam = ops.mode_lambda();
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < lam.size(); ++k) out.coeffs[c][k] *= -lam[k];
  return out;
}

inline SpectralField laplacian(const SpectralField& f) { return laplacian(f, BasisOps(f.basis)); }

enum class NormKind { L2, H1, H2, L4, Linf };

inline double norm(const SpectralField& f, NormKind kind, const BasisOps& ops) {
  require_same_basis(f.basis, ops.basis(), "norm");
  const auto& lam = ops.mode_lambda();
  switch (kind) {
    case NormKind::L2: {
      double s = 0.0;
      for (int c = 0; c < 3; ++c)
        for (double x : f.coeffs[c]) s += x * x;
      return std::sqrt(s);
    }
    case NormKind::H1: {
      double s = 0.0;
      for (int c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < lam.size(); ++k) {
          const double x = f.coeffs[c][k];
          s += (1.0 + lam[k]) * x * x;
        }
      return std::sqrt(s);
    }
    case NormKind::H2: {
      double s = 0.0;
      for (int c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < lam.size(); ++k) {
          const double x = f.coeffs[c][k];
          s += (1.0 + lam[k] + lam[k] * lam[k]) * x * x;
        }
      return std::sqrt(s);
    }
    case NormKind::L4: {
      const GridField g = to_physical(f, ops);
      const double w = ops.quad_weight();
      double s = 0.0;
      const std::size_t N = g.values[0].size();
      for (std::size_t i = 0; i < N; ++i) {
        const double q = g.values[0][i] * g.values[0][i] + g.values[1][i] * g.values[1][i] +
                         g.values[2][i] * g.values[2][i];
        s += w * q * q;
      }
      return std::sqrt(std::sqrt(s));
    }
    case NormKind::Linf: {
      const GridField g = to_physical(f, ops);
      double m = 0.0;
      const std::size_t N = g.values[0].size();
      for (std::size_t i = 0; i < N; ++i) {
        const double q = g.values[0][i] * g.values[0][i] + g.values[1][i] * g.values[1][i] +
                         g.values[2][i] * g.values[2][i];
        m = std::max(m, q);
      }
      return std::sqrt(m);
    }
  }
  throw std::invalid_argument("norm: unknown kind");
}

inline double norm(const SpectralField& f, NormKind kind) { return norm(f, kind, BasisOps(f.basis)); }

// In-place linear algebra helpers used by the integrators.
inline void axpy(double a, const SpectralField& x, SpectralField& y) {
  require_same_basis(x.basis, y.basis, "axpy");
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < y.coeffs[c].size(); ++k) y.coeffs[c][k] += a * x.coeffs[c][k];
}

inline SpectralField scaled(const SpectralField& x, double a) {
  SpectralField out = x;
  for (int c = 0; c < 3; ++c)
    for (double& v : out.coeffs[c]) v *= a;
  return out;
}

inline SpectralField difference(const SpectralField& a, const SpectralField& b) {
  require_same_basis(a.basis, b.basis, "difference");
  SpectralField out = a;
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < out.coeffs[c].size(); ++k) out.coeffs[c][k] -= b.coeffs[c][k];
  return out;
}

inline bool finite(const SpectralField& f) {
  for (int c = 0; c < 3; ++c)
    for (double v : f.coeffs[c])
      if (!std::isfinite(v)) return false;
  return true;
}

} // namespace sllb
