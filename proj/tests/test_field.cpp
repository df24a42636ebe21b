#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sllb/field.hpp"

using namespace sllb;

TEST_CASE("basis validation names the offending field", "[field]") {
  CHECK_THROWS_WITH(validate(BasisSpec{3, 8, 32}), Catch::Matchers::ContainsSubstring("d"));
  CHECK_THROWS_WITH(validate(BasisSpec{1, 0, 32}), Catch::Matchers::ContainsSubstring("n"));
  CHECK_THROWS_WITH(validate(BasisSpec{1, 8, 15}), Catch::Matchers::ContainsSubstring("M"));
  CHECK_NOTHROW(validate(BasisSpec{2, 8, 16}));
}

TEST_CASE("eigenvalue matches finite-difference eigensolve", "[field]") {
  const BasisSpec b1{1, 8, 32};
  // frozen reference: pi^2 = 9.869604401089358
  const std::array<int, 1> k1{1};
  CHECK(eigenvalue(std::span<const int>(k1), b1) == Catch::Approx(9.869604401089358).epsilon(1e-14));

  for (int k = 1; k <= 4; ++k) {
    const std::array<int, 1> kk{k};
    const double lam = eigenvalue(std::span<const int>(kk), b1);
    const double ref = oracle::fd_neumann_eigenvalue_extrapolated(k, 128);
    CHECK(std::abs(lam - ref) / ref < 1e-3);
  }

  const BasisSpec b2{2, 4, 8};
  const std::array<int, 2> k12{1, 2};
  const double lam12 = eigenvalue(std::span<const int>(k12), b2);
  const double ref12 = oracle::fd_neumann_eigenvalue_extrapolated(1, 128) +
                       oracle::fd_neumann_eigenvalue_extrapolated(2, 128);
  CHECK(std::abs(lam12 - ref12) / ref12 < 1e-3);
  CHECK(lam12 == Catch::Approx(5.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-13));

  const std::array<int, 1> bad{8};
  CHECK_THROWS_AS(eigenvalue(std::span<const int>(bad), b1), std::out_of_range);
  const std::array<int, 2> wrong_rank{1, 1};
  CHECK_THROWS_AS(eigenvalue(std::span<const int>(wrong_rank), b1), std::out_of_range);
}

TEST_CASE("constant field synthesizes to exact grid values", "[field]") {
  const BasisSpec b{1, 8, 32};
  SpectralField f = zero_field(b);
  f.coeffs[0][0] = 1.0;
  const GridField g = to_physical(f);
  for (int i = 0; i < b.M; ++i) {
    CHECK(g.values[0][i] == 1.0);
    CHECK(g.values[1][i] == 0.0);
  }
  CHECK(norm(f, NormKind::L2) == 1.0);
}

TEST_CASE("analysis annihilates constants exactly on dyadic grids", "[field]") {
  // This exactness keeps trajectories that live on the constant mode from
  // leaking rounding residue into high modes, where explicit schemes at
  // coarse time steps would amplify it.
  for (const BasisSpec b : {BasisSpec{1, 8, 32}, BasisSpec{1, 16, 64}, BasisSpec{2, 8, 32}}) {
    GridField g = zero_grid(b);
    const double v = 0.7321546507892143;
    for (int c = 0; c < 3; ++c)
      for (auto& x : g.values[c]) x = v * (c + 1);
    const SpectralField f = to_spectral(g);
    for (int c = 0; c < 3; ++c) {
      CHECK(f.coeffs[c][0] == v * (c + 1));
      for (std::size_t k = 1; k < f.coeffs[c].size(); ++k) CHECK(f.coeffs[c][k] == 0.0);
    }
  }
}

TEST_CASE("transform round trip is the identity on span", "[field]") {
  for (const BasisSpec b : {BasisSpec{1, 4, 16}, BasisSpec{1, 5, 11}, BasisSpec{2, 4, 16}}) {
    const SpectralField f = oracle::random_field(b, 42);
    const SpectralField back = to_spectral(to_physical(f));
    for (int c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < f.coeffs[c].size(); ++k)
        CHECK(back.coeffs[c][k] == Catch::Approx(f.coeffs[c][k]).margin(1e-12));
  }
}

TEST_CASE("to_spectral agrees with direct quadrature of <g,e_k>", "[field]") {
  const BasisSpec b{1, 4, 16};
  const SpectralField f = oracle::random_field(b, 7);
  const SpectralField got = to_spectral(to_physical(f));
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < b.n; ++k) {
      const double ref = oracle::coefficient_by_quadrature(f, c, k, 0, 4096);
      CHECK(got.coeffs[c][k] == Catch::Approx(ref).margin(1e-10));
    }

  const BasisSpec b2{2, 3, 8};
  const SpectralField f2 = oracle::random_field(b2, 8);
  const SpectralField got2 = to_spectral(to_physical(f2));
  for (int k1 = 0; k1 < b2.n; ++k1)
    for (int k2 = 0; k2 < b2.n; ++k2) {
      const double ref = oracle::coefficient_by_quadrature(f2, 1, k1, k2, 512);
      CHECK(got2.coeffs[1][static_cast<std::size_t>(k1) * b2.n + k2] ==
            Catch::Approx(ref).margin(1e-10));
    }
}

TEST_CASE("transforms are linear", "[field]") {
  const BasisSpec b{1, 6, 16};
  const SpectralField f = oracle::random_field(b, 1);
  const SpectralField g = oracle::random_field(b, 2);
  SpectralField lin = zero_field(b);
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < lin.coeffs[c].size(); ++k)
      lin.coeffs[c][k] = 2.5 * f.coeffs[c][k] - 0.75 * g.coeffs[c][k];
  const GridField gf = to_physical(f);
  const GridField gg = to_physical(g);
  const GridField glin = to_physical(lin);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < b.M; ++i)
      CHECK(glin.values[c][i] ==
            Catch::Approx(2.5 * gf.values[c][i] - 0.75 * gg.values[c][i]).margin(1e-13));
}

TEST_CASE("Parseval holds against grid quadrature", "[field][property]") {
  for (const BasisSpec b : {BasisSpec{1, 16, 64}, BasisSpec{2, 8, 32}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SpectralField f = oracle::random_field(b, 100 + seed);
      double spectral = 0.0;
      for (int c = 0; c < 3; ++c)
        for (double x : f.coeffs[c]) spectral += x * x;
      const GridField g = to_physical(f);
      const BasisOps ops(b);
      double grid = 0.0;
      for (int c = 0; c < 3; ++c)
        for (double v : g.values[c]) grid += ops.quad_weight() * v * v;
      CHECK(grid == Catch::Approx(spectral).epsilon(1e-8));
    }
  }
}

TEST_CASE("projection truncates, nests and commutes with the Laplacian", "[field]") {
  const BasisSpec b{1, 8, 32};
  const SpectralField f = oracle::random_field(b, 3);

  const SpectralField p4 = project(f, 4);
  // Parseval partial sum oracle
  double kept = 0.0, full = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 4; ++k) kept += f.coeffs[c][k] * f.coeffs[c][k];
    for (int k = 0; k < b.n; ++k) full += f.coeffs[c][k] * f.coeffs[c][k];
  }
  const double l2p = norm(p4, NormKind::L2);
  CHECK(l2p * l2p == Catch::Approx(kept).epsilon(1e-13));
  CHECK(l2p <= norm(f, NormKind::L2));

  const SpectralField p44 = project(p4, 4);
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < p4.coeffs[c].size(); ++k)
      CHECK(p44.coeffs[c][k] == p4.coeffs[c][k]);

  const SpectralField a = laplacian(project(f, 5));
  const SpectralField bb = project(laplacian(f), 5);
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < a.coeffs[c].size(); ++k)
      CHECK(a.coeffs[c][k] == Catch::Approx(bb.coeffs[c][k]).margin(1e-14));

  CHECK_THROWS_AS(project(f, 9), std::out_of_range);
  CHECK_THROWS_AS(project(f, 0), std::out_of_range);

  // d=2: any index component >= n' is dropped
  const BasisSpec b2{2, 4, 8};
  SpectralField f2 = oracle::random_field(b2, 4);
  const SpectralField q = project(f2, 2);
  for (int k1 = 0; k1 < 4; ++k1)
    for (int k2 = 0; k2 < 4; ++k2) {
      const double v = q.coeffs[0][static_cast<std::size_t>(k1) * 4 + k2];
      if (k1 >= 2 || k2 >= 2)
        CHECK(v == 0.0);
      else
        CHECK(v == f2.coeffs[0][static_cast<std::size_t>(k1) * 4 + k2]);
    }
}

TEST_CASE("laplacian is diagonal and self-adjoint", "[field]") {
  const BasisSpec b{1, 8, 32};
  SpectralField f = zero_field(b);
  f.coeffs[2][3] = 2.0;
  const SpectralField lf = laplacian(f);
  const std::array<int, 1> k3{3};
  CHECK(lf.coeffs[2][3] == Catch::Approx(-eigenvalue(std::span<const int>(k3), b) * 2.0));
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < b.n; ++k)
      if (!(c == 2 && k == 3)) CHECK(lf.coeffs[c][k] == 0.0);

  // <Delta f, g> = <f, Delta g> and <Delta f, f> = -sum lambda c^2, all
  // evaluated through grid quadrature rather than the spectral shortcut.
  const SpectralField fr = oracle::random_field(b, 11);
  const SpectralField gr = oracle::random_field(b, 12);
  const BasisOps ops(b);
  const GridField glf = to_physical(laplacian(fr), ops);
  const GridField gg = to_physical(gr, ops);
  const GridField gf = to_physical(fr, ops);
  const GridField glg = to_physical(laplacian(gr), ops);
  double lhs = 0.0, rhs = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < b.M; ++i) {
      lhs += ops.quad_weight() * glf.values[c][i] * gg.values[c][i];
      rhs += ops.quad_weight() * gf.values[c][i] * glg.values[c][i];
    }
  CHECK(lhs == Catch::Approx(rhs).margin(1e-10));

  double quad_form = 0.0, spectral_form = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < b.M; ++i)
      quad_form += ops.quad_weight() * glf.values[c][i] * gf.values[c][i];
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < b.n; ++k)
      spectral_form -= ops.mode_lambda()[k] * fr.coeffs[c][k] * fr.coeffs[c][k];
  CHECK(quad_form == Catch::Approx(spectral_form).margin(1e-10));
}

TEST_CASE("norms of a single mode match closed forms", "[field]") {
  const BasisSpec b{1, 8, 32};
  SpectralField f = zero_field(b);
  f.coeffs[0][1] = 1.0;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(norm(f, NormKind::L2) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(norm(f, NormKind::H1) == Catch::Approx(std::sqrt(1.0 + pi2)).epsilon(1e-13));
  CHECK(norm(f, NormKind::H2) == Catch::Approx(std::sqrt(1.0 + pi2 + pi2 * pi2)).epsilon(1e-13));

  SpectralField c = zero_field(b);
  c.coeffs[1][0] = -0.8;
  CHECK(norm(c, NormKind::L2) == Catch::Approx(0.8).epsilon(1e-14));
  CHECK(norm(c, NormKind::L4) == Catch::Approx(0.8).epsilon(1e-13));
  CHECK(norm(c, NormKind::Linf) == Catch::Approx(0.8).epsilon(1e-13));
}

TEST_CASE("H1 and H2 norms match fine-grid quadrature", "[field][property]") {
  for (const BasisSpec b : {BasisSpec{1, 8, 32}, BasisSpec{2, 4, 8}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SpectralField f = oracle::random_field(b, 500 + seed);
      const int N = b.d == 1 ? 4096 : 512;
      const double h1 = norm(f, NormKind::H1);
      const double h2 = norm(f, NormKind::H2);
      CHECK(h1 * h1 == Catch::Approx(oracle::h1_sq_by_quadrature(f, N)).epsilon(1e-6));
      CHECK(h2 * h2 == Catch::Approx(oracle::h2_sq_by_quadrature(f, N)).epsilon(1e-6));
    }
  }
}

TEST_CASE("L4 norm agrees with fine quadrature of |f|^4", "[field]") {
  const BasisSpec b{1, 6, 16};
  const SpectralField f = oracle::random_field(b, 21);
  const double l4 = norm(f, NormKind::L4);
  const double ref = oracle::trapezoid_1d(
      [&](double x) {
        double q = 0.0;
        for (int c = 0; c < 3; ++c) {
          const double v = oracle::field_value(f, c, x);
          q += v * v;
        }
        return q * q;
      },
      8192);
  CHECK(l4 * l4 * l4 * l4 == Catch::Approx(ref).epsilon(1e-10));
}

TEST_CASE("basis mismatch raises shape errors", "[field]") {
  const BasisSpec a{1, 8, 32};
  const BasisSpec b{1, 8, 64};
  const SpectralField f = zero_field(a);
  const BasisOps ops(b);
  CHECK_THROWS_AS(to_physical(f, ops), shape_error);
  SpectralField g = zero_field(b);
  CHECK_THROWS_AS(difference(f, g), shape_error);
}

TEST_CASE("rebase moves shared modes between resolutions", "[field]") {
  const BasisSpec lo{1, 4, 8};
  const BasisSpec hi{1, 8, 32};
  const SpectralField f = oracle::random_field(hi, 22);

  const SpectralField down = rebase(f, lo);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 4; ++k) CHECK(down.coeffs[c][k] == f.coeffs[c][k]);

  // down-then-up equals the projection onto the low modes
  const SpectralField round = rebase(down, hi);
  const SpectralField proj = project(f, 4);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 8; ++k) CHECK(round.coeffs[c][k] == proj.coeffs[c][k]);

  // rebase into the same basis is the identity
  const SpectralField same = rebase(f, hi);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 8; ++k) CHECK(same.coeffs[c][k] == f.coeffs[c][k]);

  CHECK_THROWS_AS(rebase(f, BasisSpec{2, 4, 8}), shape_error);
}

TEST_CASE("rebase respects the 2d flat layout", "[field]") {
  const BasisSpec lo{2, 2, 4};
  const BasisSpec hi{2, 4, 8};
  const SpectralField f = oracle::random_field(hi, 23);
  const SpectralField down = rebase(f, lo);
  for (int c = 0; c < 3; ++c)
    for (int k1 = 0; k1 < 2; ++k1)
      for (int k2 = 0; k2 < 2; ++k2)
        CHECK(down.coeffs[c][k1 * 2 + k2] == f.coeffs[c][k1 * 4 + k2]);
}
