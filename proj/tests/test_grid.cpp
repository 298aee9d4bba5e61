#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nuc/error.hpp"
#include "nuc/grid.hpp"
#include "nuc/localization.hpp"

using namespace nuc;

namespace {

CVec random_vector(Eigen::Index size, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(size);
  for (auto& z : v) z = cplx(nd(rng), nd(rng));
  return v;
}

SpacetimePoint random_point(int s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3, 3);
  SpacetimePoint x{u(rng), std::vector<double>(s)};
  for (auto& c : x.space) c = u(rng);
  return x;
}

// Direct evaluation of (2π)^{-s/2} dxˢ Σ_x e^{-ip·x} g(x), independent of the FFT path.
CVec direct_to_momentum(const MomentumGrid& grid, const CVec& g) {
  CVec out = CVec::Zero(grid.size());
  const double pref = std::pow(2 * std::numbers::pi, -0.5 * grid.dim()) * grid.config_weight();
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      double ph = 0;
      for (int a = 0; a < grid.dim(); ++a) ph -= grid.momentum(k, a) * grid.position(j, a);
      out[k] += pref * std::polar(1.0, ph) * g[j];
    }
  return out;
}

}  // namespace

TEST_CASE("build_grid: half-shifted grid excludes the origin") {
  auto g = build_grid({3, 4, 2.0, true});
  CHECK(g->size() == 64);
  CHECK(g->omega().minCoeff() > 0);
}

TEST_CASE("build_grid: reflection is an involution mapping p to -p") {
  for (bool shift : {true, false}) {
    auto g = build_grid({3, 6, 3.0, shift});
    const auto& r = g->reflection();
    for (Eigen::Index i = 0; i < g->size(); ++i) {
      CHECK(r[r[i]] == i);
      if (shift)
        for (int a = 0; a < 3; ++a) CHECK(g->momentum(r[i], a) == doctest::Approx(-g->momentum(i, a)));
    }
  }
}

TEST_CASE("build_grid: minimum |p| on the default grid is sqrt(3)*dp/2") {
  auto g = build_grid({3, 32, 8.0, true});
  CHECK(g->dp() == 0.5);
  CHECK(g->omega().minCoeff() == doctest::Approx(std::sqrt(3.0) * 0.25).epsilon(1e-14));
}

TEST_CASE("build_grid: rejects invalid specs") {
  CHECK_THROWS_AS(build_grid({3, 7, 2.0, true}), PreconditionError);
  CHECK_THROWS_AS(build_grid({3, 8, 0.0, true}), PreconditionError);
  CHECK_THROWS_AS(build_grid({3, 8, -1.0, true}), PreconditionError);
  CHECK_THROWS_AS(build_grid({1, 8, 2.0, true}), PreconditionError);
}

TEST_CASE("omega_power: identity, unit momentum and the negative-power guard") {
  auto g = build_grid({3, 4, 2.0, false});
  DiagonalOperator id = omega_power(*g, 0.0);
  CHECK((id.symbol.array() == cplx(1.0)).all());
  Eigen::Index unit = -1;
  for (Eigen::Index i = 0; i < g->size(); ++i)
    if (g->momentum(i, 0) == 1.0 && g->momentum(i, 1) == 0.0 && g->momentum(i, 2) == 0.0) unit = i;
  REQUIRE(unit >= 0);
  CHECK(omega_power(*g, 1.0).symbol[unit].real() == doctest::Approx(1.0));
  CHECK_THROWS_AS(omega_power(*g, -0.5), PreconditionError);
}

TEST_CASE("omega_power: weighted norm of a bump matches a pointwise quadrature loop") {
  auto g = build_grid({3, 16, 6.0, true});
  TestFunctionFamily fam = make_test_family(*g, 1.5, 1);
  SpVector f = g->to_momentum(fam.members[0]);
  SpVector v = omega_power(*g, -0.5).apply(f);
  double acc = 0;
  for (Eigen::Index i = 0; i < g->size(); ++i) {
    double p2 = 0;
    for (int a = 0; a < 3; ++a) p2 += g->momentum(i, a) * g->momentum(i, a);
    acc += std::norm(f[i]) / std::sqrt(p2) * std::pow(g->dp(), 3);
  }
  CHECK(g->norm(v) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
}

TEST_CASE("omega_power: exponents add pointwise") {
  auto g = build_grid({3, 8, 3.0, true});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const double a = u(rng), b = u(rng);
    CVec lhs = omega_power(*g, a).compose(omega_power(*g, b)).symbol;
    CVec rhs = omega_power(*g, a + b).symbol;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("translate: identity, unitarity and single-point evaluation") {
  auto g = build_grid({3, 8, 3.0, true});
  std::mt19937_64 rng(11);
  CVec f = random_vector(g->size(), rng);
  CHECK((translate(*g, f, {0.0, {0, 0, 0}}) - f).norm() == 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    SpacetimePoint x = random_point(3, rng);
    CHECK(g->norm(translate(*g, f, x)) == doctest::Approx(g->norm(f)).epsilon(1e-13));
  }
  const Eigen::Index k = 77;
  CVec single = CVec::Zero(g->size());
  single[k] = cplx(0.3, -1.2);
  SpacetimePoint x{0.7, {1.1, -0.4, 2.5}};
  double ph = g->omega()[k] * x.time;
  for (int a = 0; a < 3; ++a) ph -= g->momentum(k, a) * x.space[a];
  cplx expect = std::polar(1.0, ph) * std::norm(single[k]) * g->weight();
  cplx got = g->inner(single, translate(*g, single, x));
  CHECK(std::abs(got - expect) < 1e-14);
}

TEST_CASE("translate: composition adds the arguments") {
  auto g = build_grid({3, 8, 3.0, true});
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    CVec f = random_vector(g->size(), rng);
    SpacetimePoint x = random_point(3, rng), y = random_point(3, rng);
    CVec two = translate(*g, translate(*g, f, x), y);
    CVec one = translate(*g, f, x + y);
    CHECK((two - one).norm() <= 1e-12 * f.norm());
  }
}

TEST_CASE("conjugate_J: antilinear involution fixing transforms of real functions") {
  auto g = build_grid({3, 8, 3.0, true});
  std::mt19937_64 rng(7);
  CVec f = random_vector(g->size(), rng);
  const cplx i(0, 1);
  CHECK((conjugate_J(*g, conjugate_J(*g, f)) - f).norm() == 0.0);
  CHECK((conjugate_J(*g, i * f) + i * conjugate_J(*g, f)).norm() <= 1e-14 * f.norm());

  CVec even(g->size());
  for (Eigen::Index k = 0; k < g->size(); ++k) even[k] = std::cos(g->omega()[k]);
  CHECK((conjugate_J(*g, even) - even).norm() == 0.0);

  TestFunctionFamily fam = make_test_family(*g, 2.0, 10);
  for (const CVec& m : fam.members) {
    SpVector ft = g->to_momentum(m);
    CHECK((conjugate_J(*g, ft) - ft).norm() <= 1e-12 * ft.norm());
  }
}

TEST_CASE("conjugate_J: commutes with spatial shifts and reverses time") {
  auto g = build_grid({3, 8, 3.0, true});
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    CVec f = random_vector(g->size(), rng);
    SpacetimePoint x = random_point(3, rng);
    SpacetimePoint reversed{-x.time, x.space};
    CVec lhs = conjugate_J(*g, translate(*g, conjugate_J(*g, f), x));
    CHECK((lhs - translate(*g, f, reversed)).norm() <= 1e-12 * f.norm());
  }
}

TEST_CASE("transforms: FFT path matches the explicit sum") {
  for (bool shift : {true, false}) {
    auto g = build_grid({3, 6, 2.5, shift});
    std::mt19937_64 rng(13);
    CVec x = random_vector(g->size(), rng);
    CVec fast = g->to_momentum(x);
    CVec slow = direct_to_momentum(*g, x);
    CHECK((fast - slow).norm() <= 1e-12 * slow.norm());
  }
}

TEST_CASE("transforms: inversion, delta and Parseval") {
  auto g = build_grid({3, 16, 4.0, true});
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    CVec x = random_vector(g->size(), rng);
    CVec f = g->to_momentum(x);
    CHECK(g->norm(f) == doctest::Approx(g->config_norm(x)).epsilon(1e-10));
    if (trial < 5) CHECK((g->to_config(f) - x).norm() <= 1e-10 * x.norm());
  }
  CVec delta = CVec::Zero(g->size());
  delta[g->config_index({1, -2, 3})] = 1.0;
  RVec mod = g->to_momentum(delta).cwiseAbs();
  CHECK(mod.maxCoeff() - mod.minCoeff() <= 1e-14);
}

TEST_CASE("transforms: shape mismatch is rejected") {
  auto g = build_grid({3, 4, 2.0, true});
  CHECK_THROWS_AS(g->to_momentum(CVec::Zero(10)), PreconditionError);
  CHECK_THROWS_AS(translate(*g, CVec::Zero(10), {0, {0, 0, 0}}), PreconditionError);
}
