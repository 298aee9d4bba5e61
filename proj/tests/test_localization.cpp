#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SVD>

#include "nuc/error.hpp"
#include "nuc/linalg.hpp"
#include "nuc/localization.hpp"

using namespace nuc;

namespace {

const Model& default_model() {
  static const Model m = [] {
    ModelParams p;
    p.grid = {3, 32, 8.0, true};
    return build_model(p);
  }();
  return m;
}

const Model& small_model() {
  static const Model m = [] {
    ModelParams p;
    p.grid = {3, 16, 4.0, true};
    p.r = 2.0;
    p.family_size = 12;
    p.E = 2.0;
    return build_model(p);
  }();
  return m;
}

// Applies Σ_i |T_i|² to a grid vector through projections and symbols only.
SpVector apply_T_squared(const Model& m, const SpVector& v) {
  const MomentumGrid& g = *m.grid;
  RVec e_sym = (g.omega().array() <= m.params.E).select(g.omega().cwiseInverse(), 0.0);
  RVec h_sym = m.h.symbol.array() * g.omega().array().pow(-2.0 * m.params.gamma);
  SpVector out = SpVector::Zero(v.size());
  for (const Subspace* l : {&m.lplus, &m.lminus}) {
    SpVector pv = l->project(g, v);
    out += l->project(g, e_sym.cast<cplx>().cwiseProduct(pv));
    out += l->project(g, h_sym.cast<cplx>().cwiseProduct(pv));
  }
  return out;
}

RMat random_psd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  RMat a(d, d / 2 + 1);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  return a * a.transpose();
}

}  // namespace

TEST_CASE("test family: members are supported in the ball and independent") {
  const Model& m = small_model();
  for (const CVec& f : m.family.members)
    for (Eigen::Index i = 0; i < f.size(); ++i)
      if (m.grid->config_radius()[i] >= m.params.r) CHECK(f[i] == cplx(0.0));
  CHECK(m.lplus.singular_values.minCoeff() > 1e-8 * m.lplus.singular_values.maxCoeff());
  CHECK_THROWS_AS(make_test_family(*m.grid, 1.0, 500), PreconditionError);
}

TEST_CASE("build_L_pm: a single bump spans omega^{1/2} psi~ for sign minus") {
  const Model& m = small_model();
  const MomentumGrid& g = *m.grid;
  TestFunctionFamily one = make_test_family(g, 2.0, 1);
  Subspace l = build_L_pm(g, one, Sign::minus, 1e-8);
  REQUIRE(l.dim() == 1);
  SpVector v = omega_power(g, 0.5).apply(g.to_momentum(one.members[0]));
  v /= g.norm(v);
  CHECK(std::abs(std::abs(g.inner(l.basis.col(0), v)) - 1.0) < 1e-12);
  TestFunctionFamily none;
  CHECK_THROWS_AS(build_L_pm(g, none, Sign::plus, 1e-8), PreconditionError);
}

TEST_CASE("build_L_pm: orthonormal basis, idempotent self-adjoint projection, J-invariant vectors") {
  const Model& m = small_model();
  const MomentumGrid& g = *m.grid;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  for (const Subspace* l : {&m.lplus, &m.lminus}) {
    CMat gram = weighted_gram(l->basis, l->basis, g.weight());
    CHECK((gram - CMat::Identity(l->dim(), l->dim())).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index k = 0; k < l->dim(); ++k)
      CHECK(g.norm(conjugate_J(g, l->basis.col(k)) - l->basis.col(k)) < 1e-10);
    for (int trial = 0; trial < 5; ++trial) {
      CVec a(g.size()), b(g.size());
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        a[i] = cplx(nd(rng), nd(rng));
        b[i] = cplx(nd(rng), nd(rng));
      }
      SpVector pa = l->project(g, a);
      CHECK(g.norm(l->project(g, pa) - pa) <= 1e-10 * g.norm(a));
      CHECK(std::abs(g.inner(pa, b) - g.inner(a, l->project(g, b))) <= 1e-10 * g.norm(a) * g.norm(b));
    }
  }
}

TEST_CASE("build_L_pm: dimension of the default family is stable under refinement") {
  // Frozen from the n = 32 run: 17 of the 20 generators survive the 1e-8 filter.
  const Model& m = default_model();
  CHECK(m.lplus.dim() == 17);
  CHECK(m.lminus.dim() == 17);
  auto fine = build_grid({3, 48, 8.0, true});
  TestFunctionFamily fam = make_test_family(*fine, 1.0, 20);
  Subspace lp = build_L_pm(*fine, fam, Sign::plus, 1e-8);
  CHECK(std::abs(lp.dim() - m.lplus.dim()) <= 1);
}

TEST_CASE("build_L_real: symmetrized generators and real dimension") {
  const Model& m = small_model();
  const MomentumGrid& g = *m.grid;
  const cplx i(0, 1);
  for (Eigen::Index k = 0; k < m.lplus.dim(); ++k) {
    SpVector f = i * m.lplus.basis.col(k) + 0.3 * m.lplus.basis.col(0);
    SpVector sym = f + conjugate_J(g, f);
    CHECK(g.norm(conjugate_J(g, sym) - sym) < 1e-10);
    SpVector h = m.lminus.basis.col(k) * cplx(0.2, 0.7);
    SpVector anti = h - conjugate_J(g, h);
    CHECK(g.norm(conjugate_J(g, anti) + anti) < 1e-10);
  }
  Subspace l = build_L_real(g, m.lplus, m.lminus);
  CHECK(l.dim() <= m.lplus.dim() + m.lminus.dim());
  CHECK(l.dim() >= std::max(m.lplus.dim(), m.lminus.dim()));
  RMat gram = weighted_gram(l.basis, l.basis, g.weight()).real();
  CHECK((gram - RMat::Identity(l.dim(), l.dim())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("choose_h: real, supported in O_r, transform is a squared modulus") {
  const Model& m = default_model();
  const MomentumGrid& g = *m.grid;
  const HFunction& h = m.h;
  CHECK(h.config.imag().cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (g.config_radius()[i] >= m.params.r) CHECK(h.config[i] == cplx(0.0));
  CHECK(h.symbol.minCoeff() >= -1e-14);
  CHECK(h.symbol.maxCoeff() == doctest::Approx(1.0));
  // Independent evaluation: |Σ_x ψ_{r/2}(x) e^{-ip·x}|² up to the normalization fixed at p_0.
  auto raw = [&](Eigen::Index k) {
    cplx acc = 0;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double b = bump(g.config_radius()[j] / (0.5 * m.params.r));
      if (b == 0) continue;
      double ph = 0;
      for (int a = 0; a < 3; ++a) ph -= g.momentum(k, a) * g.position(j, a);
      acc += b * std::polar(1.0, ph);
    }
    return std::norm(acc);
  };
  const Eigen::Index k0 = 0;
  for (Eigen::Index k : {Eigen::Index(100), Eigen::Index(9000), Eigen::Index(16400), Eigen::Index(30001)})
    CHECK(h.symbol[k] / h.symbol[k0] == doctest::Approx(raw(k) / raw(k0)).epsilon(1e-10));
}

TEST_CASE("choose_h: certificate values for r=1, E=4, n=32") {
  const Model& m = default_model();
  // Regression constants frozen from the grid minimum scan.
  CHECK(m.h.min_in_window == doctest::Approx(0.637265).epsilon(1e-5));
  CHECK(m.h.sup_inv_sq == doctest::Approx(2.46241).epsilon(1e-5));
  CHECK_THROWS_AS(choose_h(*m.grid, 1.0, -1.0), PreconditionError);
}

TEST_CASE("build_T: eigenpairs, orthonormality, J-invariance") {
  const Model& m = default_model();
  const MomentumGrid& g = *m.grid;
  const LocalizationSpectrum& sp = m.spectrum;
  for (Eigen::Index j = 0; j < sp.t.size(); ++j) {
    CHECK(sp.t[j] >= 0);
    if (j > 0) CHECK(sp.t[j] <= sp.t[j - 1]);
    const SpVector e = sp.vectors.col(j);
    CHECK(g.norm(conjugate_J(g, e) - e) < 1e-8);
    SpVector t2e = apply_T_squared(m, e);
    CHECK(g.norm(t2e - sp.t[j] * sp.t[j] * e) < 1e-8);
  }
  CMat gram = weighted_gram(sp.vectors, sp.vectors, g.weight());
  CHECK((gram - CMat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("build_T: spectrum agrees with a dense SVD of the stacked components") {
  for (const Model* mp : {&small_model(), &default_model()}) {
    const Model& m = *mp;
    const MomentumGrid& g = *m.grid;
    CMat gens(g.size(), m.lplus.dim() + m.lminus.dim());
    gens << m.lplus.basis, m.lminus.basis;
    Orthonormalized v = orthonormalize(gens, g.weight(), 1e-12);
    RVec e_sym = (g.omega().array() <= m.params.E).select(g.omega().array().pow(-0.5), 0.0);
    RVec h_sym = (m.h.symbol.array() * g.omega().array().pow(-2.0 * m.params.gamma)).sqrt();
    const Eigen::Index big = g.size();
    CMat stacked(4 * big, v.rank);
    int block = 0;
    for (const RVec* sym : {&e_sym, &h_sym})
      for (const Subspace* l : {&m.lplus, &m.lminus}) {
        CMat proj = l->basis * weighted_gram(l->basis, v.basis, g.weight());
        stacked.middleRows(block++ * big, big) = std::sqrt(g.weight()) * (sym->asDiagonal() * proj);
      }
    Eigen::BDCSVD<CMat> svd(stacked);
    RVec sv = svd.singularValues();
    REQUIRE(sv.size() == m.spectrum.t.size());
    CHECK((sv - m.spectrum.t).cwiseAbs().maxCoeff() < 1e-10 * sv[0]);
  }
}

TEST_CASE("build_T: regression values for the default scenario") {
  const Model& m = default_model();
  // Frozen from the dense-SVD-checked n = 32 run.
  CHECK(m.spectrum.t[0] == doctest::Approx(1.227590).epsilon(1e-5));
  CHECK(schatten_p(m.spectrum.t, 1.0) == doctest::Approx(7.34077).epsilon(1e-5));
  CHECK(schatten_p(m.spectrum.t, 0.5) == doctest::Approx(13.3466).epsilon(1e-5));
}

TEST_CASE("build_T: parameter guards") {
  const Model& m = small_model();
  CHECK_THROWS_AS(build_T(*m.grid, m.lplus, m.lminus, 2.0, 1.0, m.h), PreconditionError);
  CHECK_THROWS_AS(build_T(*m.grid, m.lplus, m.lminus, 2.0, 0.4, m.h), PreconditionError);
  CHECK_THROWS_AS(build_T(*m.grid, m.lplus, m.lminus, 0.0, 0.95, m.h), PreconditionError);
}

TEST_CASE("schatten_p: elementary values") {
  RVec one(1);
  one << 0.7;
  CHECK(schatten_p(one, 0.5) == doctest::Approx(std::sqrt(0.7)));
  RVec v(3);
  v << 0.5, 0.2, 0.1;
  CHECK(schatten_p(v, 1.0) == doctest::Approx(0.8));
  CHECK_THROWS_AS(schatten_p(v, 0.0), PreconditionError);
}

TEST_CASE("schatten_p: Kosaki subadditivity on the component pairs") {
  const Model& m = default_model();
  const auto& c = m.spectrum.components;
  for (double p : {0.25, 0.5, 1.0}) {
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) CHECK(kosaki_check(c[a].square, c[b].square, p).holds());
    CHECK(subadditivity_check(m.spectrum, p).holds());
  }
  // p = 1/2 is strictly subadditive here, so the plain margin is positive.
  CHECK(kosaki_check(c[0].square, c[2].square, 0.5).margin() > 0);
}

TEST_CASE("schatten_p: Kosaki subadditivity on random positive pairs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 9;
    RMat a = random_psd(d, rng), b = random_psd(d, rng);
    for (double p : {0.25, 0.5, 1.0}) CHECK(kosaki_check(a, b, p).holds());
  }
}

TEST_CASE("schatten_p: decreasing in p when all singular values are at most one") {
  const Model& m = default_model();
  for (const auto& c : m.spectrum.components) {
    if (c.singular_values.maxCoeff() > 1.0) continue;
    double prev = schatten_p(c.singular_values, 0.25);
    for (double p : {0.5, 0.75, 1.0}) {
      const double cur = schatten_p(c.singular_values, p);
      CHECK(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("Schatten norms of T are stable between n=32 and n=48") {
  const Model& m = default_model();
  ModelParams p = m.params;
  p.grid.n = 48;
  Model fine = build_model(p);
  for (double q : {0.5, 1.0}) {
    const double a = schatten_p(m.spectrum.t, q), b = schatten_p(fine.spectrum.t, q);
    CHECK(std::isfinite(a));
    CHECK(std::abs(a - b) / a < 0.05);
  }
}

TEST_CASE("SmoothCutoff: range, plateau and vanishing region") {
  SmoothCutoff c{2.0, 0.5};
  CHECK(c(0.0) == 1.0);
  CHECK(c(2.0) == 1.0);
  CHECK(c(2.5) == 0.0);
  CHECK(c(7.0) == 0.0);
  double prev = 1.0;
  for (int k = 0; k <= 100; ++k) {
    const double v = c(2.0 + 0.005 * k);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(c(2.25) == doctest::Approx(0.5));
}

TEST_CASE("chil identity: exact on grid-supported generators") {
  const Model& m = default_model();
  const double r = m.params.r;
  CHECK(chil_identity_check(*m.grid, m.lplus, std::nullopt) < 1e-12);
  for (int n : {24, 32, 48}) {
    auto g = build_grid({3, n, 8.0, true});
    TestFunctionFamily fam = make_test_family(*g, r, 20);
    for (Sign s : {Sign::plus, Sign::minus}) {
      Subspace l = build_L_pm(*g, fam, s, 1e-8);
      CHECK(chil_identity_check(*g, l, SmoothCutoff{2 * r, 0.25 * r}) < 1e-12);
    }
  }
}
