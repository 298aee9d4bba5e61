#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nuc/grid.hpp"

namespace nuc {

enum class Sign { plus, minus };

inline const char* sign_name(Sign s) { return s == Sign::plus ? "+" : "-"; }

/// Real configuration-space functions supported in the ball of radius r: the bump
/// exp(−1/(1−|x/r|²)) times monomials of degree ≤ 2, then cos/sin modulations along the
/// first three axes, then cubic monomials, truncated to m members.
struct TestFunctionFamily {
  double radius = 1.0;
  std::vector<CVec> members;
  std::vector<std::string> labels;
};

double bump(double radius_ratio);

TestFunctionFamily make_test_family(const MomentumGrid& grid, double r, int m);

/// Orthonormal basis (columns, momentum space) of a closed subspace.
struct Subspace {
  CMat basis;
  Sign sign = Sign::plus;
  double svd_tolerance = 1e-8;
  RVec singular_values;
  bool real_linear = false;

  Eigen::Index dim() const { return basis.cols(); }
  SpVector project(const MomentumGrid& grid, const SpVector& f) const;
};

/// Basis of ω^{∓1/2} ψ̃_k. The generators are J-invariant, so the basis is built over
/// the reals and every basis vector is J-invariant as well.
Subspace build_L_pm(const MomentumGrid& grid, const TestFunctionFamily& family, Sign sign, double tol);

/// Real-linear span of (1+J)L⁺ ∪ (1−J)L⁻, orthonormal for Re⟨·|·⟩.
Subspace build_L_real(const MomentumGrid& grid, const Subspace& lplus, const Subspace& lminus, double tol = 1e-10);

/// Autocorrelation of the bump of radius r/2, scaled so that max h̃ = 1.
struct HFunction {
  CVec config;
  RVec symbol;           // h̃ on the momentum grid
  double scale = 1.0;    // factor applied to the raw autocorrelation
  double energy = 0.0;
  double min_in_window = 0.0;   // min_{|p|≤E} h̃
  double sup_inv_sq = 0.0;      // sup_{|p|≤E} h̃^{-2}
  double sup_inv() const { return std::sqrt(sup_inv_sq); }
};

constexpr double kPositivityFloor = 1e-12;

/// Throws CertificateError when min_{|p|≤E} h̃ falls below kPositivityFloor.
HFunction choose_h(const MomentumGrid& grid, double r, double E);

struct ComponentOperator {
  std::string name;   // "E+", "E-", "h+", "h-"
  RMat square;        // |T_i|² in the J-real basis of L⁺ + L⁻
  RVec singular_values;
};

struct LocalizationSpectrum {
  RVec t;           // descending
  CMat vectors;     // e_j as columns
  RMat coefficients;
  CMat jreal_basis;
  RMat square;      // T² in the J-real basis
  std::array<ComponentOperator, 4> components;
  double E = 0.0;
  double gamma = 0.0;
};

LocalizationSpectrum build_T(const MomentumGrid& grid, const Subspace& lplus, const Subspace& lminus, double E,
                             double gamma, const HFunction& h);

void check_gamma(int s, double gamma);

double schatten_p(const RVec& spectrum, double p);

/// Relative roundoff floor for trace inequalities that are equalities at p = 1.
constexpr double kTraceRoundoff = 1e-12;

struct InequalityMargin {
  std::string name;
  double lhs = 0, rhs = 0;
  double margin() const { return rhs - lhs; }
  bool holds() const { return margin() >= -kTraceRoundoff * std::abs(rhs); }
};

/// ‖(A+B)^p‖₁ ≤ ‖A^p‖₁ + ‖B^p‖₁ for positive semidefinite A, B.
InequalityMargin kosaki_check(const RMat& a, const RMat& b, double p);

/// ‖T^p‖₁ ≤ Σ_i ‖|T_i|^p‖₁ over the four components.
InequalityMargin subadditivity_check(const LocalizationSpectrum& spec, double p);

/// χ(O_ρ): 1 on |x| ≤ ρ, 0 for |x| ≥ ρ + pad, C^∞ mollifier step in between.
struct SmoothCutoff {
  double rho = 1.0;
  double pad = 0.25;

  double operator()(double radius) const;
  CVec sample(const MomentumGrid& grid, const std::vector<double>& center) const;
};

/// max over basis of ‖v − ω^{∓1/2}χω^{±1/2}v‖/‖v‖; χ = 1 when cutoff is empty.
double chil_identity_check(const MomentumGrid& grid, const Subspace& l, const std::optional<SmoothCutoff>& cutoff);

struct ModelParams {
  GridSpec grid;
  double r = 1.0;
  int family_size = 20;
  double svd_tolerance = 1e-8;
  double E = 4.0;
  double gamma = 0.95;
};

/// Everything single-particle that the later stages consume.
struct Model {
  ModelParams params;
  std::shared_ptr<const MomentumGrid> grid;
  TestFunctionFamily family;
  Subspace lplus, lminus;
  HFunction h;
  LocalizationSpectrum spectrum;

  SpVector component(int j, Sign sign) const;
};

Model build_model(const ModelParams& params);

}  // namespace nuc
