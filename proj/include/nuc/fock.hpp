#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "nuc/localization.hpp"

namespace nuc {

using SpMat = Eigen::SparseMatrix<cplx>;

/// Orthonormal single-particle modes that diagonalize ω compressed to their span.
struct ModeSet {
  std::shared_ptr<const MomentumGrid> grid;
  CMat basis;                     // columns m_a on the momentum grid
  RVec energies;                  // ⟨m_a|ω m_a⟩, ascending
  std::vector<std::string> tags;  // one per generator

  Eigen::Index count() const { return basis.cols(); }
  /// ⟨m_a|f⟩
  CVec coefficients(const SpVector& f) const;
  /// ‖f − Σ m_a⟨m_a|f⟩‖ / ‖f‖, zero for f = 0.
  double span_residual(const SpVector& f) const;
  SpVector synthesize(const CVec& c) const;
};

ModeSet build_modes(std::shared_ptr<const MomentumGrid> grid, const std::vector<SpVector>& generators,
                    std::vector<std::string> tags, double rel_tol = 1e-10);

constexpr Eigen::Index kDefaultFockCap = 20000;

/// Occupation-number basis with total occupancy ≤ n_max, ordered by total and then
/// lexicographically; index 0 is the vacuum.
struct TruncatedFock {
  int modes = 0;
  int n_max = 0;
  std::vector<std::vector<int>> occupations;
  std::vector<SpMat> lower;   // a_j

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(occupations.size()); }
  int total(Eigen::Index i) const;
  /// Throws PreconditionError for an occupation vector outside the truncation.
  Eigen::Index index_of(const std::vector<int>& occ) const;

  std::map<std::vector<int>, Eigen::Index> lookup;
};

/// Throws PreconditionError when C(M + n_max, n_max) exceeds `cap`.
TruncatedFock build_fock(int modes, int n_max, Eigen::Index cap = kDefaultFockCap);

/// a(f) = Σ_a conj(c_a) a_a for c = ⟨m|f⟩. Exact on the truncated space for any f,
/// since components outside the mode span annihilate every state in it.
SpMat annihilator(const TruncatedFock& fock, const CVec& c);
SpMat creator(const TruncatedFock& fock, const CVec& c);

/// Spectral projection of dΓ(ω) with ω compressed to the mode span.
struct EnergyProjection {
  double E = 0.0;
  RVec state_energy;                  // Σ_a n_a ω_a per basis state
  std::vector<Eigen::Index> states;   // basis states with energy ≤ E
  int max_occupancy = 0;              // largest total occupancy inside P_E
  bool truncated = false;             // a state with energy ≤ E lies above n_max

  Eigen::Index rank() const { return static_cast<Eigen::Index>(states.size()); }
  /// D × rank isometry onto the range of P_E.
  CMat isometry(Eigen::Index dimension) const;
};

EnergyProjection energy_projection(const TruncatedFock& fock, const ModeSet& modes, double E);

/// e^{i(a*(f)+a(f))} on the truncated space, by a Hermitian eigendecomposition.
CMat weyl(const TruncatedFock& fock, const CVec& c);

struct BoundCheck {
  double lhs = 0.0, rhs = 0.0;
  double slack = 0.0;
  double margin() const { return rhs - lhs; }
};

/// ‖a(ω^{1/2}f_1)…a(ω^{1/2}f_n)P_E‖ against E^{n/2}‖f_1‖…‖f_n‖, with ω^{1/2} the
/// compressed operator acting on mode coefficients.
BoundCheck energy_bound_check(const TruncatedFock& fock, const ModeSet& modes, const EnergyProjection& proj,
                              const std::vector<CVec>& f);

struct MultiIndex {
  std::vector<int> plus, minus;

  int total() const;
  double factorial() const;
  bool zero() const { return total() == 0; }
};

MultiIndex zero_index(int count);

struct MultiIndexPair {
  MultiIndex mu, nu;
  int order() const { return mu.total() + nu.total(); }
};

/// Every (μ̄, ν̄) over `count` eigenvectors with 1 ≤ |μ̄| + |ν̄| ≤ max_order; with
/// require_nu, only pairs with ν̄ ≠ 0. Graded by order, deterministic.
std::vector<MultiIndexPair> enumerate_pairs(int count, int max_order, bool require_nu);

std::string index_label(const MultiIndexPair& pair);

/// L^±e_j for j < count, optionally translated by U(x).
struct LadderArguments {
  std::vector<SpVector> plus, minus;
};

LadderArguments ladder_arguments(const Model& model, int count, const std::optional<SpacetimePoint>& x = std::nullopt);

/// a(L e)^{ν̄} P_E as a D × rank matrix.
CMat lowered_block(const TruncatedFock& fock, const ModeSet& modes, const EnergyProjection& proj,
                   const MultiIndex& nu, const LadderArguments& args);

struct SFunctional {
  CMat block;          // P_E a*(Le)^μ̄ a(Le)^ν̄ P_E on the range of P_E
  double norm = 0.0;   // ‖P_E A P_E‖
  double estimate = 0.0;  // E^{(|μ̄|+|ν̄|)/2} t^μ̄ t^ν̄
  double span_residual = 0.0;
};

/// Throws PreconditionError for μ̄ = ν̄ = 0 or when a ladder argument leaves the mode span
/// by more than 1e-8.
SFunctional S_functional(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                         const EnergyProjection& proj, const MultiIndexPair& pair, const LadderArguments& args);

/// Weyl argument f = f⁺ + i f⁻ with f^± ∈ L^± real in configuration space.
struct WeylArgument {
  SpVector plus, minus;
  SpVector full() const { return plus + cplx(0, 1) * minus; }
};

/// e^{−‖f‖²/2} i^{|μ⁺|+|ν⁺|+2|μ⁻|} ⟨e|f⁺⟩^{μ⁺+ν⁺} ⟨e|f⁻⟩^{μ⁻+ν⁻} / (μ̄! ν̄!)
cplx tau_functional(const MultiIndexPair& pair, const CVec& eplus, const CVec& eminus, double fnorm2);

/// ‖τ_{μ̄ν̄}‖ ≤ 2^{5(|μ̄|+|ν̄|)/2} / (μ̄! ν̄!)^{1/2}
double tau_norm_bound(const MultiIndexPair& pair);

/// φ(A) = ⟨ψ'|Aψ⟩ − ⟨ψ'|ψ⟩⟨Ω|AΩ⟩
struct RankOneFunctional {
  CVec psi, psi_prime;
  cplx operator()(const CMat& a) const;
};

struct ExpansionResult {
  cplx direct = 0.0;
  std::vector<cplx> partial;      // over |μ̄|+|ν̄| ≤ k, k = 0…K
  std::vector<double> residual;
  Eigen::Index terms = 0;         // pairs with nonzero S
};

/// Partial sums of Σ τ_{μ̄ν̄}(W(f)) S_{μ̄ν̄}(φ) over all eigenvectors of T against the
/// dense φ(W(f)). Each S is ⟨a^μ̄ψ'|a^ν̄ψ⟩; index branches on which the lowered state
/// vanishes are pruned. f must lie in the mode span.
ExpansionResult expansion_check(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                                const RankOneFunctional& phi, const WeylArgument& f, int K);

/// ‖P_E Σ_k (a*(g)a(g))(x_k) P_E‖ against
/// E sup|h̃|^{-2} {‖ω^{-1/2}h̃g‖² + (N−1) sup_{i≠j} |⟨ω^{-1/2}h̃g|U(x_i−x_j)ω^{-1/2}h̃g⟩|}.
/// The slack is E Σ_k max(0, ‖ω_c^{-1/2}Q_c g_k‖² − ‖ω^{-1/2}Q_E g_k‖²), the excess of the
/// compressed one-particle energy bound over the grid one.
BoundCheck harmonic_bound_check(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                                const EnergyProjection& proj, const SpVector& g,
                                const std::vector<SpacetimePoint>& points);

/// Modes spanning U(x_k)L^±e_j for j < count and every point.
ModeSet translated_modes(const Model& model, int count, const std::vector<SpacetimePoint>& points);

}  // namespace nuc
