#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nuc/fock.hpp"

namespace nuc {

struct TranslationConfig {
  std::string name;
  std::vector<SpacetimePoint> points;
};

/// inf_{i≠j} (|x⃗_i − x⃗_j| − |x⁰_i − x⁰_j|); +∞ when there are fewer than two points.
double delta_x(const std::vector<SpacetimePoint>& points);

struct MultiNorm {
  double value = 0.0;
  double spread = 0.0;            // (max − min)/max over restarts
  std::vector<double> restarts;
  int iterations = 0;             // largest over restarts
  bool stagnated = false;         // some restart hit the iteration cap
};

/// sup over orthonormal ψ, ψ' in the range of P_E of (Σ_k |⟨ψ'|A_k ψ⟩|²)^{1/2}. ψ' ⊥ ψ is
/// eliminated exactly (top eigenvector of a Gram matrix) and ψ is found by BFGS from seeded
/// random starts; each restart reports its explicit pair. The functionals |ψ⟩⟨ψ'| with
/// ψ ⊥ ψ' vanish on 1 and have trace norm 1, and they attain the distance of Σ c̄_k A_k to
/// the scalars, so the sup equals the norm over the vacuum-subtracted unit ball.
MultiNorm multi_norm_blocks(const std::vector<CMat>& blocks, std::uint64_t seed, int restarts = 5,
                            int max_iterations = 2000);

/// ‖S_{μ̄ν̄}‖_{x_1…x_N} on a Fock space whose modes span every translated ladder argument.
MultiNorm multi_norm_bruteforce(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                                const EnergyProjection& proj, const MultiIndexPair& pair,
                                const std::vector<SpacetimePoint>& points, std::uint64_t seed, int restarts = 5);

/// 1 + (N − 1)/(δ + 1)^{s−2−ε}
double braces_factor(int N, double delta, int s, double epsilon);

struct SemiboundInputs {
  double E = 0.0;
  double sup_inv_sq = 0.0;   // sup_{|p|≤E} h̃^{-2}
  double c_hat = 0.0;        // calibrated spacelike constant
  int s = 3;
  double epsilon = 0.1;
};

SemiboundInputs semibound_inputs(const Model& model, double c_hat, double epsilon);

/// 16 Ĉ sup|h̃|^{-2} E^{|μ̄|+|ν̄|} t^{2(μ̄+ν̄)} {1 + (N−1)/(δ+1)^{s−2−ε}}, a bound on the
/// square of the multi-point norm. Throws for δ < 0 or ν̄ = 0.
double semibound_rhs(const MultiIndexPair& pair, const RVec& t, int N, double delta, const SemiboundInputs& in);

/// Σ_k (2⁵E)^{pk/2} ‖T^p‖₁^k / (k!)^{p/2} in log space.
struct SeriesSum {
  double log_sum = 0.0;        // natural log of the summed terms
  double log_tail = 0.0;       // natural log of the geometric bound on the omitted terms
  long long terms = 0;
  double log_total() const;
};

/// Sums at least `min_terms` terms and stops once the ratio of successive terms is below 1
/// and the geometric tail is below e^{-40} of the sum. Throws ConvergenceError after
/// `max_terms`, naming the offending term.
SeriesSum majorant_series(double E, double p, double trace_p, long long min_terms = 0,
                          long long max_terms = 100000000);

struct PiNormBound {
  double p = 1.0;
  int N = 1;
  double delta = 0.0;
  double braces = 1.0;
  SeriesSum series;
  double log10_value = 0.0;   // log10 of 4Ĉ^{1/2} sup|h̃|^{-1} (series)^{4/p} braces^{1/2}
};

PiNormBound pi_norm_bound(double p, double trace_p, int N, double delta, const SemiboundInputs& in);

struct StaticTerm {
  int order = 0;
  double tau_bound = 0.0;
  double s_norm = 0.0;
};

struct StaticEstimate {
  double p = 1.0;
  std::vector<double> partial;   // (Σ_{order ≤ k} ‖τ‖^p ‖S‖^p)^{1/p}, k = 0…K
  double log10_tail = 0.0;       // log10 of the majorant mass Σ ‖τ‖^p‖S‖^p over orders > K
};

/// Partial sums over computed terms, with the tail beyond K taken from the product
/// majorant (Σ_k a_k)^4 minus its orders ≤ K.
StaticEstimate p_nuclear_static(const std::vector<StaticTerm>& terms, double p, int K, double E, double trace_p);

/// Largest Ĉ over the top `count` eigenvectors of both signs.
double calibrate_spacelike_constant(const Model& model, int count, double epsilon, std::uint64_t seed,
                                    int threads = 1);

}  // namespace nuc
