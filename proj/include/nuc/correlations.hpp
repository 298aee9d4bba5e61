#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nuc/localization.hpp"

namespace nuc {

/// g = ω^{-1/2} h̃ L±e_j together with the eigenvalue it is attached to.
struct CorrelationSource {
  int index = 0;
  Sign sign = Sign::plus;
  double t = 0.0;
  SpVector g;
  double norm2 = 0.0;
};

CorrelationSource correlation_source(const Model& model, int j, Sign sign);

/// ⟨g|U(x)g⟩ = Δˢ Σ_p |g(p)|² e^{i(ω x⁰ − p·x)}
cplx corr_fn(const MomentumGrid& grid, const SpVector& g, const SpacetimePoint& x);

struct CorrelationScan {
  int index = 0;
  Sign sign = Sign::plus;
  double t = 0.0;
  std::vector<SpacetimePoint> points;
  std::vector<cplx> values;

  std::vector<double> moduli() const;
};

CorrelationScan corr_scan(const MomentumGrid& grid, const CorrelationSource& src,
                          const std::vector<SpacetimePoint>& points, int threads = 1);

/// Correlation at every configuration lattice point at fixed time x⁰, from a single FFT.
CVec lattice_correlation(const MomentumGrid& grid, const SpVector& g, double time = 0.0);

struct SupportCheck {
  double max_modulus = 0.0;
  double norm2 = 0.0;
  double inner_radius = 0.0, outer_radius = 0.0;
  Eigen::Index points = 0;
  double relative() const { return norm2 > 0 ? max_modulus / norm2 : 0.0; }
};

/// Largest |⟨g|U(0,x)g⟩| over lattice points with 4r < |x| < wrap radius.
SupportCheck support_vanishing_check(const MomentumGrid& grid, const CorrelationSource& src, double r);

struct DecayFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;   // RMS of the log residuals
  double window_lo = 0.0, window_hi = 0.0;
  int radii_used = 0;
};

/// Log-log least squares on the radial envelope: the largest modulus in each of `shells`
/// equal-width shells of [lo, hi]. Throws PreconditionError with fewer than 4 usable shells.
DecayFit fit_power_law(const std::vector<double>& radii, const std::vector<double>& moduli, double lo, double hi,
                       int shells = 12);

struct SpatialDecay {
  DecayFit fit;
  double calibrated_constant = 0.0;  // max |C|(|x|+1)^{s-2}/t² over the sampled window
  double uniform_bound = 0.0;        // ‖ω^{2γ-1}h̃‖_∞ t²
  double worst_uniform_margin = 0.0;
  Eigen::Index points = 0;
};

/// Default fit window [2r, 0.75·wrap].
std::pair<double, double> default_fit_window(const MomentumGrid& grid, double r);

SpatialDecay spatial_decay_fit(const Model& model, const CorrelationSource& src, double lo, double hi);

double uniform_bound(const Model& model, double t);

/// Lattice points k·d for the 13 directions d of the unit cube's axes and diagonals
/// (first three axes), 1 ≤ k, |x| < max_radius, with time x⁰ = time_ratio·|x|.
std::vector<SpacetimePoint> ray_points(const MomentumGrid& grid, double max_radius, double time_ratio, int k_parity = -1);

struct SpacelikeDecay {
  double calibrated_constant = 0.0;
  double worst_margin = 0.0;   // min over test points of bound − |C|
  double worst_ratio = 0.0;    // max over test points of |C|/bound
  std::vector<double> test_margins;
};

/// Calibrates Ĉ = max |C(x)|(|x⃗| − |x⁰| + 1)^{s−2−ε}/t² on `train`, then checks the bound on
/// `test`. Throws PreconditionError on a timelike point.
SpacelikeDecay spacelike_decay_check(const MomentumGrid& grid, const CorrelationSource& src, double epsilon,
                                     const std::vector<SpacetimePoint>& train, const std::vector<SpacetimePoint>& test,
                                     int threads = 1);

double spacelike_weight(const SpacetimePoint& x, int s, double epsilon);

/// Training is every spacelike lattice point (|x⁰| ≤ |x⃗| < wrap) at each of `train_times`,
/// evaluated by one FFT per time. The best lattice points of the `refine_starts` best times
/// seed a Nelder-Mead search over off-lattice (x⃗, x⁰/|x⃗|). Testing is an explicit point list
/// evaluated by direct sums.
struct SpacelikeSweeps {
  std::vector<double> train_times;
  int refine_starts = 8;
  std::vector<SpacetimePoint> test;
};

/// Training times 0, dx/4, ... below the wrap radius. Test points: the 13 lattice rays at
/// x⁰ = τ|x⃗| for τ ∈ {0.3, 0.5}, plus `random_points` seeded off-lattice points with
/// τ uniform in [0, 1].
SpacelikeSweeps spacelike_sweeps(const MomentumGrid& grid, std::uint64_t seed, int random_points = 200);

SpacelikeDecay spacelike_decay_check(const MomentumGrid& grid, const CorrelationSource& src, double epsilon,
                                     const SpacelikeSweeps& sweeps, int threads = 1);

/// Minimum eigenvalue of [⟨g|U(x_i − x_j)g⟩]_{ij}.
double correlation_gram_min_eigenvalue(const MomentumGrid& grid, const SpVector& g,
                                       const std::vector<SpacetimePoint>& points);

struct KernelSymbol {
  std::string name;
  RVec symbol;                                 // F̃ on the momentum grid
  std::function<double(double)> profile;       // |F| as a function of |x|, decreasing
};

/// F̃ = |p|^{-2}, whose configuration kernel is c_s |x|^{-(s-2)}.
KernelSymbol inverse_square_kernel(const MomentumGrid& grid);

/// c_s = 2^{s/2-2} Γ(s/2 - 1)
double inverse_square_constant(int s);

/// (2π)^{-s/2} ∫ χ(O_{2(ρ+pad)}) by radial Simpson quadrature.
double cutoff_constant(int s, double rho, double pad);

struct KernelNorm {
  double radius = 0.0;
  std::vector<double> x;
  double computed = 0.0;
  double bound = 0.0;
  int iterations = 0;
  double restart_spread = 0.0;
  double margin() const { return bound - computed; }
};

/// ‖χ(O_ρ) F̃ χ_x(O_ρ)‖ by power iteration on B†B from `restarts` random complex starts.
KernelNorm kernel_norm_bound(const MomentumGrid& grid, double rho, double pad, const std::vector<double>& x,
                             const KernelSymbol& kernel, std::uint64_t seed, int restarts = 3, double tol = 1e-6,
                             int max_iterations = 2000);

/// `count` radii evenly spaced in [3(ρ+pad), wrap − (ρ+pad)] along the first axis, so the
/// translated cutoff never reaches the box boundary.
std::vector<KernelNorm> kernel_sweep(const MomentumGrid& grid, double rho, double pad, int count, std::uint64_t seed,
                                     int threads = 1);

struct KernelSplit {
  double l2_part = 0.0;        // ‖|p|^{-1}θ(1−|p|)‖₂ on the grid
  double sup_remainder = 0.0;  // sup |p|^{-1}θ(|p|−1)
};

KernelSplit inverse_square_split(const MomentumGrid& grid);

}  // namespace nuc
