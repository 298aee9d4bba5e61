#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nuc {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

/// Momentum-space samples of a single-particle wave function on a MomentumGrid.
using SpVector = CVec;

struct GridSpec {
  int s = 3;
  int n = 32;
  double pmax = 8.0;
  bool half_shift = true;
};

struct SpacetimePoint {
  double time = 0.0;
  std::vector<double> space;

  double spatial_norm() const;
};

SpacetimePoint operator+(const SpacetimePoint& a, const SpacetimePoint& b);
SpacetimePoint operator-(const SpacetimePoint& a, const SpacetimePoint& b);

/// Pointwise multiplication operator in momentum space.
struct DiagonalOperator {
  CVec symbol;
  std::string tag;

  SpVector apply(const SpVector& f) const;
  DiagonalOperator compose(const DiagonalOperator& other) const;
};

class FftPlans;

/// Periodic momentum lattice p_k = (k + 1/2)Δ − pmax per axis (or kΔ − pmax without
/// the half shift), with the dual configuration lattice x_j = (j − n/2)·π/pmax.
/// Row-major flattening, last axis fastest.
class MomentumGrid {
 public:
  explicit MomentumGrid(const GridSpec& spec);
  ~MomentumGrid();
  MomentumGrid(const MomentumGrid&) = delete;
  MomentumGrid& operator=(const MomentumGrid&) = delete;

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.s; }
  int points_per_axis() const { return spec_.n; }
  Eigen::Index size() const { return size_; }

  double dp() const { return dp_; }
  double dx() const { return dx_; }
  /// Δˢ
  double weight() const { return weight_; }
  /// dxˢ
  double config_weight() const { return config_weight_; }
  double box_length() const { return spec_.n * dx_; }
  /// Largest |x⃗| for which spatial statements are not contaminated by periodic images.
  double wrap_radius() const { return 0.5 * box_length(); }

  double momentum(Eigen::Index i, int axis) const;
  const std::vector<double>& axis_momenta() const { return axis_p_; }
  const std::vector<double>& axis_positions() const { return axis_x_; }
  double position(Eigen::Index i, int axis) const;
  const RVec& omega() const { return omega_; }
  /// Distinct values of |p⃗| and, per grid point, the index of its value in that list.
  const std::vector<double>& omega_values() const { return omega_values_; }
  const std::vector<int>& omega_class() const { return omega_class_; }
  const RVec& config_radius() const { return config_radius_; }
  const std::vector<Eigen::Index>& reflection() const { return reflection_; }
  bool contains_zero_momentum() const;
  Eigen::Index config_index(const std::vector<int>& multi) const;

  double inner_norm2(const SpVector& f) const;
  double norm(const SpVector& f) const;
  cplx inner(const SpVector& a, const SpVector& b) const;
  double config_norm(const CVec& g) const;

  SpVector to_momentum(const CVec& g) const;
  CVec to_config(const SpVector& f) const;

  void check_shape(const CVec& v, const char* what) const;

 private:
  GridSpec spec_;
  Eigen::Index size_ = 0;
  double dp_ = 0, dx_ = 0, weight_ = 0, config_weight_ = 0;
  std::vector<double> axis_p_, axis_x_;
  RVec omega_, config_radius_;
  std::vector<double> omega_values_;
  std::vector<int> omega_class_;
  std::vector<Eigen::Index> reflection_;
  CVec pre_twiddle_, post_twiddle_;
  cplx forward_scale_, backward_scale_;
  std::unique_ptr<FftPlans> plans_;
};

std::shared_ptr<const MomentumGrid> build_grid(const GridSpec& spec);

DiagonalOperator omega_power(const MomentumGrid& grid, double a);
/// Indicator of |p⃗| ≤ E.
DiagonalOperator energy_window(const MomentumGrid& grid, double E);

/// (U(x)f)(p⃗) = e^{i(ω(p⃗)x⁰ − p⃗·x⃗)} f(p⃗)
SpVector translate(const MomentumGrid& grid, const SpVector& f, const SpacetimePoint& x);
DiagonalOperator translation_phase(const MomentumGrid& grid, const SpacetimePoint& x);

/// Complex conjugation in configuration space: f(p⃗) ↦ conj f(−p⃗).
SpVector conjugate_J(const MomentumGrid& grid, const SpVector& f);

}  // namespace nuc
