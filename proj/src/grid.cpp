#include "nuc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "nuc/error.hpp"

namespace nuc {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

class FftPlans {
 public:
  FftPlans(int s, int n) {
    std::vector<int> dims(s, n);
    Eigen::Index total = 1;
    for (int a = 0; a < s; ++a) total *= n;
    CVec scratch_in(total), scratch_out(total);
    auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
    auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
    std::lock_guard lock(planner_mutex());
    // FFTW_ESTIMATE keeps the chosen algorithm, and therefore every output bit, reproducible.
    forward = fftw_plan_dft(s, dims.data(), in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward = fftw_plan_dft(s, dims.data(), in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!forward || !backward) throw Error("fftw planning failed");
  }
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  void run(fftw_plan plan, const CVec& in, CVec& out) const {
    fftw_execute_dft(plan, const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

double SpacetimePoint::spatial_norm() const {
  double acc = 0;
  for (double v : space) acc += v * v;
  return std::sqrt(acc);
}

SpacetimePoint operator+(const SpacetimePoint& a, const SpacetimePoint& b) {
  require(a.space.size() == b.space.size(), "spacetime points of different dimension");
  SpacetimePoint r{a.time + b.time, a.space};
  for (std::size_t i = 0; i < r.space.size(); ++i) r.space[i] += b.space[i];
  return r;
}

SpacetimePoint operator-(const SpacetimePoint& a, const SpacetimePoint& b) {
  require(a.space.size() == b.space.size(), "spacetime points of different dimension");
  SpacetimePoint r{a.time - b.time, a.space};
  for (std::size_t i = 0; i < r.space.size(); ++i) r.space[i] -= b.space[i];
  return r;
}

SpVector DiagonalOperator::apply(const SpVector& f) const {
  require(f.size() == symbol.size(), "diagonal operator applied to vector of wrong size");
  return symbol.cwiseProduct(f);
}

DiagonalOperator DiagonalOperator::compose(const DiagonalOperator& other) const {
  require(other.symbol.size() == symbol.size(), "composing diagonal operators of different size");
  return {symbol.cwiseProduct(other.symbol), tag + "*" + other.tag};
}

MomentumGrid::MomentumGrid(const GridSpec& spec) : spec_(spec) {
  if (spec.s < 2) throw PreconditionError("grid dimension s must be at least 2");
  if (spec.n <= 0 || spec.n % 2 != 0) throw PreconditionError("points per axis n must be positive and even");
  if (!(spec.pmax > 0)) throw PreconditionError("pmax must be positive");

  const int n = spec.n, s = spec.s;
  const double pi = std::numbers::pi;
  const double shift = spec.half_shift ? 0.5 : 0.0;
  dp_ = 2.0 * spec.pmax / n;
  dx_ = pi / spec.pmax;
  weight_ = std::pow(dp_, s);
  config_weight_ = std::pow(dx_, s);
  size_ = 1;
  for (int a = 0; a < s; ++a) size_ *= n;

  axis_p_.resize(n);
  axis_x_.resize(n);
  std::vector<cplx> pre(n), post(n);
  for (int k = 0; k < n; ++k) {
    axis_p_[k] = (k + shift - n / 2) * dp_;
    axis_x_[k] = (k - n / 2) * dx_;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    pre[k] = sign * std::polar(1.0, -2.0 * pi * shift * k / n);
    post[k] = sign;
  }

  omega_.resize(size_);
  config_radius_.resize(size_);
  reflection_.resize(size_);
  pre_twiddle_.resize(size_);
  post_twiddle_.resize(size_);
  // |p|² = (Δ/2)² Σ m_a² with integer m_a, so points related by symmetry get bitwise equal ω.
  std::vector<long> twice_index(n);
  for (int k = 0; k < n; ++k) twice_index[k] = spec.half_shift ? (2 * k + 1 - n) : (2 * k - n);
  std::vector<long> key(size_);
  std::vector<int> idx(s, 0);
  for (Eigen::Index i = 0; i < size_; ++i) {
    long m2 = 0;
    double x2 = 0;
    cplx pr = 1, po = 1;
    Eigen::Index refl = 0;
    for (int a = 0; a < s; ++a) {
      const int k = idx[a];
      m2 += twice_index[k] * twice_index[k];
      x2 += axis_x_[k] * axis_x_[k];
      pr *= pre[k];
      po *= post[k];
      const int rk = spec.half_shift ? (n - 1 - k) : ((n - k) % n);
      refl = refl * n + rk;
    }
    key[i] = m2;
    omega_[i] = 0.5 * dp_ * std::sqrt(static_cast<double>(m2));
    config_radius_[i] = std::sqrt(x2);
    reflection_[i] = refl;
    pre_twiddle_[i] = pr;
    post_twiddle_[i] = po;
    for (int a = s - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  std::vector<long> keys(key);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (long k : keys) omega_values_.push_back(0.5 * dp_ * std::sqrt(static_cast<double>(k)));
  omega_class_.resize(size_);
  for (Eigen::Index i = 0; i < size_; ++i)
    omega_class_[i] = static_cast<int>(std::lower_bound(keys.begin(), keys.end(), key[i]) - keys.begin());

  const cplx phase = std::polar(1.0, pi * (shift - n / 2));
  forward_scale_ = std::pow(std::pow(2 * pi, -0.5) * dx_, s) * std::pow(phase, s);
  backward_scale_ = std::pow(std::pow(2 * pi, -0.5) * dp_, s) * std::pow(std::conj(phase), s);
  plans_ = std::make_unique<FftPlans>(s, n);
}

MomentumGrid::~MomentumGrid() = default;

double MomentumGrid::momentum(Eigen::Index i, int axis) const {
  Eigen::Index stride = 1;
  for (int a = spec_.s - 1; a > axis; --a) stride *= spec_.n;
  return axis_p_[(i / stride) % spec_.n];
}

double MomentumGrid::position(Eigen::Index i, int axis) const {
  Eigen::Index stride = 1;
  for (int a = spec_.s - 1; a > axis; --a) stride *= spec_.n;
  return axis_x_[(i / stride) % spec_.n];
}

bool MomentumGrid::contains_zero_momentum() const { return !spec_.half_shift; }

Eigen::Index MomentumGrid::config_index(const std::vector<int>& multi) const {
  require(static_cast<int>(multi.size()) == spec_.s, "config index of wrong dimension");
  Eigen::Index i = 0;
  for (int a = 0; a < spec_.s; ++a) {
    const int j = ((multi[a] + spec_.n / 2) % spec_.n + spec_.n) % spec_.n;
    i = i * spec_.n + j;
  }
  return i;
}

void MomentumGrid::check_shape(const CVec& v, const char* what) const {
  if (v.size() != size_)
    throw PreconditionError(std::string(what) + ": vector size " + std::to_string(v.size()) +
                            " does not match grid size " + std::to_string(size_));
}

double MomentumGrid::inner_norm2(const SpVector& f) const {
  check_shape(f, "norm");
  return weight_ * f.squaredNorm();
}

double MomentumGrid::norm(const SpVector& f) const { return std::sqrt(inner_norm2(f)); }

cplx MomentumGrid::inner(const SpVector& a, const SpVector& b) const {
  check_shape(a, "inner");
  check_shape(b, "inner");
  return weight_ * a.dot(b);
}

double MomentumGrid::config_norm(const CVec& g) const {
  check_shape(g, "config_norm");
  return std::sqrt(config_weight_ * g.squaredNorm());
}

SpVector MomentumGrid::to_momentum(const CVec& g) const {
  check_shape(g, "to_momentum");
  CVec in = g.cwiseProduct(pre_twiddle_);
  CVec out(size_);
  plans_->run(plans_->forward, in, out);
  return forward_scale_ * out.cwiseProduct(post_twiddle_);
}

CVec MomentumGrid::to_config(const SpVector& f) const {
  check_shape(f, "to_config");
  CVec in = f.cwiseProduct(post_twiddle_);
  CVec out(size_);
  plans_->run(plans_->backward, in, out);
  return backward_scale_ * out.cwiseProduct(pre_twiddle_.conjugate());
}

std::shared_ptr<const MomentumGrid> build_grid(const GridSpec& spec) {
  return std::make_shared<const MomentumGrid>(spec);
}

DiagonalOperator omega_power(const MomentumGrid& grid, double a) {
  if (a < 0 && grid.contains_zero_momentum())
    throw PreconditionError("negative power of omega on a grid containing p = 0");
  CVec sym(grid.size());
  const RVec& w = grid.omega();
  for (Eigen::Index i = 0; i < grid.size(); ++i) sym[i] = (a == 0.0) ? 1.0 : std::pow(w[i], a);
  return {sym, "omega^" + std::to_string(a)};
}

DiagonalOperator energy_window(const MomentumGrid& grid, double E) {
  CVec sym = (grid.omega().array() <= E).cast<double>().cast<cplx>();
  return {sym, "Q_E"};
}

DiagonalOperator translation_phase(const MomentumGrid& grid, const SpacetimePoint& x) {
  require(static_cast<int>(x.space.size()) == grid.dim(), "translation of wrong spatial dimension");
  CVec sym(grid.size());
  const RVec& w = grid.omega();
  const int s = grid.dim(), n = grid.points_per_axis();
  std::vector<int> idx(s, 0);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double ph = w[i] * x.time;
    for (int a = 0; a < s; ++a) ph -= grid.axis_momenta()[idx[a]] * x.space[a];
    sym[i] = std::polar(1.0, ph);
    for (int a = s - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  return {sym, "U(x)"};
}

SpVector translate(const MomentumGrid& grid, const SpVector& f, const SpacetimePoint& x) {
  grid.check_shape(f, "translate");
  return translation_phase(grid, x).apply(f);
}

SpVector conjugate_J(const MomentumGrid& grid, const SpVector& f) {
  grid.check_shape(f, "conjugate_J");
  SpVector out(f.size());
  const auto& refl = grid.reflection();
  for (Eigen::Index i = 0; i < f.size(); ++i) out[i] = std::conj(f[refl[i]]);
  return out;
}

}  // namespace nuc
