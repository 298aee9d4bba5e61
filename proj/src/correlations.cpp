#include "nuc/correlations.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "nuc/error.hpp"
#include "nuc/parallel.hpp"
#include "nuc/seed.hpp"

namespace nuc {

namespace {

constexpr int kRefineIterations = 400;

// e^{-i p_a x_a} per axis, so a point costs one product per grid point instead of s exps.
std::vector<std::vector<cplx>> axis_phases(const MomentumGrid& grid, const std::vector<double>& x) {
  std::vector<std::vector<cplx>> out(grid.dim());
  for (int a = 0; a < grid.dim(); ++a) {
    out[a].resize(grid.points_per_axis());
    for (int k = 0; k < grid.points_per_axis(); ++k) out[a][k] = std::polar(1.0, -grid.axis_momenta()[k] * x[a]);
  }
  return out;
}

}  // namespace

CorrelationSource correlation_source(const Model& model, int j, Sign sign) {
  const MomentumGrid& g = *model.grid;
  CorrelationSource src;
  src.index = j;
  src.sign = sign;
  src.t = model.spectrum.t[j];
  const RVec w = model.h.symbol.array() * g.omega().array().pow(-0.5);
  src.g = w.cast<cplx>().cwiseProduct(model.component(j, sign));
  src.norm2 = g.inner_norm2(src.g);
  return src;
}

cplx corr_fn(const MomentumGrid& grid, const SpVector& g, const SpacetimePoint& x) {
  grid.check_shape(g, "corr_fn");
  require(static_cast<int>(x.space.size()) == grid.dim(), "correlation point of wrong dimension");
  const auto ph = axis_phases(grid, x.space);
  const int s = grid.dim(), n = grid.points_per_axis();
  std::vector<cplx> time_phase(grid.omega_values().size(), 1.0);
  if (x.time != 0.0)
    for (std::size_t c = 0; c < time_phase.size(); ++c) time_phase[c] = std::polar(1.0, grid.omega_values()[c] * x.time);
  const auto& cls = grid.omega_class();
  std::vector<int> idx(s, 0);
  cplx acc = 0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    cplx e = time_phase[cls[i]];
    for (int a = 0; a < s; ++a) e *= ph[a][idx[a]];
    acc += std::norm(g[i]) * e;
    for (int a = s - 1; a >= 0; --a) {
      if (++idx[a] < n) break;
      idx[a] = 0;
    }
  }
  return grid.weight() * acc;
}

std::vector<double> CorrelationScan::moduli() const {
  std::vector<double> m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m[i] = std::abs(values[i]);
  return m;
}

CorrelationScan corr_scan(const MomentumGrid& grid, const CorrelationSource& src,
                          const std::vector<SpacetimePoint>& points, int threads) {
  CorrelationScan scan;
  scan.index = src.index;
  scan.sign = src.sign;
  scan.t = src.t;
  scan.points = points;
  scan.values.resize(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) { scan.values[i] = corr_fn(grid, src.g, points[i]); });
  return scan;
}

CVec lattice_correlation(const MomentumGrid& grid, const SpVector& g, double time) {
  grid.check_shape(g, "lattice_correlation");
  CVec density = g.cwiseAbs2().cast<cplx>();
  if (time != 0.0)
    for (Eigen::Index i = 0; i < grid.size(); ++i) density[i] *= std::polar(1.0, -grid.omega()[i] * time);
  return std::pow(2 * std::numbers::pi, 0.5 * grid.dim()) * grid.to_config(density).conjugate();
}

SupportCheck support_vanishing_check(const MomentumGrid& grid, const CorrelationSource& src, double r) {
  require(src.sign == Sign::minus, "support vanishing is claimed for the minus correlation only");
  SupportCheck out;
  out.norm2 = src.norm2;
  out.inner_radius = 4 * r;
  out.outer_radius = grid.wrap_radius();
  const CVec c = lattice_correlation(grid, src.g);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double rad = grid.config_radius()[i];
    if (rad <= out.inner_radius || rad >= out.outer_radius) continue;
    ++out.points;
    out.max_modulus = std::max(out.max_modulus, std::abs(c[i]));
  }
  if (out.points == 0) throw PreconditionError("no lattice point between 4r and the wrap radius");
  return out;
}

DecayFit fit_power_law(const std::vector<double>& radii, const std::vector<double>& moduli, double lo, double hi,
                       int shells) {
  require(radii.size() == moduli.size(), "fit_power_law: size mismatch");
  require(hi > lo && lo > 0 && shells >= 4, "fit_power_law: bad window");
  std::vector<double> best(shells, 0.0), where(shells, 0.0);
  const double width = (hi - lo) / shells;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < lo || radii[i] > hi || !(moduli[i] > 0)) continue;
    const int b = std::min(shells - 1, static_cast<int>((radii[i] - lo) / width));
    if (moduli[i] > best[b]) {
      best[b] = moduli[i];
      where[b] = radii[i];
    }
  }
  std::vector<double> lx, ly;
  for (int b = 0; b < shells; ++b)
    if (best[b] > 0) {
      lx.push_back(std::log(where[b]));
      ly.push_back(std::log(best[b]));
    }
  if (lx.size() < 4) throw PreconditionError("fewer than 4 usable radii in the fit window");
  Eigen::MatrixX2d a(lx.size(), 2);
  RVec y(ly.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = lx[i];
    y[i] = ly[i];
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(y);
  DecayFit fit;
  fit.amplitude = std::exp(coef[0]);
  fit.exponent = coef[1];
  fit.residual = std::sqrt((a * coef - y).squaredNorm() / y.size());
  fit.window_lo = lo;
  fit.window_hi = hi;
  fit.radii_used = static_cast<int>(lx.size());
  return fit;
}

std::pair<double, double> default_fit_window(const MomentumGrid& grid, double r) {
  return {2.0 * r, 0.75 * grid.wrap_radius()};
}

double uniform_bound(const Model& model, double t) {
  const MomentumGrid& g = *model.grid;
  const RVec sym = g.omega().array().pow(2 * model.params.gamma - 1) * model.h.symbol.array().abs();
  return sym.maxCoeff() * t * t;
}

SpatialDecay spatial_decay_fit(const Model& model, const CorrelationSource& src, double lo, double hi) {
  const MomentumGrid& g = *model.grid;
  require(g.dim() >= 3, "spatial decay fit needs s >= 3");
  require(hi <= g.wrap_radius(), "fit window extends beyond the wrap radius");
  const CVec c = lattice_correlation(g, src.g);
  SpatialDecay out;
  out.uniform_bound = uniform_bound(model, src.t);
  out.worst_uniform_margin = std::numeric_limits<double>::infinity();
  std::vector<double> radii, moduli;
  const double decay = g.dim() - 2.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double rad = g.config_radius()[i];
    if (rad >= g.wrap_radius()) continue;
    const double m = std::abs(c[i]);
    ++out.points;
    out.worst_uniform_margin = std::min(out.worst_uniform_margin, out.uniform_bound - m);
    out.calibrated_constant = std::max(out.calibrated_constant, m * std::pow(rad + 1, decay) / (src.t * src.t));
    radii.push_back(rad);
    moduli.push_back(m);
  }
  out.fit = fit_power_law(radii, moduli, lo, hi);
  return out;
}

std::vector<SpacetimePoint> ray_points(const MomentumGrid& grid, double max_radius, double time_ratio, int k_parity) {
  const int s = grid.dim();
  const int axes = std::min(s, 3);
  std::vector<std::vector<int>> dirs;
  // Axes, face diagonals and body diagonals, one representative per ± pair.
  for (int mask = 1; mask < (1 << axes); ++mask) {
    const int lead = __builtin_ctz(mask);
    const int others = mask & ~(1 << lead);
    for (int signs = 0; signs < (1 << axes); ++signs) {
      if (signs & ~others) continue;
      std::vector<int> d(s, 0);
      for (int a = 0; a < axes; ++a)
        if (mask & (1 << a)) d[a] = (signs & (1 << a)) ? -1 : 1;
      dirs.push_back(d);
    }
  }
  std::vector<SpacetimePoint> pts;
  for (const auto& d : dirs) {
    double len = 0;
    for (int v : d) len += v * v;
    len = std::sqrt(len) * grid.dx();
    for (int k = 1; k * len < max_radius; ++k) {
      if (k_parity >= 0 && k % 2 != k_parity) continue;
      SpacetimePoint p{time_ratio * k * len, std::vector<double>(s)};
      for (int a = 0; a < s; ++a) p.space[a] = k * d[a] * grid.dx();
      pts.push_back(std::move(p));
    }
  }
  return pts;
}

double spacelike_weight(const SpacetimePoint& x, int s, double epsilon) {
  return std::pow(std::max(0.0, x.spatial_norm() - std::abs(x.time)) + 1.0, s - 2.0 - epsilon);
}

SpacelikeSweeps spacelike_sweeps(const MomentumGrid& grid, std::uint64_t seed, int random_points) {
  const int s = grid.dim();
  require(s >= 3, "spacelike sweeps are defined for s >= 3");
  const double wrap = grid.wrap_radius();
  SpacelikeSweeps out;
  for (int k = 0; k * 0.25 * grid.dx() < wrap; ++k) out.train_times.push_back(k * 0.25 * grid.dx());
  for (double tau : {0.3, 0.5}) {
    auto r = ray_points(grid, wrap, tau);
    out.test.insert(out.test.end(), r.begin(), r.end());
  }
  std::mt19937_64 rng(mix_seed(seed, 77));
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < random_points; ++i) {
    std::vector<double> d(s, 0.0);
    double len = 0;
    for (int a = 0; a < 3; ++a) {
      d[a] = nd(rng);
      len += d[a] * d[a];
    }
    len = std::sqrt(len);
    const double rad = wrap * u(rng);
    SpacetimePoint p{u(rng) * rad, std::vector<double>(s, 0.0)};
    for (int a = 0; a < 3; ++a) p.space[a] = rad * d[a] / len;
    out.test.push_back(std::move(p));
  }
  return out;
}

namespace {

void check_spacelike(const std::vector<SpacetimePoint>& pts) {
  for (const auto& p : pts)
    if (p.spatial_norm() < std::abs(p.time) * (1 - 1e-12))
      throw PreconditionError("timelike point supplied to spacelike check");
}

void score_test_points(const MomentumGrid& grid, const CorrelationSource& src, double epsilon,
                       const std::vector<SpacetimePoint>& test, int threads, SpacelikeDecay& out) {
  const double t2 = src.t * src.t;
  CorrelationScan te = corr_scan(grid, src, test, threads);
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double bound = out.calibrated_constant * t2 / spacelike_weight(test[i], grid.dim(), epsilon);
    const double m = std::abs(te.values[i]);
    out.test_margins.push_back(bound - m);
    out.worst_margin = std::min(out.worst_margin, bound - m);
    out.worst_ratio = std::max(out.worst_ratio, m / bound);
  }
}

}  // namespace

namespace {

struct RatioObjective {
  const MomentumGrid* grid;
  const CorrelationSource* src;
  double epsilon;
};

// Point (x⃗, τ) ↦ (τ|x⃗|; x⃗) with τ clamped to [0, 1]; returns −ratio so the simplex minimizes.
double negative_ratio(const gsl_vector* v, void* params) {
  const auto& o = *static_cast<const RatioObjective*>(params);
  const int s = o.grid->dim();
  SpacetimePoint p{0.0, std::vector<double>(s)};
  for (int a = 0; a < s; ++a) p.space[a] = gsl_vector_get(v, a);
  const double rad = p.spatial_norm();
  if (rad >= o.grid->wrap_radius()) return 0.0;
  p.time = std::clamp(gsl_vector_get(v, s), 0.0, 1.0) * rad;
  const double c = std::abs(corr_fn(*o.grid, o.src->g, p));
  return -c * spacelike_weight(p, s, o.epsilon) / (o.src->t * o.src->t);
}

double refine_ratio(const MomentumGrid& grid, const CorrelationSource& src, double epsilon, const SpacetimePoint& start) {
  const int s = grid.dim();
  RatioObjective obj{&grid, &src, epsilon};
  gsl_multimin_function f{&negative_ratio, static_cast<std::size_t>(s + 1), &obj};
  gsl_vector* x = gsl_vector_alloc(s + 1);
  gsl_vector* step = gsl_vector_alloc(s + 1);
  const double rad = start.spatial_norm();
  for (int a = 0; a < s; ++a) {
    gsl_vector_set(x, a, start.space[a]);
    gsl_vector_set(step, a, 0.5 * grid.dx());
  }
  gsl_vector_set(x, s, rad > 0 ? std::abs(start.time) / rad : 0.0);
  gsl_vector_set(step, s, 0.1);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, s + 1);
  gsl_multimin_fminimizer_set(m, &f, x, step);
  for (int it = 0; it < kRefineIterations; ++it) {
    if (gsl_multimin_fminimizer_iterate(m)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-4) == GSL_SUCCESS) break;
  }
  const double best = -gsl_multimin_fminimizer_minimum(m);
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return best;
}

}  // namespace

SpacelikeDecay spacelike_decay_check(const MomentumGrid& grid, const CorrelationSource& src, double epsilon,
                                     const SpacelikeSweeps& sweeps, int threads) {
  require(epsilon > 0 && epsilon < 1, "epsilon must lie in (0,1)");
  require(!sweeps.train_times.empty() && !sweeps.test.empty(), "spacelike check needs training times and test points");
  check_spacelike(sweeps.test);
  const int s = grid.dim();
  const double t2 = src.t * src.t;
  std::vector<double> best(sweeps.train_times.size(), 0.0);
  std::vector<Eigen::Index> arg(sweeps.train_times.size(), 0);
  parallel_for(sweeps.train_times.size(), threads, [&](std::size_t k) {
    const double time = sweeps.train_times[k];
    const CVec c = lattice_correlation(grid, src.g, time);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const double rad = grid.config_radius()[i];
      if (rad >= grid.wrap_radius() || rad < std::abs(time)) continue;
      const double w = std::pow(rad - std::abs(time) + 1.0, s - 2.0 - epsilon);
      const double v = std::abs(c[i]) * w / t2;
      if (v > best[k]) {
        best[k] = v;
        arg[k] = i;
      }
    }
  });
  std::vector<std::size_t> order(best.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return best[a] > best[b]; });
  order.resize(std::min<std::size_t>(order.size(), sweeps.refine_starts));
  std::vector<double> refined(order.size(), 0.0);
  parallel_for(order.size(), threads, [&](std::size_t j) {
    const std::size_t k = order[j];
    SpacetimePoint start{sweeps.train_times[k], std::vector<double>(s)};
    for (int a = 0; a < s; ++a) start.space[a] = grid.position(arg[k], a);
    refined[j] = refine_ratio(grid, src, epsilon, start);
  });
  SpacelikeDecay out;
  out.calibrated_constant = *std::max_element(best.begin(), best.end());
  for (double r : refined) out.calibrated_constant = std::max(out.calibrated_constant, r);
  score_test_points(grid, src, epsilon, sweeps.test, threads, out);
  return out;
}

SpacelikeDecay spacelike_decay_check(const MomentumGrid& grid, const CorrelationSource& src, double epsilon,
                                     const std::vector<SpacetimePoint>& train, const std::vector<SpacetimePoint>& test,
                                     int threads) {
  require(epsilon > 0 && epsilon < 1, "epsilon must lie in (0,1)");
  require(!train.empty() && !test.empty(), "spacelike check needs nonempty training and test sweeps");
  check_spacelike(train);
  check_spacelike(test);
  SpacelikeDecay out;
  CorrelationScan tr = corr_scan(grid, src, train, threads);
  for (std::size_t i = 0; i < train.size(); ++i)
    out.calibrated_constant = std::max(
        out.calibrated_constant, std::abs(tr.values[i]) * spacelike_weight(train[i], grid.dim(), epsilon) / (src.t * src.t));
  score_test_points(grid, src, epsilon, test, threads, out);
  return out;
}

double correlation_gram_min_eigenvalue(const MomentumGrid& grid, const SpVector& g,
                                       const std::vector<SpacetimePoint>& points) {
  const Eigen::Index k = static_cast<Eigen::Index>(points.size());
  CMat gram(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) gram(i, j) = corr_fn(grid, g, points[i] - points[j]);
  Eigen::SelfAdjointEigenSolver<CMat> es(gram, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double inverse_square_constant(int s) {
  require(s >= 3, "the |p|^-2 kernel is locally integrable only for s >= 3");
  return std::pow(2.0, 0.5 * s - 2) * std::tgamma(0.5 * s - 1);
}

KernelSymbol inverse_square_kernel(const MomentumGrid& grid) {
  const int s = grid.dim();
  const double cs = inverse_square_constant(s);
  return {"|p|^-2", grid.omega().array().pow(-2.0),
          [cs, s](double r) { return cs * std::pow(r, -(s - 2.0)); }};
}

double cutoff_constant(int s, double rho, double pad) {
  const double big = 2 * (rho + pad);
  const SmoothCutoff chi{big, pad};
  const double sphere = 2 * std::pow(std::numbers::pi, 0.5 * s) / std::tgamma(0.5 * s);
  const int intervals = 4000;
  const double h = pad / intervals;
  double simpson = 0;
  for (int k = 0; k <= intervals; ++k) {
    const double r = big + k * h;
    const double w = (k == 0 || k == intervals) ? 1 : (k % 2 ? 4 : 2);
    simpson += w * chi(r) * std::pow(r, s - 1);
  }
  simpson *= h / 3;
  const double integral = sphere * (std::pow(big, s) / s + simpson);
  return std::pow(2 * std::numbers::pi, -0.5 * s) * integral;
}

KernelNorm kernel_norm_bound(const MomentumGrid& grid, double rho, double pad, const std::vector<double>& x,
                             const KernelSymbol& kernel, std::uint64_t seed, int restarts, double tol,
                             int max_iterations) {
  require(static_cast<int>(x.size()) == grid.dim(), "kernel translation of wrong dimension");
  require(kernel.symbol.size() == grid.size(), "kernel symbol does not live on this grid");
  require(restarts >= 1, "at least one power-iteration start is needed");
  KernelNorm out;
  out.x = x;
  double rr = 0;
  for (double v : x) rr += v * v;
  out.radius = std::sqrt(rr);
  if (out.radius < 3 * (rho + pad))
    throw PreconditionError("translation inside the excluded near zone |x| < 3(rho+pad)");

  const SmoothCutoff chi_shape{rho, pad};
  const CVec chi = chi_shape.sample(grid, std::vector<double>(grid.dim(), 0.0));
  const CVec chix = chi_shape.sample(grid, x);
  const CVec f = kernel.symbol.cast<cplx>();
  auto apply = [&](const CVec& in, const CVec& right, const CVec& left) {
    return CVec(left.cwiseProduct(grid.to_config(f.cwiseProduct(grid.to_momentum(right.cwiseProduct(in))))));
  };

  std::vector<double> estimates;
  for (int start = 0; start < restarts; ++start) {
    std::mt19937_64 rng(mix_seed(seed, start));
    std::normal_distribution<double> nd;
    CVec v(grid.size());
    for (auto& z : v) z = cplx(nd(rng), nd(rng));
    v = chix.cwiseProduct(v);
    v.normalize();
    double lambda = 0, prev = -1;
    int it = 0;
    for (; it < max_iterations; ++it) {
      const CVec u = apply(apply(v, chix, chi), chi, chix);
      lambda = v.dot(u).real();
      const double un = u.norm();
      if (un == 0) break;
      v = u / un;
      if (it >= 20 && std::abs(lambda - prev) <= tol * std::abs(lambda)) break;
      prev = lambda;
    }
    if (it == max_iterations) throw ConvergenceError("kernel power iteration did not converge");
    out.iterations = std::max(out.iterations, it + 1);
    estimates.push_back(std::sqrt(std::max(lambda, 0.0)));
  }
  const auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end());
  out.computed = *hi;
  out.restart_spread = *hi > 0 ? (*hi - *lo) / *hi : 0.0;
  out.bound = cutoff_constant(grid.dim(), rho, pad) * kernel.profile(out.radius - (2 * rho + 3 * pad));
  return out;
}

std::vector<KernelNorm> kernel_sweep(const MomentumGrid& grid, double rho, double pad, int count, std::uint64_t seed,
                                     int threads) {
  require(count >= 2, "kernel sweep needs at least two radii");
  const double lo = 3 * (rho + pad), hi = grid.wrap_radius() - (rho + pad);
  if (!(hi > lo)) throw PreconditionError("grid too small: valid kernel zone is empty");
  const KernelSymbol kernel = inverse_square_kernel(grid);
  std::vector<KernelNorm> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    std::vector<double> x(grid.dim(), 0.0);
    x[0] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    out[i] = kernel_norm_bound(grid, rho, pad, x, kernel, mix_seed(seed, 1000 + i));
  });
  return out;
}

KernelSplit inverse_square_split(const MomentumGrid& grid) {
  KernelSplit out;
  double acc = 0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double w = grid.omega()[i];
    if (w < 1.0)
      acc += 1.0 / (w * w);
    else
      out.sup_remainder = std::max(out.sup_remainder, 1.0 / w);
  }
  out.l2_part = std::sqrt(grid.weight() * acc);
  return out;
}

}  // namespace nuc
