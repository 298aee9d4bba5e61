#include "nuc/nuclearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <gsl/gsl_multimin.h>

#include "nuc/correlations.hpp"
#include "nuc/error.hpp"
#include "nuc/seed.hpp"

namespace nuc {

double delta_x(const std::vector<SpacetimePoint>& points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      const SpacetimePoint d = points[i] - points[j];
      best = std::min(best, d.spatial_norm() - std::abs(d.time));
    }
  return best;
}

namespace {

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

constexpr int kBfgsRounds = 20;

struct PairObjective {
  const std::vector<CMat>* blocks;
  Eigen::Index r;
};

// F(ψ) = λ_max(G), G_kl = ⟨A_kψ|(1 − ψψ†)|A_lψ⟩, the best value of Σ_k |⟨ψ'|A_kψ⟩|² over unit
// ψ' ⊥ ψ. With c the top eigenvector and B = Σ c_l A_l, m = ⟨ψ|Bψ⟩, the Wirtinger gradient
// is B†Bψ − m̄Bψ − mB†ψ.
double pair_objective(const CVec& psi, const std::vector<CMat>& blocks, CVec* grad, CVec* best_prime) {
  const std::size_t n = blocks.size();
  std::vector<CVec> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const CVec v = blocks[k] * psi;
    w[k] = v - psi.dot(v) * psi;
  }
  CMat g(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) g(k, l) = w[k].dot(w[l]);
  Eigen::SelfAdjointEigenSolver<CMat> es(g);
  const CVec c = es.eigenvectors().col(n - 1);
  const double value = std::max(0.0, es.eigenvalues()[n - 1]);
  if (grad || best_prime) {
    CMat b = CMat::Zero(psi.size(), psi.size());
    for (std::size_t l = 0; l < n; ++l) b += c[l] * blocks[l];
    const CVec bpsi = b * psi;
    if (grad) {
      const cplx m = psi.dot(bpsi);
      const CVec bdpsi = b.adjoint() * psi;
      *grad = b.adjoint() * bpsi - std::conj(m) * bpsi - m * bdpsi;
    }
    if (best_prime) {
      CVec u = bpsi - psi.dot(bpsi) * psi;
      *best_prime = u.norm() > 0 ? CVec(u.normalized()) : u;
    }
  }
  return value;
}

CVec unpack(const gsl_vector* x, Eigen::Index r, double* norm) {
  CVec psi(r);
  for (Eigen::Index i = 0; i < r; ++i) psi[i] = cplx(gsl_vector_get(x, i), gsl_vector_get(x, r + i));
  *norm = psi.norm();
  return psi / *norm;
}

double neg_f(const gsl_vector* x, void* params) {
  const auto& o = *static_cast<const PairObjective*>(params);
  double n;
  return -pair_objective(unpack(x, o.r, &n), *o.blocks, nullptr, nullptr);
}

void neg_fdf(const gsl_vector* x, void* params, double* f, gsl_vector* df) {
  const auto& o = *static_cast<const PairObjective*>(params);
  double n;
  const CVec psi = unpack(x, o.r, &n);
  CVec g;
  *f = -pair_objective(psi, *o.blocks, &g, nullptr);
  // F(x/|x|): the radial component drops out and the rest scales by 1/|x|.
  const CVec tangent = (2.0 / n) * (g - psi.dot(g).real() * psi);
  for (Eigen::Index i = 0; i < o.r; ++i) {
    gsl_vector_set(df, i, -tangent[i].real());
    gsl_vector_set(df, o.r + i, -tangent[i].imag());
  }
}

void neg_df(const gsl_vector* x, void* params, gsl_vector* df) {
  double f;
  neg_fdf(x, params, &f, df);
}

}  // namespace

MultiNorm multi_norm_blocks(const std::vector<CMat>& blocks, std::uint64_t seed, int restarts, int max_iterations) {
  require(!blocks.empty(), "multi-point norm needs at least one block");
  require(restarts >= 1, "at least one restart");
  const Eigen::Index r = blocks.front().rows();
  for (const auto& b : blocks) require(b.rows() == r && b.cols() == r, "blocks must share one square shape");
  MultiNorm out;
  if (r < 2) {
    out.restarts.assign(restarts, 0.0);
    return out;
  }
  PairObjective obj{&blocks, r};
  gsl_multimin_function_fdf fdf{&neg_f, &neg_df, &neg_fdf, static_cast<std::size_t>(2 * r), &obj};
  for (int start = 0; start < restarts; ++start) {
    std::mt19937_64 rng(mix_seed(seed, start));
    std::normal_distribution<double> nd;
    gsl_vector* x = gsl_vector_alloc(2 * r);
    for (Eigen::Index i = 0; i < 2 * r; ++i) gsl_vector_set(x, i, nd(rng));
    gsl_multimin_fdfminimizer* m = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, 2 * r);
    // BFGS can report no progress well away from a critical point; restarting it from
    // there with a fresh Hessian estimate continues the ascent.
    int it = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int round = 0; round < kBfgsRounds && it < max_iterations; ++round) {
      gsl_multimin_fdfminimizer_set(m, &fdf, x, 0.01, 0.1);
      for (; it < max_iterations; ++it) {
        if (gsl_multimin_fdfminimizer_iterate(m)) break;
        if (gsl_multimin_test_gradient(m->gradient, 1e-10) == GSL_SUCCESS) break;
      }
      gsl_vector_memcpy(x, m->x);
      const double f = m->f;
      if (!(f < best - 1e-14 * std::abs(f))) break;
      best = f;
    }
    if (it >= max_iterations) out.stagnated = true;
    out.iterations = std::max(out.iterations, it + 1);
    double n;
    const CVec psi = unpack(m->x, r, &n);
    CVec psi_prime;
    pair_objective(psi, blocks, nullptr, &psi_prime);
    // Report the explicit pair's value, so every restart is a certified lower bound.
    double acc = 0;
    for (const auto& a : blocks) acc += std::norm(psi_prime.dot(a * psi));
    out.restarts.push_back(std::sqrt(acc));
    gsl_multimin_fdfminimizer_free(m);
    gsl_vector_free(x);
  }
  const auto [lo, hi] = std::minmax_element(out.restarts.begin(), out.restarts.end());
  out.value = *hi;
  out.spread = *hi > 0 ? (*hi - *lo) / *hi : 0.0;
  return out;
}

MultiNorm multi_norm_bruteforce(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                                const EnergyProjection& proj, const MultiIndexPair& pair,
                                const std::vector<SpacetimePoint>& points, std::uint64_t seed, int restarts) {
  require(!points.empty(), "multi-point norm needs at least one point");
  require(!pair.nu.zero(), "multi-point norm needs nu != 0");
  const int count = static_cast<int>(pair.nu.plus.size());
  std::vector<CMat> blocks;
  for (const auto& x : points)
    blocks.push_back(S_functional(model, fock, modes, proj, pair, ladder_arguments(model, count, x)).block);
  return multi_norm_blocks(blocks, seed, restarts);
}

double braces_factor(int N, double delta, int s, double epsilon) {
  require(N >= 1, "N must be at least 1");
  require(delta >= 0, "braces factor needs delta >= 0");
  if (N == 1) return 1.0;
  return 1.0 + (N - 1) / std::pow(delta + 1.0, s - 2.0 - epsilon);
}

SemiboundInputs semibound_inputs(const Model& model, double c_hat, double epsilon) {
  return {model.params.E, model.h.sup_inv_sq, c_hat, model.grid->dim(), epsilon};
}

double semibound_rhs(const MultiIndexPair& pair, const RVec& t, int N, double delta, const SemiboundInputs& in) {
  if (delta < 0) throw PreconditionError("the semibound needs delta(x) >= 0");
  require(!pair.nu.zero(), "the semibound needs nu != 0");
  double tpow = 1.0;
  auto scale = [&](const std::vector<int>& counts) {
    require(counts.size() <= static_cast<std::size_t>(t.size()), "multi-index longer than the spectrum");
    for (std::size_t j = 0; j < counts.size(); ++j) tpow *= std::pow(t[j], 2 * counts[j]);
  };
  scale(pair.mu.plus);
  scale(pair.mu.minus);
  scale(pair.nu.plus);
  scale(pair.nu.minus);
  return 16 * in.c_hat * in.sup_inv_sq * std::pow(in.E, pair.order()) * tpow *
         braces_factor(N, delta, in.s, in.epsilon);
}

double SeriesSum::log_total() const { return log_add(log_sum, log_tail); }

SeriesSum majorant_series(double E, double p, double trace_p, long long min_terms, long long max_terms) {
  require(p > 0 && p <= 1, "p must lie in (0, 1]");
  require(E >= 0 && trace_p >= 0, "E and the trace must be nonnegative");
  SeriesSum out;
  out.log_tail = -std::numeric_limits<double>::infinity();
  if (E == 0 || trace_p == 0) {
    out.terms = 1;
    return out;
  }
  const double c = 0.5 * p * std::log(32 * E) + std::log(trace_p);
  auto log_term = [&](long long k) { return k * c - 0.5 * p * std::lgamma(k + 1.0); };
  out.log_sum = -std::numeric_limits<double>::infinity();
  for (long long k = 0;; ++k) {
    if (k >= max_terms)
      throw ConvergenceError("majorant series not converged after " + std::to_string(max_terms) +
                             " terms; last log-term " + std::to_string(log_term(k - 1)));
    out.log_sum = log_add(out.log_sum, log_term(k));
    out.terms = k + 1;
    if (k + 1 < min_terms) continue;
    const double log_ratio = c - 0.5 * p * std::log(k + 2.0);  // a_{k+2}/a_{k+1}
    if (log_ratio >= 0) continue;
    const double tail = log_term(k + 1) - std::log1p(-std::exp(log_ratio));
    if (tail < out.log_sum - 40) {
      out.log_tail = tail;
      return out;
    }
  }
}

PiNormBound pi_norm_bound(double p, double trace_p, int N, double delta, const SemiboundInputs& in) {
  require(in.c_hat > 0 && in.sup_inv_sq > 0, "pi-norm bound needs a calibrated constant and an h certificate");
  PiNormBound out;
  out.p = p;
  out.N = N;
  out.delta = delta;
  out.braces = braces_factor(N, delta, in.s, in.epsilon);
  out.series = majorant_series(in.E, p, trace_p);
  const double log_value = std::log(4.0) + 0.5 * std::log(in.c_hat) + 0.5 * std::log(in.sup_inv_sq) +
                           (4.0 / p) * out.series.log_total() + 0.5 * std::log(out.braces);
  out.log10_value = log_value / std::log(10.0);
  return out;
}

StaticEstimate p_nuclear_static(const std::vector<StaticTerm>& terms, double p, int K, double E, double trace_p) {
  require(p > 0 && p <= 1, "p must lie in (0, 1]");
  require(K >= 0, "K must be nonnegative");
  StaticEstimate out;
  out.p = p;
  std::vector<double> by_order(K + 1, 0.0);
  for (const auto& t : terms)
    if (t.order <= K) by_order[t.order] += std::pow(t.tau_bound, p) * std::pow(t.s_norm, p);
  double acc = 0;
  for (int k = 0; k <= K; ++k) {
    acc += by_order[k];
    out.partial.push_back(std::pow(acc, 1.0 / p));
  }
  // Orders ≤ K of the fourfold product majorant, by direct convolution.
  std::vector<double> a(K + 1);
  for (int k = 0; k <= K; ++k)
    a[k] = std::exp(0.5 * p * k * std::log(32 * E) + k * std::log(trace_p) - 0.5 * p * std::lgamma(k + 1.0));
  std::vector<double> conv = a;
  for (int f = 1; f < 4; ++f) {
    std::vector<double> next(K + 1, 0.0);
    for (int i = 0; i <= K; ++i)
      for (int j = 0; i + j <= K; ++j) next[i + j] += conv[i] * a[j];
    conv = next;
  }
  double head = 0;
  for (double v : conv) head += v;
  const double log_full = 4 * majorant_series(E, p, trace_p).log_total();
  const double frac = head / std::exp(std::min(log_full, 700.0));
  out.log10_tail = (log_full + std::log1p(-std::min(frac, 1.0 - 1e-16))) / std::log(10.0);
  return out;
}

double calibrate_spacelike_constant(const Model& model, int count, double epsilon, std::uint64_t seed, int threads) {
  require(count >= 1, "calibration needs at least one eigenvector");
  const auto sweeps = spacelike_sweeps(*model.grid, seed);
  double c = 0;
  for (int j = 0; j < count; ++j)
    for (Sign sg : {Sign::plus, Sign::minus})
      c = std::max(c, spacelike_decay_check(*model.grid, correlation_source(model, j, sg), epsilon, sweeps, threads)
                          .calibrated_constant);
  return c;
}

}  // namespace nuc
