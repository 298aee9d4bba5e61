#include "nuc/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nuc/correlations.hpp"
#include "nuc/error.hpp"
#include "nuc/linalg.hpp"

namespace nuc {

namespace {

constexpr double kSpanTolerance = 1e-8;
constexpr double kEnergyRoundoff = 1e-12;

double binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

cplx i_power(int k) {
  static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[((k % 4) + 4) % 4];
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

CVec ModeSet::coefficients(const SpVector& f) const {
  grid->check_shape(f, "ModeSet::coefficients");
  return grid->weight() * (basis.adjoint() * f);
}

double ModeSet::span_residual(const SpVector& f) const {
  const double n = grid->norm(f);
  if (n == 0.0) return 0.0;
  return grid->norm(f - synthesize(coefficients(f))) / n;
}

SpVector ModeSet::synthesize(const CVec& c) const {
  require(c.size() == count(), "mode coefficient vector of wrong length");
  return basis * c;
}

ModeSet build_modes(std::shared_ptr<const MomentumGrid> grid, const std::vector<SpVector>& generators,
                    std::vector<std::string> tags, double rel_tol) {
  require(grid != nullptr, "build_modes needs a grid");
  require(!generators.empty(), "build_modes needs at least one generator");
  require(tags.empty() || tags.size() == generators.size(), "one tag per generator");
  CMat gen(grid->size(), static_cast<Eigen::Index>(generators.size()));
  for (std::size_t k = 0; k < generators.size(); ++k) {
    grid->check_shape(generators[k], "build_modes");
    gen.col(static_cast<Eigen::Index>(k)) = generators[k];
  }
  const Orthonormalized on = orthonormalize(gen, grid->weight(), rel_tol);
  if (on.rank == 0) throw PreconditionError("mode generators span the zero space");
  const CMat omega_q = grid->omega().cast<cplx>().asDiagonal() * on.basis;
  CMat h = grid->weight() * (on.basis.adjoint() * omega_q);
  h = 0.5 * (h + h.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  ModeSet out;
  out.grid = std::move(grid);
  out.basis = on.basis * es.eigenvectors();
  out.energies = es.eigenvalues();
  out.tags = std::move(tags);
  return out;
}

int TruncatedFock::total(Eigen::Index i) const {
  int t = 0;
  for (int v : occupations[i]) t += v;
  return t;
}

Eigen::Index TruncatedFock::index_of(const std::vector<int>& occ) const {
  auto it = lookup.find(occ);
  if (it == lookup.end()) throw PreconditionError("occupation vector outside the truncated Fock space");
  return it->second;
}

TruncatedFock build_fock(int modes, int n_max, Eigen::Index cap) {
  require(modes >= 1, "Fock space needs at least one mode");
  require(n_max >= 1, "n_max must be at least 1");
  const double dim = binomial(modes + n_max, n_max);
  if (dim > static_cast<double>(cap))
    throw PreconditionError("Fock dimension " + std::to_string(static_cast<long long>(dim)) + " exceeds the cap " +
                            std::to_string(cap));
  TruncatedFock fock;
  fock.modes = modes;
  fock.n_max = n_max;
  std::vector<int> occ(modes, 0);
  // Occupations of total n in lexicographic order, filled from the first mode.
  std::function<void(int, int)> fill = [&](int mode, int remaining) {
    if (mode == modes - 1) {
      occ[mode] = remaining;
      fock.occupations.push_back(occ);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      occ[mode] = v;
      fill(mode + 1, remaining - v);
    }
    occ[mode] = 0;
  };
  for (int n = 0; n <= n_max; ++n) fill(0, n);
  for (Eigen::Index i = 0; i < fock.dimension(); ++i) fock.lookup.emplace(fock.occupations[i], i);

  const Eigen::Index d = fock.dimension();
  for (int j = 0; j < modes; ++j) {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (Eigen::Index i = 0; i < d; ++i) {
      const int nj = fock.occupations[i][j];
      if (nj == 0) continue;
      std::vector<int> lowered = fock.occupations[i];
      --lowered[j];
      trip.emplace_back(fock.lookup.at(lowered), i, std::sqrt(static_cast<double>(nj)));
    }
    SpMat a(d, d);
    a.setFromTriplets(trip.begin(), trip.end());
    fock.lower.push_back(std::move(a));
  }
  return fock;
}

SpMat annihilator(const TruncatedFock& fock, const CVec& c) {
  require(c.size() == fock.modes, "ladder coefficients of wrong length");
  const Eigen::Index d = fock.dimension();
  SpMat out(d, d);
  for (int a = 0; a < fock.modes; ++a)
    if (c[a] != 0.0) out += std::conj(c[a]) * fock.lower[a];
  return out;
}

SpMat creator(const TruncatedFock& fock, const CVec& c) { return SpMat(annihilator(fock, c).adjoint()); }

CMat EnergyProjection::isometry(Eigen::Index dimension) const {
  CMat p = CMat::Zero(dimension, rank());
  for (Eigen::Index k = 0; k < rank(); ++k) p(states[k], k) = 1.0;
  return p;
}

EnergyProjection energy_projection(const TruncatedFock& fock, const ModeSet& modes, double E) {
  require(modes.count() == fock.modes, "Fock space and mode set disagree on the mode count");
  require(E >= 0, "energy bound must be nonnegative");
  EnergyProjection out;
  out.E = E;
  out.state_energy.resize(fock.dimension());
  for (Eigen::Index i = 0; i < fock.dimension(); ++i) {
    double e = 0;
    for (int a = 0; a < fock.modes; ++a) e += fock.occupations[i][a] * modes.energies[a];
    out.state_energy[i] = e;
    if (e <= E * (1 + kEnergyRoundoff)) {
      out.states.push_back(i);
      out.max_occupancy = std::max(out.max_occupancy, fock.total(i));
    }
  }
  out.truncated = (fock.n_max + 1) * modes.energies.minCoeff() <= E * (1 + kEnergyRoundoff);
  return out;
}

CMat weyl(const TruncatedFock& fock, const CVec& c) {
  const SpMat a = annihilator(fock, c);
  CMat x = CMat(a) + CMat(a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(x);
  const CVec phase = (cplx(0, 1) * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

BoundCheck energy_bound_check(const TruncatedFock& fock, const ModeSet& modes, const EnergyProjection& proj,
                              const std::vector<CVec>& f) {
  require(!f.empty(), "energy bound needs at least one argument");
  BoundCheck out;
  CMat m = proj.isometry(fock.dimension());
  out.rhs = std::pow(proj.E, 0.5 * static_cast<double>(f.size()));
  for (auto it = f.rbegin(); it != f.rend(); ++it) {
    const CVec root = modes.energies.cwiseSqrt().cast<cplx>().cwiseProduct(*it);
    m = annihilator(fock, root) * m;
    out.rhs *= it->norm();
  }
  out.lhs = m.cols() > 0 ? spectral_norm(m) : 0.0;
  return out;
}

int MultiIndex::total() const {
  int t = 0;
  for (int v : plus) t += v;
  for (int v : minus) t += v;
  return t;
}

double MultiIndex::factorial() const {
  double f = 1;
  for (int v : plus) f *= nuc::factorial(v);
  for (int v : minus) f *= nuc::factorial(v);
  return f;
}

MultiIndex zero_index(int count) { return {std::vector<int>(count, 0), std::vector<int>(count, 0)}; }

std::vector<MultiIndexPair> enumerate_pairs(int count, int max_order, bool require_nu) {
  require(count >= 1 && max_order >= 0, "enumerate_pairs: bad arguments");
  const int slots = 4 * count;
  std::vector<int> v(slots, 0);
  std::vector<MultiIndexPair> out;
  std::function<void(int, int)> fill = [&](int slot, int remaining) {
    if (slot == slots - 1) {
      v[slot] = remaining;
      MultiIndexPair p{zero_index(count), zero_index(count)};
      for (int j = 0; j < count; ++j) {
        p.mu.plus[j] = v[j];
        p.mu.minus[j] = v[count + j];
        p.nu.plus[j] = v[2 * count + j];
        p.nu.minus[j] = v[3 * count + j];
      }
      if (!require_nu || !p.nu.zero()) out.push_back(std::move(p));
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      v[slot] = k;
      fill(slot + 1, remaining - k);
    }
    v[slot] = 0;
  };
  for (int order = 1; order <= max_order; ++order) fill(0, order);
  return out;
}

std::string index_label(const MultiIndexPair& pair) {
  std::ostringstream os;
  auto put = [&os](const std::vector<int>& v) {
    for (std::size_t j = 0; j < v.size(); ++j) os << (j ? "," : "") << v[j];
  };
  os << "mu+(";
  put(pair.mu.plus);
  os << ") mu-(";
  put(pair.mu.minus);
  os << ") nu+(";
  put(pair.nu.plus);
  os << ") nu-(";
  put(pair.nu.minus);
  os << ")";
  return os.str();
}

LadderArguments ladder_arguments(const Model& model, int count, const std::optional<SpacetimePoint>& x) {
  require(count >= 1 && count <= model.spectrum.vectors.cols(), "ladder argument count out of range");
  LadderArguments out;
  for (int j = 0; j < count; ++j) {
    SpVector p = model.component(j, Sign::plus), m = model.component(j, Sign::minus);
    if (x) {
      p = translate(*model.grid, p, *x);
      m = translate(*model.grid, m, *x);
    }
    out.plus.push_back(std::move(p));
    out.minus.push_back(std::move(m));
  }
  return out;
}

namespace {

CMat lower_by(const TruncatedFock& fock, const ModeSet& modes, CMat m, const MultiIndex& nu,
              const LadderArguments& args) {
  require(nu.plus.size() <= args.plus.size() && nu.minus.size() <= args.minus.size(),
          "multi-index longer than the ladder argument list");
  auto apply = [&](const std::vector<int>& counts, const std::vector<SpVector>& vecs) {
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (counts[j] == 0) continue;
      const SpMat a = annihilator(fock, modes.coefficients(vecs[j]));
      for (int r = 0; r < counts[j]; ++r) m = a * m;
    }
  };
  apply(nu.minus, args.minus);
  apply(nu.plus, args.plus);
  return m;
}

double used_span_residual(const ModeSet& modes, const MultiIndexPair& pair, const LadderArguments& args) {
  double worst = 0;
  for (std::size_t j = 0; j < args.plus.size(); ++j) {
    const bool plus_used = (j < pair.mu.plus.size() && pair.mu.plus[j]) || (j < pair.nu.plus.size() && pair.nu.plus[j]);
    const bool minus_used =
        (j < pair.mu.minus.size() && pair.mu.minus[j]) || (j < pair.nu.minus.size() && pair.nu.minus[j]);
    if (plus_used) worst = std::max(worst, modes.span_residual(args.plus[j]));
    if (minus_used) worst = std::max(worst, modes.span_residual(args.minus[j]));
  }
  return worst;
}

}  // namespace

CMat lowered_block(const TruncatedFock& fock, const ModeSet& modes, const EnergyProjection& proj,
                   const MultiIndex& nu, const LadderArguments& args) {
  return lower_by(fock, modes, proj.isometry(fock.dimension()), nu, args);
}

SFunctional S_functional(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                         const EnergyProjection& proj, const MultiIndexPair& pair, const LadderArguments& args) {
  if (pair.mu.zero() && pair.nu.zero()) throw PreconditionError("S_{0,0} vanishes on vacuum-subtracted functionals");
  SFunctional out;
  out.span_residual = used_span_residual(modes, pair, args);
  if (out.span_residual > kSpanTolerance) throw PreconditionError("ladder argument outside the mode span");
  const CMat left = lowered_block(fock, modes, proj, pair.mu, args);
  const CMat right = lowered_block(fock, modes, proj, pair.nu, args);
  out.block = left.adjoint() * right;
  out.norm = out.block.size() ? spectral_norm(out.block) : 0.0;
  out.estimate = std::pow(proj.E, 0.5 * pair.order());
  const RVec& t = model.spectrum.t;
  auto scale = [&](const std::vector<int>& counts) {
    for (std::size_t j = 0; j < counts.size(); ++j) out.estimate *= std::pow(t[j], counts[j]);
  };
  scale(pair.mu.plus);
  scale(pair.mu.minus);
  scale(pair.nu.plus);
  scale(pair.nu.minus);
  return out;
}

cplx tau_functional(const MultiIndexPair& pair, const CVec& eplus, const CVec& eminus, double fnorm2) {
  const std::size_t n = pair.mu.plus.size();
  require(pair.mu.minus.size() == n && pair.nu.plus.size() == n && pair.nu.minus.size() == n,
          "multi-index components disagree in length");
  require(static_cast<std::size_t>(eplus.size()) >= n && static_cast<std::size_t>(eminus.size()) >= n,
          "too few expansion coefficients");
  int plus_total = 0, minus_mu = 0;
  cplx prod = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const int kp = pair.mu.plus[j] + pair.nu.plus[j];
    const int km = pair.mu.minus[j] + pair.nu.minus[j];
    plus_total += kp;
    minus_mu += pair.mu.minus[j];
    if (kp) prod *= std::pow(eplus[j], kp);
    if (km) prod *= std::pow(eminus[j], km);
  }
  return std::exp(-0.5 * fnorm2) * i_power(plus_total + 2 * minus_mu) * prod /
         (pair.mu.factorial() * pair.nu.factorial());
}

double tau_norm_bound(const MultiIndexPair& pair) {
  return std::pow(2.0, 2.5 * pair.order()) / std::sqrt(pair.mu.factorial() * pair.nu.factorial());
}

cplx RankOneFunctional::operator()(const CMat& a) const {
  return psi_prime.dot(a * psi) - psi_prime.dot(psi) * a(0, 0);
}

namespace {

struct Lowered {
  MultiIndex index;
  CVec state;
};

// Every multiset of annihilators (slots < count are L⁺e_j, the rest L⁻e_j) of size ≤ depth
// applied to `psi`, dropping branches whose state vanishes.
std::vector<Lowered> lowered_states(const std::vector<SpMat>& slots, int count, const CVec& psi, int depth) {
  std::vector<Lowered> out;
  const double floor = 1e-14 * psi.norm();
  MultiIndex idx = zero_index(count);
  std::function<void(std::size_t, const CVec&, int)> rec = [&](std::size_t first, const CVec& v, int d) {
    out.push_back({idx, v});
    if (d == depth) return;
    for (std::size_t s = first; s < slots.size(); ++s) {
      CVec next = slots[s] * v;
      if (next.norm() <= floor) continue;
      int& c = s < static_cast<std::size_t>(count) ? idx.plus[s] : idx.minus[s - count];
      ++c;
      rec(s, next, d + 1);
      --c;
    }
  };
  rec(0, psi, 0);
  return out;
}

}  // namespace

ExpansionResult expansion_check(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                                const RankOneFunctional& phi, const WeylArgument& f, int K) {
  require(K >= 0 && K <= 2 * fock.n_max, "expansion cutoff K must lie in [0, 2 n_max]");
  require(phi.psi.size() == fock.dimension() && phi.psi_prime.size() == fock.dimension(),
          "functional vectors do not live on this Fock space");
  const MomentumGrid& g = *model.grid;
  const SpVector full = f.full();
  if (modes.span_residual(full) > kSpanTolerance) throw PreconditionError("Weyl argument outside the mode span");

  ExpansionResult out;
  out.direct = phi(weyl(fock, modes.coefficients(full)));

  const int count = static_cast<int>(model.spectrum.vectors.cols());
  const LadderArguments args = ladder_arguments(model, count);
  CVec eplus(count), eminus(count);
  std::vector<SpMat> slots;
  for (int j = 0; j < count; ++j) {
    eplus[j] = g.inner(model.spectrum.vectors.col(j), f.plus);
    eminus[j] = g.inner(model.spectrum.vectors.col(j), f.minus);
    slots.push_back(annihilator(fock, modes.coefficients(args.plus[j])));
  }
  for (int j = 0; j < count; ++j) slots.push_back(annihilator(fock, modes.coefficients(args.minus[j])));

  const auto right = lowered_states(slots, count, phi.psi, K);
  const auto left = lowered_states(slots, count, phi.psi_prime, K);
  const double fnorm2 = g.inner_norm2(full);
  const cplx overlap = phi.psi_prime.dot(phi.psi);
  std::vector<cplx> by_order(K + 1, 0.0);
  for (const auto& l : left)
    for (const auto& r : right) {
      const MultiIndexPair pair{l.index, r.index};
      const int order = pair.order();
      if (order > K) continue;
      cplx s = l.state.dot(r.state);
      if (order == 0) s -= overlap;
      if (s == 0.0) continue;
      ++out.terms;
      by_order[order] += tau_functional(pair, eplus, eminus, fnorm2) * s;
    }
  cplx acc = 0;
  for (int k = 0; k <= K; ++k) {
    acc += by_order[k];
    out.partial.push_back(acc);
    out.residual.push_back(std::abs(acc - out.direct));
  }
  return out;
}

BoundCheck harmonic_bound_check(const Model& model, const TruncatedFock& fock, const ModeSet& modes,
                                const EnergyProjection& proj, const SpVector& g,
                                const std::vector<SpacetimePoint>& points) {
  require(!points.empty(), "harmonic bound needs at least one point");
  const MomentumGrid& grid = *model.grid;
  grid.check_shape(g, "harmonic_bound_check");
  const double E = model.params.E;
  const CMat p = proj.isometry(fock.dimension());

  BoundCheck out;
  CMat sum = CMat::Zero(p.cols(), p.cols());
  double grid_bound = 0;
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    if (grid.omega()[i] <= E) grid_bound += std::norm(g[i]) / grid.omega()[i];
  grid_bound *= grid.weight();
  for (const auto& x : points) {
    const SpVector gk = translate(grid, g, x);
    if (modes.span_residual(gk) > kSpanTolerance) throw PreconditionError("translated argument outside the mode span");
    const CVec c = modes.coefficients(gk);
    const CMat b = annihilator(fock, c) * p;
    sum += b.adjoint() * b;
    double compressed = 0;
    for (Eigen::Index a = 0; a < modes.count(); ++a)
      if (modes.energies[a] <= E) compressed += std::norm(c[a]) / modes.energies[a];
    out.slack += E * std::max(0.0, compressed - grid_bound);
  }
  out.lhs = sum.size() ? spectral_norm(sum) : 0.0;

  const SpVector gh = grid.omega().array().rsqrt().cast<cplx>() * model.h.symbol.cast<cplx>().array() * g.array();
  double cross = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      if (i != j) cross = std::max(cross, std::abs(corr_fn(grid, gh, points[i] - points[j])));
  const double n = static_cast<double>(points.size());
  out.rhs = E * model.h.sup_inv_sq * (grid.inner_norm2(gh) + (n - 1) * cross);
  return out;
}

ModeSet translated_modes(const Model& model, int count, const std::vector<SpacetimePoint>& points) {
  require(!points.empty(), "translated_modes needs at least one point");
  std::vector<SpVector> gens;
  std::vector<std::string> tags;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const LadderArguments args = ladder_arguments(model, count, points[k]);
    for (int j = 0; j < count; ++j) {
      gens.push_back(args.plus[j]);
      tags.push_back("U(x" + std::to_string(k) + ")L+e" + std::to_string(j));
      gens.push_back(args.minus[j]);
      tags.push_back("U(x" + std::to_string(k) + ")L-e" + std::to_string(j));
    }
  }
  return build_modes(model.grid, gens, std::move(tags));
}

}  // namespace nuc
