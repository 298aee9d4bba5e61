#include "nuc/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "nuc/error.hpp"

namespace nuc {

namespace {

template <typename Mat>
Orthonormalized qr_svd(const Mat& a, double rel_tol, double abs_floor) {
  Orthonormalized out;
  const Eigen::Index m = a.rows(), k = a.cols();
  if (k == 0) {
    out.basis = CMat(m, 0);
    return out;
  }
  require(m >= k, "more generators than grid points");
  Eigen::HouseholderQR<Mat> qr(a);
  Mat r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Mat> svd(r, Eigen::ComputeFullU);
  out.singular_values = svd.singularValues();
  const double top = out.singular_values.size() ? out.singular_values[0] : 0.0;
  const double cut = std::max(rel_tol * top, abs_floor);
  while (out.rank < k && out.singular_values[out.rank] > cut && out.singular_values[out.rank] > 0) ++out.rank;
  Mat q = qr.householderQ() * Mat::Identity(m, k);
  Mat b = q * svd.matrixU().leftCols(out.rank);
  if constexpr (std::is_same_v<typename Mat::Scalar, double>) {
    const Eigen::Index half = m / 2;
    out.basis = CMat(half, out.rank);
    out.basis.real() = b.topRows(half);
    out.basis.imag() = b.bottomRows(half);
  } else {
    out.basis = b;
  }
  return out;
}

RMat stack_real(const CMat& a) {
  RMat r(2 * a.rows(), a.cols());
  r.topRows(a.rows()) = a.real();
  r.bottomRows(a.rows()) = a.imag();
  return r;
}

}  // namespace

Orthonormalized orthonormalize(const CMat& generators, double weight, double rel_tol) {
  const double sw = std::sqrt(weight);
  Orthonormalized o = qr_svd<CMat>(generators * sw, rel_tol, 0.0);
  o.basis /= sw;
  return o;
}

Orthonormalized orthonormalize_real(const CMat& generators, double weight, double rel_tol) {
  const double sw = std::sqrt(weight);
  Orthonormalized o = qr_svd<RMat>(stack_real(generators * sw), rel_tol, 0.0);
  o.basis /= sw;
  return o;
}

Orthonormalized extend_basis(const CMat& basis, const CMat& generators, double weight, double rel_tol,
                             bool real_linear) {
  require(basis.cols() == 0 || basis.rows() == generators.rows(), "extend_basis shape mismatch");
  const double sw = std::sqrt(weight);
  double scale = 0;
  for (Eigen::Index j = 0; j < generators.cols(); ++j) scale = std::max(scale, generators.col(j).norm() * sw);
  CMat res = generators;
  for (int pass = 0; pass < 2 && basis.cols() > 0; ++pass) {
    CMat c = weight * (basis.adjoint() * res);
    if (real_linear) c = c.real().cast<cplx>();
    res -= basis * c;
  }
  Orthonormalized o = real_linear ? qr_svd<RMat>(stack_real(res * sw), 0.0, rel_tol * scale)
                                  : qr_svd<CMat>(res * sw, 0.0, rel_tol * scale);
  o.basis /= sw;
  return o;
}

CMat weighted_gram(const CMat& a, const CMat& b, double weight) { return weight * (a.adjoint() * b); }

double spectral_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  const CMat g = (m.rows() >= m.cols()) ? CMat(m.adjoint() * m) : CMat(m * m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace nuc
