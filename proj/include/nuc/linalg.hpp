#pragma once

#include "nuc/grid.hpp"

namespace nuc {

struct Orthonormalized {
  CMat basis;             // orthonormal columns w.r.t. weight·a†b
  RVec singular_values;   // of the weighted generator matrix, descending
  Eigen::Index rank = 0;
};

/// Orthonormal basis of the complex span of the generator columns, keeping singular
/// directions above rel_tol·σ_max. Householder QR followed by an SVD of R.
Orthonormalized orthonormalize(const CMat& generators, double weight, double rel_tol);

/// Same for the real-linear span, with inner product Re(weight·a†b).
Orthonormalized orthonormalize_real(const CMat& generators, double weight, double rel_tol);

/// Orthonormal completion of `basis` by the generators' components outside its span.
/// Directions are kept when their singular value exceeds rel_tol times the largest
/// generator column norm. Two passes of block Gram-Schmidt.
Orthonormalized extend_basis(const CMat& basis, const CMat& generators, double weight, double rel_tol,
                             bool real_linear);

CMat weighted_gram(const CMat& a, const CMat& b, double weight);

/// Largest singular value of a dense matrix.
double spectral_norm(const CMat& m);

}  // namespace nuc
