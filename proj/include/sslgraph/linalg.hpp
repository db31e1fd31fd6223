#pragma once

#include <vector>

#include "sslgraph/matrix.hpp"

namespace sslgraph {

struct EigenDecomposition {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // column j pairs with values[j]
  int sweeps = 0;              // Jacobi sweeps used (0 for the LAPACK path)
};

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// 1e-10·‖S‖_F, capped at 100 sweeps. Throws std::invalid_argument for
/// non-square input or asymmetry above 1e-9 (relative to the largest entry).
EigenDecomposition eigh_symmetric(const DenseMatrix& s);

/// The k largest eigenpairs of a symmetric matrix via LAPACK dsyevr.
/// Used for covariance matrices too large for Jacobi sweeps.
EigenDecomposition eigh_top_k(const DenseMatrix& s, std::size_t k);

}  // namespace sslgraph
