#pragma once

#include <cstddef>

#include "residcorr/config.hpp"
#include "residcorr/core.hpp"

namespace residcorr {

/// n x r matrix with orthonormal columns.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Matrix vectors);
  const Matrix& vectors() const { return v_; }
  std::size_t rank() const { return static_cast<std::size_t>(v_.cols()); }
  std::size_t dimension() const { return static_cast<std::size_t>(v_.rows()); }

 private:
  Matrix v_;
};

/// Dense symmetric eigendecomposition (Householder tridiagonalization followed by
/// implicit-shift QL). Bitwise deterministic for identical input.
EigenDecomposition eig_sym(const Matrix& a);

/// Orthonormal basis of the row space of `rows`. At each step the remaining row
/// with the largest residual norm is taken, provided its residual exceeds
/// tol times its original norm. `max_rank` stops early once that many are found.
OrthonormalBasis gram_schmidt_pivoted(const Matrix& rows,
                                      double tol = Tolerances::gram_schmidt,
                                      std::size_t max_rank = static_cast<std::size_t>(-1));

ProjectionMatrix projector_from_basis(const OrthonormalBasis& basis,
                                      ProjectionMethod method = ProjectionMethod::exact);

/// Frobenius norm of P - Q.
double projection_distance(const ProjectionMatrix& p, const ProjectionMatrix& q);

/// Projector onto the span of the top-k eigenvectors.
ProjectionMatrix top_eigen_projector(const EigenDecomposition& eig, std::size_t k,
                                     ProjectionMethod method);

}  // namespace residcorr
