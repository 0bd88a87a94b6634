#include "residcorr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "residcorr/errors.hpp"

namespace residcorr {

namespace {

// Householder reduction of the symmetric matrix held in v to tridiagonal form.
// On return d holds the diagonal, e the subdiagonal (e[0] = 0) and v the
// accumulated orthogonal transformation.
void tridiagonalize(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const Eigen::Index n = v.rows();
  for (Eigen::Index j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (Eigen::Index i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (Eigen::Index j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (Eigen::Index k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (Eigen::Index j = 0; j < i; ++j) e[j] = 0.0;

      for (Eigen::Index j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (Eigen::Index k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (Eigen::Index j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (Eigen::Index j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (Eigen::Index k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (Eigen::Index i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (Eigen::Index k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (Eigen::Index j = 0; j <= i; ++j) {
        double g = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (Eigen::Index k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (Eigen::Index k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL iterations on the tridiagonal (d, e), rotating v along.
void tridiagonal_ql(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const Eigen::Index n = v.rows();
  for (Eigen::Index i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  const int max_iter = 60 * static_cast<int>(n) + 60;
  for (Eigen::Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    Eigen::Index m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iter) throw DegenerateError("symmetric eigensolver did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (Eigen::Index i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (Eigen::Index i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (Eigen::Index k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace

OrthonormalBasis::OrthonormalBasis(Matrix vectors) : v_(std::move(vectors)) {
  const auto r = v_.cols();
  if (r > 0) {
    const double err = (v_.transpose() * v_ - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
    if (!(err <= Tolerances::orthonormality)) {
      throw ContractError("basis vectors are not orthonormal (max |V'V - I| = " +
                          std::to_string(err) + ")");
    }
  }
}

EigenDecomposition eig_sym(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (n < 1 || a.cols() != n) throw ContractError("eig_sym needs a non-empty square matrix");
  if (!a.allFinite()) throw ContractError("eig_sym input has non-finite entries");
  const double asym = max_asymmetry(a);
  if (asym > Tolerances::symmetry) {
    throw ContractError("eig_sym input is not symmetric (max |A - A'| = " + std::to_string(asym) + ")");
  }
  Matrix v = 0.5 * (a + a.transpose());
  std::vector<double> d(static_cast<std::size_t>(n));
  std::vector<double> e(static_cast<std::size_t>(n));
  tridiagonalize(v, d, e);
  tridiagonal_ql(v, d, e);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return d[x] > d[y]; });
  Vector values(n);
  Matrix vectors(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    values(j) = d[order[j]];
    vectors.col(j) = v.col(order[j]);
  }
  return EigenDecomposition::checked(a, std::move(values), std::move(vectors));
}

OrthonormalBasis gram_schmidt_pivoted(const Matrix& rows, double tol, std::size_t max_rank) {
  if (!(tol > 0.0)) throw ContractError("Gram-Schmidt tolerance must be positive");
  const Eigen::Index r = rows.rows();
  const Eigen::Index n = rows.cols();
  Matrix residual = rows;
  std::vector<double> norm0(static_cast<std::size_t>(r));
  std::vector<double> norm(static_cast<std::size_t>(r));
  for (Eigen::Index i = 0; i < r; ++i) norm0[i] = norm[i] = rows.row(i).norm();
  std::vector<bool> used(static_cast<std::size_t>(r), false);

  const auto limit = static_cast<std::size_t>(std::min<Eigen::Index>(r, n));
  const std::size_t target = std::min(max_rank, limit);
  std::vector<Eigen::RowVectorXd> basis;
  while (basis.size() < target) {
    Eigen::Index pivot = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (used[i] || !(norm[i] > tol * norm0[i]) || norm0[i] == 0.0) continue;
      if (pivot < 0 || norm[i] > best) {
        pivot = i;
        best = norm[i];
      }
    }
    if (pivot < 0) break;
    used[pivot] = true;
    Eigen::RowVectorXd q = residual.row(pivot) / norm[pivot];
    for (const auto& b : basis) q -= q.dot(b) * b;  // second orthogonalization pass
    q.normalize();
    basis.push_back(q);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (used[i]) continue;
      residual.row(i) -= residual.row(i).dot(q) * q;
      norm[i] = residual.row(i).norm();
    }
  }
  Matrix v(n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) v.col(static_cast<Eigen::Index>(j)) = basis[j].transpose();
  return OrthonormalBasis(std::move(v));
}

ProjectionMatrix projector_from_basis(const OrthonormalBasis& basis, ProjectionMethod method) {
  const Matrix& v = basis.vectors();
  Matrix p = v * v.transpose();
  p = (0.5 * (p + p.transpose())).eval();
  return ProjectionMatrix(std::move(p), basis.rank(), method);
}

double projection_distance(const ProjectionMatrix& p, const ProjectionMatrix& q) {
  if (p.size() != q.size()) {
    throw ContractError("projection_distance: dimension mismatch (" + std::to_string(p.size()) +
                        " vs " + std::to_string(q.size()) + ")");
  }
  return (p.matrix() - q.matrix()).norm();
}

ProjectionMatrix top_eigen_projector(const EigenDecomposition& eig, std::size_t k,
                                     ProjectionMethod method) {
  if (k > eig.size()) throw ContractError("cannot take more eigenvectors than the dimension");
  const Matrix u = eig.vectors().leftCols(static_cast<Eigen::Index>(k));
  return projector_from_basis(OrthonormalBasis(u), method);
}

}  // namespace residcorr
