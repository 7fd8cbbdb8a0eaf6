#include "sensespace/linalg.hpp"

#include "sensespace/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace sensespace::linalg {

namespace {

void require_same_size(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector lengths differ: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::NotSymmetric, "matrix is not square");
  }
  if (!entries_.allFinite()) {
    throw Error(ErrorCode::NonFiniteEntry, "symmetric matrix has non-finite entries");
  }
  const double scale = entries_.norm();
  const double asym = (entries_ - entries_.transpose()).norm();
  if (asym > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::NotSymmetric, "matrix asymmetry " + std::to_string(asym) +
                                             " exceeds tolerance");
  }
  entries_ = 0.5 * (entries_ + entries_.transpose());
}

void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) {
    throw Error(ErrorCode::NonFiniteEntry, std::string(what) + " has non-finite entries");
  }
}

Vector proj(const Vector& a, const Vector& b) {
  require_same_size(a, b);
  const double bb = b.squaredNorm();
  if (std::sqrt(bb) <= kZeroNorm) {
    throw Error(ErrorCode::ZeroVector, "cannot project onto a zero vector");
  }
  return (a.dot(b) / bb) * b;
}

SymmetricMatrix accumulate_outer(std::span<const Vector> deviations) {
  if (deviations.empty()) {
    throw Error(ErrorCode::EmptyInput, "no vectors to accumulate");
  }
  const Eigen::Index d = deviations.front().size();
  Matrix sum = Matrix::Zero(d, d);
  for (const Vector& v : deviations) {
    if (v.size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "deviation vectors differ in length");
    }
    sum.selfadjointView<Eigen::Lower>().rankUpdate(v);
  }
  sum.triangularView<Eigen::StrictlyUpper>() = sum.transpose();
  return SymmetricMatrix(std::move(sum));
}

void canonicalize_sign(Eigen::Ref<Vector> v) {
  if (v.size() == 0) return;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0) v = -v;
}

Eigendecomposition symmetric_eigendecomposition(const SymmetricMatrix& m) {
  const Matrix& a = m.entries();
  const Eigen::Index n = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "symmetric eigensolver did not converge");
  }

  // Solver returns ascending order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::reverse(order.begin(), order.end());

  const double frob = a.norm();
  Eigendecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    double lambda = solver.eigenvalues()[src];
    if (lambda < 0) {
      if (lambda < -1e-10 * frob) {
        throw Error(ErrorCode::NumericalFailure,
                    "matrix is not positive semidefinite (eigenvalue " +
                        std::to_string(lambda) + ")");
      }
      lambda = 0.0;
    }
    out.eigenvalues[i] = lambda;
    out.eigenvectors.col(i) = solver.eigenvectors().col(src);
    canonicalize_sign(out.eigenvectors.col(i));
  }
  return out;
}

std::pair<Vector, Vector> gram_schmidt_pair(const Vector& v1, const Vector& v2) {
  require_same_size(v1, v2);
  const double n1 = v1.norm();
  if (n1 <= kZeroNorm) {
    throw Error(ErrorCode::ZeroVector, "first basis vector is zero");
  }
  const double n2 = v2.norm();
  if (n2 <= kZeroNorm) {
    throw Error(ErrorCode::ZeroVector, "second basis vector is zero");
  }
  Vector u1 = v1 / n1;
  Vector r = v2 - v2.dot(u1) * u1;
  const double rn = r.norm();
  if (rn <= kParallelRatio * n2) {
    throw Error(ErrorCode::NearParallel, "directions are numerically collinear");
  }
  // One re-orthogonalization pass restores orthogonality lost to cancellation.
  r -= r.dot(u1) * u1;
  return {std::move(u1), r / r.norm()};
}

}  // namespace sensespace::linalg
