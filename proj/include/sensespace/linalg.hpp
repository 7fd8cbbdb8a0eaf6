#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <utility>

namespace sensespace::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Norm at or below which a vector is treated as zero.
inline constexpr double kZeroNorm = 1e-12;
/// Residual-to-norm ratio at or below which two directions are collinear.
inline constexpr double kParallelRatio = 1e-9;
/// Relative asymmetry tolerated by SymmetricMatrix.
inline constexpr double kSymmetryTolerance = 1e-12;

/// Square real matrix that is symmetric to within kSymmetryTolerance
/// (relative to its Frobenius norm). Construction validates; the stored
/// entries are exactly symmetrized.
class SymmetricMatrix {
public:
  explicit SymmetricMatrix(Matrix entries);

  const Matrix& entries() const noexcept { return entries_; }
  Eigen::Index size() const noexcept { return entries_.rows(); }

private:
  Matrix entries_;
};

struct Eigendecomposition {
  Vector eigenvalues;   // descending, nonnegative
  Matrix eigenvectors;  // orthonormal columns, column i pairs with eigenvalues[i]
};

/// Throws NonFiniteEntry naming `what` if any entry is NaN or infinite.
void require_finite(const Vector& v, std::string_view what);

/// Projection of a onto b: ((a.b)/(b.b)) b.
Vector proj(const Vector& a, const Vector& b);

/// Sum of v v^T over the given vectors.
SymmetricMatrix accumulate_outer(std::span<const Vector> deviations);

/// Eigendecomposition of a symmetric positive semidefinite matrix. Eigenvalues
/// come back sorted descending with tiny negative round-off clamped to zero;
/// each eigenvector is sign-canonicalized so its largest-magnitude entry is
/// positive.
Eigendecomposition symmetric_eigendecomposition(const SymmetricMatrix& m);

/// Orthonormalizes (v1, v2): u1 = v1/|v1|, u2 is the normalized residual of v2
/// after removing its component along u1.
std::pair<Vector, Vector> gram_schmidt_pair(const Vector& v1, const Vector& v2);

/// Flips v so that its largest-magnitude entry (first on ties) is positive.
void canonicalize_sign(Eigen::Ref<Vector> v);

}  // namespace sensespace::linalg
