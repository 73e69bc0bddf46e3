#pragma once

#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Dense>

namespace fdembed::linalg {

// Row-major so that streamed rows and sketch buffers are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct SvdOptions {
  // Number of leading singular triplets to return (clamped to min(rows, cols)).
  std::size_t rank = std::numeric_limits<std::size_t>::max();
  // One-sided Jacobi sweeps over the projected rows. Gives high relative
  // accuracy for every triplet; without it, triplets below 1e-7 * sigma_1
  // are reported as zero and their vectors are only completed to an
  // orthonormal set.
  bool refine = true;
};

// m = u * diag(singular_values) * vt with orthonormal columns in u (rows x r)
// and orthonormal rows in vt (r x cols). Singular values are non-increasing;
// the largest-magnitude entry of each row of vt is positive.
struct SvdResult {
  Matrix u;
  Vector singular_values;
  Matrix vt;

  std::size_t rank() const noexcept { return static_cast<std::size_t>(singular_values.size()); }
};

// Thin SVD through the Gram matrix of the short side followed by Jacobi
// refinement of the projected rows. Intended for short-and-wide inputs
// (rows << cols); throws std::invalid_argument on empty or non-finite input.
SvdResult thin_svd(const Matrix& m, const SvdOptions& options = {});

// thin_svd(diag(row_scale) * m) without materializing the scaled copy when
// rows <= cols.
SvdResult thin_svd_scaled(const Matrix& m, std::span<const double> row_scale,
                          const SvdOptions& options = {});

// Singular values only (square roots of the Gram eigenvalues), descending.
Vector singular_values(const Matrix& m);

}  // namespace fdembed::linalg
