#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "fdembed/linalg.hpp"

namespace fdembed::linalg {
namespace {

constexpr double kJacobiTol = 1e-14;
constexpr int kMaxSweeps = 60;
constexpr double kFastPathCutoff = 1e-7;

void check_input(const Matrix& m, std::span<const double> row_scale) {
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("thin_svd: empty matrix");
  if (!row_scale.empty() && row_scale.size() != static_cast<std::size_t>(m.rows())) {
    throw std::invalid_argument("thin_svd: row scale length mismatch");
  }
  if (!m.allFinite()) throw std::invalid_argument("thin_svd: non-finite input");
  for (double s : row_scale)
    if (!std::isfinite(s)) throw std::invalid_argument("thin_svd: non-finite row scale");
}

// Symmetric eigendecomposition of diag(s) M M^T diag(s), eigenpairs in
// descending order.
void gram_eigen(const Matrix& m, std::span<const double> s, Vector& values,
                Eigen::MatrixXd& vectors) {
  const Eigen::Index l = m.rows();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(l, l);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  if (!s.empty()) {
    for (Eigen::Index j = 0; j < l; ++j)
      for (Eigen::Index i = j; i < l; ++i) gram(i, j) *= s[i] * s[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("thin_svd: eigensolver failed");
  values = solver.eigenvalues().reverse();
  vectors = solver.eigenvectors().rowwise().reverse();
}

// One-sided Jacobi on the rows of y; the same rotations are applied to the
// columns of u so that u * y is invariant.
void jacobi_rows(Matrix& y, Matrix& u) {
  const Eigen::Index r = y.rows();
  if (r < 2) return;
  Vector norms(r);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (Eigen::Index i = 0; i < r; ++i) norms[i] = y.row(i).squaredNorm();
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < r; ++p) {
      for (Eigen::Index q = p + 1; q < r; ++q) {
        const double a = norms[p];
        const double b = norms[q];
        if (a == 0.0 || b == 0.0) continue;
        const double c = y.row(p).dot(y.row(q));
        if (std::abs(c) <= kJacobiTol * std::sqrt(a) * std::sqrt(b)) continue;
        rotated = true;
        const double zeta = (b - a) / (2.0 * c);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double cs = 1.0 / std::hypot(1.0, t);
        const double sn = cs * t;
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
          const double yp = y(p, k);
          const double yq = y(q, k);
          y(p, k) = cs * yp - sn * yq;
          y(q, k) = sn * yp + cs * yq;
        }
        for (Eigen::Index k = 0; k < u.rows(); ++k) {
          const double up = u(k, p);
          const double uq = u(k, q);
          u(k, p) = cs * up - sn * uq;
          u(k, q) = sn * up + cs * uq;
        }
        norms[p] = a - t * c;
        norms[q] = b + t * c;
      }
    }
    if (!rotated) return;
  }
}

// Cholesky QR on a block of nearly orthonormal rows; returns false when the
// Gram matrix is not numerically positive definite.
template <typename Rows>
bool cholesky_orthonormalize(Rows&& rows) {
  const Eigen::Index g = rows.rows();
  if (g == 0) return true;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(g, g);
  h.selfadjointView<Eigen::Lower>().rankUpdate(rows);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) return false;
  llt.matrixL().solveInPlace(rows);
  return true;
}

// Modified Gram-Schmidt, twice. Fallback for blocks that defeat Cholesky QR.
template <typename Rows>
void gram_schmidt_rows(Rows&& rows) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) rows.row(i) -= rows.row(i).dot(rows.row(j)) * rows.row(j);
      const double nrm = rows.row(i).norm();
      if (nrm > 0.0) rows.row(i) /= nrm;
    }
  }
}

template <typename Rows>
void orthonormalize(Rows&& rows) {
  for (int pass = 0; pass < 2; ++pass) {
    if (!cholesky_orthonormalize(rows)) {
      gram_schmidt_rows(rows);
      return;
    }
  }
}

// Replaces rows [good, r) of vt by unit vectors orthogonal to rows [0, good)
// and to each other.
void complete_rows(Matrix& vt, Eigen::Index good) {
  const Eigen::Index r = vt.rows();
  if (good >= r) return;
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  auto fill = vt.bottomRows(r - good);
  for (Eigen::Index i = 0; i < fill.rows(); ++i)
    for (Eigen::Index k = 0; k < fill.cols(); ++k) fill(i, k) = normal(rng);
  if (good > 0) {
    auto keep = vt.topRows(good);
    for (int pass = 0; pass < 2; ++pass) {
      Matrix coeff = fill * keep.transpose();
      fill.noalias() -= coeff * keep;
    }
  }
  for (Eigen::Index i = 0; i < fill.rows(); ++i) fill.row(i).normalize();
  orthonormalize(fill);
}

void apply_sign_convention(SvdResult& res) {
  for (Eigen::Index i = 0; i < res.vt.rows(); ++i) {
    Eigen::Index arg = 0;
    res.vt.row(i).cwiseAbs().maxCoeff(&arg);
    if (res.vt(i, arg) < 0.0) {
      res.vt.row(i) *= -1.0;
      res.u.col(i) *= -1.0;
    }
  }
}

SvdResult svd_short(const Matrix& m, std::span<const double> s, const SvdOptions& options) {
  const Eigen::Index l = m.rows();
  const Eigen::Index r = static_cast<Eigen::Index>(
      std::min<std::size_t>(options.rank, static_cast<std::size_t>(l)));

  Vector eigvals;
  Eigen::MatrixXd eigvecs;
  gram_eigen(m, s, eigvals, eigvecs);

  Matrix u = eigvecs.leftCols(r);
  Matrix coeff = u.transpose();
  if (!s.empty()) {
    for (Eigen::Index j = 0; j < l; ++j) coeff.col(j) *= s[j];
  }
  Matrix y = coeff * m;
  coeff.resize(0, 0);

  if (options.refine) jacobi_rows(y, u);

  Vector norms(r);
  for (Eigen::Index i = 0; i < r; ++i) norms[i] = y.row(i).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return norms[a] > norms[b]; });

  SvdResult res;
  const bool identity_order = std::is_sorted(order.begin(), order.end());
  if (identity_order) {
    res.u = std::move(u);
    res.vt = std::move(y);
  } else {
    res.u.resize(l, r);
    res.vt.resize(r, m.cols());
    for (Eigen::Index i = 0; i < r; ++i) {
      res.u.col(i) = u.col(order[i]);
      res.vt.row(i) = y.row(order[i]);
    }
    u.resize(0, 0);
    y.resize(0, 0);
  }
  res.singular_values.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) res.singular_values[i] = norms[order[i]];

  const double top = r > 0 ? res.singular_values[0] : 0.0;
  const double cutoff = options.refine ? 1e-290 : kFastPathCutoff * top;
  Eigen::Index good = 0;
  while (good < r && res.singular_values[good] > cutoff && res.singular_values[good] > 0.0) ++good;
  for (Eigen::Index i = 0; i < good; ++i) res.vt.row(i) /= res.singular_values[i];
  for (Eigen::Index i = good; i < r; ++i) res.singular_values[i] = 0.0;
  if (!options.refine) orthonormalize(res.vt.topRows(good));
  complete_rows(res.vt, good);
  apply_sign_convention(res);
  return res;
}

}  // namespace

SvdResult thin_svd_scaled(const Matrix& m, std::span<const double> row_scale,
                          const SvdOptions& options) {
  check_input(m, row_scale);
  if (m.rows() <= m.cols()) return svd_short(m, row_scale, options);

  // Tall input: decompose the transpose and swap the factors.
  Matrix mt = m.transpose();
  if (!row_scale.empty()) {
    for (Eigen::Index j = 0; j < mt.cols(); ++j) mt.col(j) *= row_scale[j];
  }
  SvdResult t = svd_short(mt, {}, options);
  SvdResult res;
  res.singular_values = std::move(t.singular_values);
  res.u = t.vt.transpose();
  res.vt = t.u.transpose();
  apply_sign_convention(res);
  return res;
}

SvdResult thin_svd(const Matrix& m, const SvdOptions& options) {
  return thin_svd_scaled(m, {}, options);
}

Vector singular_values(const Matrix& m) {
  check_input(m, {});
  Eigen::MatrixXd gram;
  if (m.rows() <= m.cols()) {
    gram = Eigen::MatrixXd::Zero(m.rows(), m.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  } else {
    gram = Eigen::MatrixXd::Zero(m.cols(), m.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  Vector values = solver.eigenvalues().reverse();
  return values.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace fdembed::linalg
