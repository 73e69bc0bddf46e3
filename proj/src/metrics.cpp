#include "fdembed/metrics.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "fdembed/error.hpp"

namespace fdembed::linalg {
namespace {

using RowMap = Eigen::Map<const Eigen::RowVectorXd>;

RowMap as_row(std::span<const double> r) {
  return RowMap(r.data(), static_cast<Eigen::Index>(r.size()));
}

void check_cols(const RowSource& rows, const Embedding& e) {
  if (e.num_nodes() != rows.num_cols())
    throw DataError("embedding has " + std::to_string(e.num_nodes()) + " columns, matrix has " +
                    std::to_string(rows.num_cols()));
}

Matrix collect(const RowSource& rows, std::size_t dense_limit) {
  const std::size_t n = rows.num_cols();
  if (n > dense_limit)
    throw CapabilityError("dense SVD needs " + std::to_string(n) + " columns, limit is " +
                          std::to_string(dense_limit));
  std::vector<double> data;
  std::size_t count = 0;
  rows.for_each_row([&](std::span<const double> r) {
    if (++count > dense_limit)
      throw CapabilityError("dense SVD row count exceeds limit " + std::to_string(dense_limit));
    data.insert(data.end(), r.begin(), r.end());
  });
  if (count == 0) throw DataError("empty row stream");
  return Eigen::Map<const Matrix>(data.data(), static_cast<Eigen::Index>(count),
                                  static_cast<Eigen::Index>(n));
}

}  // namespace

void MatrixRowSource::for_each_row(const Visitor& visit) const {
  for (Eigen::Index i = 0; i < m_.rows(); ++i)
    visit(std::span<const double>(m_.data() + i * m_.cols(), static_cast<std::size_t>(m_.cols())));
}

double covariance_error(const RowSource& rows, const Embedding& e,
                        const PowerIterationOptions& options) {
  check_cols(rows, e);
  const auto n = static_cast<Eigen::Index>(rows.num_cols());
  if (n == 0) throw DataError("empty row stream");

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  x.normalize();

  double frob = 0.0;
  std::size_t count = 0;
  bool first = true;
  Vector y(n);
  auto apply = [&] {
    y.setZero();
    rows.for_each_row([&](std::span<const double> r) {
      if (r.size() != static_cast<std::size_t>(n)) throw DataError("row length mismatch");
      auto row = as_row(r);
      y.noalias() += row.dot(x) * row.transpose();
      if (first) {
        frob += row.squaredNorm();
        ++count;
      }
    });
    first = false;
    if (e.values.rows() > 0) {
      const Vector ex = e.values * x;
      y.noalias() -= e.values.transpose() * ex;
    }
  };

  double lambda = 0.0;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    apply();
    if (count == 0) throw DataError("empty row stream");
    const double next = y.norm();
    if (next == 0.0) break;
    x = y / next;
    const bool done = std::abs(next - lambda) <= options.rel_tol * next;
    lambda = next;
    if (done) break;
  }
  if (frob == 0.0) throw DataError("covariance error is undefined for an all-zero matrix");
  return lambda / frob;
}

double projection_error(const RowSource& rows, const Embedding& e, std::size_t k,
                        std::size_t dense_limit) {
  check_cols(rows, e);
  if (k == 0) throw std::invalid_argument("projection rank must be at least 1");
  if (k > e.dim()) throw std::invalid_argument("projection rank exceeds embedding dimension");
  if (e.values.isZero(0.0)) throw std::invalid_argument("embedding has no nonzero directions");

  const auto svd = thin_svd(e.values, {.rank = k, .refine = true});
  std::size_t available = 0;
  while (available < svd.rank() && svd.singular_values[static_cast<Eigen::Index>(available)] > 0.0)
    ++available;
  if (available < k)
    throw std::invalid_argument("embedding has only " + std::to_string(available) +
                                " nonzero directions, k = " + std::to_string(k));
  const Matrix vk = svd.vt.topRows(static_cast<Eigen::Index>(k));

  const Matrix m = collect(rows, dense_limit);

  const auto residual_sq = [&m](const Matrix& basis) {
    const Matrix coeff = m * basis.transpose();
    return (m - coeff * basis).squaredNorm();
  };
  const double numerator = residual_sq(vk);
  const auto best = thin_svd(m, {.rank = k, .refine = true});
  const double denominator = residual_sq(best.vt);

  // M of rank <= k up to rounding: report 0/0 as 1
  const double floor = 1e-20 * m.squaredNorm();
  if (denominator <= floor) return numerator <= floor ? 1.0 : std::numeric_limits<double>::infinity();
  return numerator / denominator;
}

Embedding svd_oracle_embedding(const Matrix& m, std::size_t d, double exponent,
                               std::size_t dense_limit) {
  if (static_cast<std::size_t>(m.rows()) > dense_limit || static_cast<std::size_t>(m.cols()) > dense_limit)
    throw CapabilityError("exact SVD of a " + std::to_string(m.rows()) + " x " +
                          std::to_string(m.cols()) + " matrix exceeds the dense limit " +
                          std::to_string(dense_limit));
  if (d == 0) throw std::invalid_argument("embedding dimension must be at least 1");
  if (!(exponent >= 0.0) || !std::isfinite(exponent))
    throw std::invalid_argument("singular value exponent must be finite and non-negative");

  Embedding e;
  e.values = Matrix::Zero(static_cast<Eigen::Index>(d), m.cols());
  e.sketcher = "svd";
  e.rows_seen = static_cast<std::uint64_t>(m.rows());
  if (m.isZero(0.0)) return e;
  const auto svd = thin_svd(m, {.rank = d, .refine = true});
  for (Eigen::Index i = 0; i < svd.singular_values.size(); ++i) {
    if (svd.singular_values[i] > 0.0)
      e.values.row(i) = std::pow(svd.singular_values[i], exponent) * svd.vt.row(i);
  }
  return e;
}

}  // namespace fdembed::linalg
