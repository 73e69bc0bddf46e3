#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "fdembed/embedding.hpp"
#include "fdembed/linalg.hpp"

namespace fdembed::linalg {

// A matrix that can be streamed row by row any number of times.
class RowSource {
 public:
  using Visitor = std::function<void(std::span<const double>)>;

  virtual ~RowSource() = default;
  virtual std::size_t num_cols() const = 0;
  virtual void for_each_row(const Visitor& visit) const = 0;
};

class MatrixRowSource final : public RowSource {
 public:
  explicit MatrixRowSource(const Matrix& m) : m_(m) {}
  std::size_t num_cols() const override { return static_cast<std::size_t>(m_.cols()); }
  void for_each_row(const Visitor& visit) const override;

 private:
  const Matrix& m_;
};

struct PowerIterationOptions {
  std::size_t max_iters = 200;
  double rel_tol = 1e-9;
  std::uint64_t seed = 0x5eed;
};

// ||M^T M - W^T W||_2 / ||M||_F^2 where W = e.values (k x n). Pass an
// embedding extracted with exponent 1 to measure the sketch itself.
// Throws DataError for an empty stream or a column mismatch.
double covariance_error(const RowSource& rows, const Embedding& e,
                        const PowerIterationOptions& options = {});

inline constexpr std::size_t kDefaultDenseLimit = 20000;

// ||M - M V_k^T V_k||_F^2 / ||M - [M]_k||_F^2, V_k the top-k right singular
// vectors of e.values. Materializes M; throws CapabilityError when either
// side of M exceeds `dense_limit`, std::invalid_argument when e has fewer than
// k nonzero directions. 0/0 is reported as 1.
double projection_error(const RowSource& rows, const Embedding& e, std::size_t k,
                        std::size_t dense_limit = kDefaultDenseLimit);

// diag(sigma_1..d)^exponent * Vt_1..d of the exact SVD of m.
Embedding svd_oracle_embedding(const Matrix& m, std::size_t d, double exponent = 0.5,
                               std::size_t dense_limit = kDefaultDenseLimit);

}  // namespace fdembed::linalg
