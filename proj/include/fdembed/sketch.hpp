#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>

#include "fdembed/embedding.hpp"
#include "fdembed/linalg.hpp"
#include "fdembed/similarity.hpp"

namespace fdembed::sketch {

enum class SketcherKind : std::uint8_t {
  frequent_directions = 0,
  hashing = 1,
  random_projection = 2,
  sampling = 3,
};

// Short names used on the command line: fd, hash, rp, sample.
std::string_view to_string(SketcherKind kind) noexcept;
SketcherKind parse_sketcher_kind(std::string_view name);

class Sketcher {
 public:
  Sketcher(std::size_t d, std::size_t n);
  virtual ~Sketcher() = default;

  virtual SketcherKind kind() const noexcept = 0;
  std::size_t dim() const noexcept { return d_; }
  std::size_t num_cols() const noexcept { return n_; }
  std::uint64_t rows_seen() const noexcept { return rows_seen_; }

  // Row `index` of the streamed matrix. Throws std::invalid_argument on a
  // length mismatch or non-finite entries.
  void insert(std::uint64_t index, std::span<const double> row);
  void insert(const similarity::SimilarityRow& row) { insert(row.node, row.values); }

  // Rows [0, k) of diag(sigma^exponent) * Vt of the current sketch.
  // exponent 0.5 is the embedding; exponent 1 reproduces the sketch
  // covariance. Throws std::invalid_argument for k outside [1, d] and
  // std::logic_error when nothing has been inserted.
  Embedding embedding(std::size_t k, double exponent = 0.5) const;

  virtual std::unique_ptr<Sketcher> clone() const = 0;

  // Leading singular values and right singular vectors of the sketch, at
  // most d of each. Cached until the next insert.
  struct Spectrum {
    linalg::Vector sigma;
    linalg::Matrix directions;
  };
  const Spectrum& spectrum() const;

 protected:
  virtual void do_insert(std::uint64_t index, std::span<const double> row) = 0;
  virtual Spectrum compute_spectrum() const = 0;
  void set_rows_seen(std::uint64_t rows) noexcept { rows_seen_ = rows; }

 private:
  std::size_t d_;
  std::size_t n_;
  std::uint64_t rows_seen_ = 0;
  mutable std::optional<Spectrum> cache_;
};

class FrequentDirections final : public Sketcher {
 public:
  FrequentDirections(std::size_t d, std::size_t n);

  // Rebuilds a saved state. `fill` is the number of raw rows inserted since
  // the last shrink. Throws DataError when the parts are inconsistent.
  static FrequentDirections from_state(std::size_t d, std::size_t n, std::uint64_t rows_seen,
                                       std::size_t fill, linalg::Vector sigma_hat,
                                       linalg::Matrix buffer);

  SketcherKind kind() const noexcept override { return SketcherKind::frequent_directions; }
  std::unique_ptr<Sketcher> clone() const override;

  const linalg::Matrix& buffer() const noexcept { return w_; }
  const linalg::Vector& sigma_hat() const noexcept { return sigma_hat_; }
  std::size_t fill() const noexcept { return fill_; }
  std::size_t shrinks() const noexcept { return shrinks_; }

  // Nonzero rows of diag(sigma) * Vt over the whole buffer, largest first.
  // The Gram matrix is W^T diag(sigma_hat)^2 W.
  linalg::Matrix materialize() const;

  friend FrequentDirections merge(const FrequentDirections& a, const FrequentDirections& b);

 protected:
  void do_insert(std::uint64_t index, std::span<const double> row) override;
  Spectrum compute_spectrum() const override;

 private:
  std::size_t next_slot() const noexcept { return (shrinks_ > 0 ? dim() : 0) + fill_; }
  void shrink();

  linalg::Matrix w_;          // 2d x n
  linalg::Vector sigma_hat_;  // 2d
  std::size_t fill_ = 0;
  std::size_t shrinks_ = 0;
};

// Count sketch: W[h(i)] += g(i) * row with h 2-universal and g 4-universal.
class HashingSketch final : public Sketcher {
 public:
  HashingSketch(std::size_t d, std::size_t n, std::uint64_t seed);
  static HashingSketch from_state(std::size_t d, std::size_t n, std::uint64_t rows_seen,
                                  std::uint64_t bucket_seed, std::uint64_t sign_seed,
                                  double total_sq_norm, linalg::Matrix w);

  SketcherKind kind() const noexcept override { return SketcherKind::hashing; }
  std::unique_ptr<Sketcher> clone() const override;

  std::size_t bucket(std::uint64_t index) const noexcept;
  double sign(std::uint64_t index) const noexcept;

  const linalg::Matrix& buffer() const noexcept { return w_; }
  std::uint64_t bucket_seed() const noexcept { return bucket_seed_; }
  std::uint64_t sign_seed() const noexcept { return sign_seed_; }
  double total_sq_norm() const noexcept { return total_sq_norm_; }

  // W1 + W2; both sketches must share d, n and seeds.
  friend HashingSketch merge(const HashingSketch& a, const HashingSketch& b);

 protected:
  void do_insert(std::uint64_t index, std::span<const double> row) override;
  Spectrum compute_spectrum() const override;

 private:
  void set_seeds(std::uint64_t bucket_seed, std::uint64_t sign_seed) noexcept;

  linalg::Matrix w_;
  std::uint64_t bucket_seed_;
  std::uint64_t sign_seed_;
  std::uint64_t a_, b_;  // bucket hash
  std::uint64_t c_[4];   // sign polynomial
  double total_sq_norm_ = 0.0;
};

// W += r_i (outer) row, r_i uniform in {-1/sqrt(d), +1/sqrt(d)}^d from the
// stream keyed by (seed, i).
class RandomProjectionSketch final : public Sketcher {
 public:
  RandomProjectionSketch(std::size_t d, std::size_t n, std::uint64_t seed);
  static RandomProjectionSketch from_state(std::size_t d, std::size_t n, std::uint64_t rows_seen,
                                           std::uint64_t seed, double total_sq_norm,
                                           linalg::Matrix w);

  SketcherKind kind() const noexcept override { return SketcherKind::random_projection; }
  std::unique_ptr<Sketcher> clone() const override;

  linalg::Vector projection(std::uint64_t index) const;

  const linalg::Matrix& buffer() const noexcept { return w_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double total_sq_norm() const noexcept { return total_sq_norm_; }

  friend RandomProjectionSketch merge(const RandomProjectionSketch& a,
                                      const RandomProjectionSketch& b);

 protected:
  void do_insert(std::uint64_t index, std::span<const double> row) override;
  Spectrum compute_spectrum() const override;

 private:
  linalg::Matrix w_;
  std::uint64_t seed_;
  double total_sq_norm_ = 0.0;
};

// d independent size-one reservoirs; row i enters slot s with key
// log(u_{i,s}) / ||row||^2 and the largest key wins. At extraction each kept
// row is rescaled to squared norm ||M||_F^2 / d.
class SamplingSketch final : public Sketcher {
 public:
  SamplingSketch(std::size_t d, std::size_t n, std::uint64_t seed);
  static SamplingSketch from_state(std::size_t d, std::size_t n, std::uint64_t rows_seen,
                                   std::uint64_t seed, double total_sq_norm, linalg::Matrix w,
                                   linalg::Vector keys, linalg::Vector slot_sq_norms);

  SketcherKind kind() const noexcept override { return SketcherKind::sampling; }
  std::unique_ptr<Sketcher> clone() const override;

  // Rows as they would be used for extraction (rescaled; empty slots zero).
  linalg::Matrix scaled_rows() const;

  const linalg::Matrix& buffer() const noexcept { return w_; }
  const linalg::Vector& keys() const noexcept { return keys_; }
  const linalg::Vector& slot_sq_norms() const noexcept { return slot_sq_norms_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double total_sq_norm() const noexcept { return total_sq_norm_; }

  // Slot-wise larger key.
  friend SamplingSketch merge(const SamplingSketch& a, const SamplingSketch& b);

 protected:
  void do_insert(std::uint64_t index, std::span<const double> row) override;
  Spectrum compute_spectrum() const override;

 private:
  linalg::Matrix w_;
  linalg::Vector keys_;
  linalg::Vector slot_sq_norms_;
  std::uint64_t seed_;
  double total_sq_norm_ = 0.0;
};

// All buffer rows of both inputs, ordered by singular value, streamed through
// a fresh sketch of the same d. rows_seen is the sum.
FrequentDirections merge(const FrequentDirections& a, const FrequentDirections& b);

// Dispatches on the dynamic kinds; throws std::invalid_argument on mixed
// kinds or shapes.
std::unique_ptr<Sketcher> merge(const Sketcher& a, const Sketcher& b);

std::unique_ptr<Sketcher> make_sketcher(SketcherKind kind, std::size_t d, std::size_t n,
                                        std::uint64_t seed);

}  // namespace fdembed::sketch
