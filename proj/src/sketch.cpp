#include "fdembed/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fdembed/error.hpp"

namespace fdembed::sketch {
namespace {

using linalg::Matrix;
using linalg::Vector;

constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

std::uint64_t mod_p(unsigned __int128 x) noexcept {
  // x < 2^122 here; fold twice
  std::uint64_t lo = static_cast<std::uint64_t>(x & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
  std::uint64_t r = lo + (hi & kMersenne61) + static_cast<std::uint64_t>(hi >> 61);
  r = (r & kMersenne61) + (r >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) noexcept {
  return mod_p(static_cast<unsigned __int128>(a) * b);
}

std::uint64_t add_mod(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t r = a + b;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

void check_shape(std::size_t d, std::size_t n) {
  if (d == 0) throw std::invalid_argument("sketch dimension must be at least 1");
  if (n == 0) throw std::invalid_argument("sketch needs at least one column");
}

Sketcher::Spectrum svd_spectrum(const Matrix& w, std::size_t d) {
  Sketcher::Spectrum s;
  auto svd = linalg::thin_svd(w, {.rank = d, .refine = false});
  s.sigma = std::move(svd.singular_values);
  s.directions = std::move(svd.vt);
  return s;
}

bool all_zero(const Matrix& w) { return (w.array() == 0.0).all(); }

}  // namespace

std::string_view to_string(SketcherKind kind) noexcept {
  switch (kind) {
    case SketcherKind::frequent_directions: return "fd";
    case SketcherKind::hashing: return "hash";
    case SketcherKind::random_projection: return "rp";
    case SketcherKind::sampling: return "sample";
  }
  return "unknown";
}

SketcherKind parse_sketcher_kind(std::string_view name) {
  if (name == "fd") return SketcherKind::frequent_directions;
  if (name == "hash") return SketcherKind::hashing;
  if (name == "rp") return SketcherKind::random_projection;
  if (name == "sample") return SketcherKind::sampling;
  throw std::invalid_argument("unknown sketcher '" + std::string(name) + "'");
}

// ---- Sketcher ----

Sketcher::Sketcher(std::size_t d, std::size_t n) : d_(d), n_(n) { check_shape(d, n); }

void Sketcher::insert(std::uint64_t index, std::span<const double> row) {
  if (row.size() != n_) {
    throw std::invalid_argument("row length " + std::to_string(row.size()) + " != " +
                                std::to_string(n_));
  }
  for (double x : row)
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite entry in row");
  cache_.reset();
  do_insert(index, row);
  ++rows_seen_;
}

const Sketcher::Spectrum& Sketcher::spectrum() const {
  if (!cache_) cache_ = compute_spectrum();
  return *cache_;
}

Embedding Sketcher::embedding(std::size_t k, double exponent) const {
  if (k < 1 || k > d_) throw std::invalid_argument("embedding dimension must lie in [1, d]");
  if (!(exponent >= 0.0) || !std::isfinite(exponent))
    throw std::invalid_argument("singular value exponent must be finite and non-negative");
  if (rows_seen_ == 0) throw std::logic_error("embedding requested from an empty sketch");

  const Spectrum& s = spectrum();
  Embedding e;
  e.values = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n_));
  const auto r = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), s.sigma.size());
  for (Eigen::Index i = 0; i < r; ++i) {
    if (s.sigma[i] > 0.0) e.values.row(i) = std::pow(s.sigma[i], exponent) * s.directions.row(i);
  }
  e.sketcher = std::string(to_string(kind()));
  e.rows_seen = rows_seen_;
  return e;
}

// ---- Frequent Directions ----

FrequentDirections::FrequentDirections(std::size_t d, std::size_t n)
    : Sketcher(d, n),
      w_(Matrix::Zero(static_cast<Eigen::Index>(2 * d), static_cast<Eigen::Index>(n))),
      sigma_hat_(Vector::Ones(static_cast<Eigen::Index>(2 * d))) {}

FrequentDirections FrequentDirections::from_state(std::size_t d, std::size_t n,
                                                  std::uint64_t rows_seen, std::size_t fill,
                                                  Vector sigma_hat, Matrix buffer) {
  FrequentDirections fd(d, n);
  const auto l = static_cast<Eigen::Index>(2 * d);
  if (sigma_hat.size() != l || buffer.rows() != l || buffer.cols() != static_cast<Eigen::Index>(n))
    throw DataError("frequent directions state has the wrong shape");
  if (!sigma_hat.allFinite() || !buffer.allFinite() || (sigma_hat.array() < 0.0).any())
    throw DataError("frequent directions state has invalid entries");
  const bool shrunk = sigma_hat[static_cast<Eigen::Index>(d) - 1] == 0.0;
  const std::size_t base = shrunk ? d : 0;
  if (base + fill >= 2 * d) throw DataError("frequent directions fill out of range");
  if (rows_seen < fill) throw DataError("frequent directions rows_seen below fill");
  for (Eigen::Index i = static_cast<Eigen::Index>(base + fill); i < l; ++i) {
    if (!buffer.row(i).isZero(0.0) || (i >= static_cast<Eigen::Index>(d) && sigma_hat[i] != 1.0))
      throw DataError("frequent directions free slots are not empty");
  }
  fd.w_ = std::move(buffer);
  fd.sigma_hat_ = std::move(sigma_hat);
  fd.fill_ = fill;
  fd.shrinks_ = shrunk ? 1 : 0;
  fd.set_rows_seen(rows_seen);
  return fd;
}

std::unique_ptr<Sketcher> FrequentDirections::clone() const {
  return std::make_unique<FrequentDirections>(*this);
}

void FrequentDirections::do_insert(std::uint64_t, std::span<const double> row) {
  const auto slot = static_cast<Eigen::Index>(next_slot());
  w_.row(slot) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
  sigma_hat_[slot] = 1.0;
  ++fill_;
  if (next_slot() == 2 * dim()) shrink();
}

void FrequentDirections::shrink() {
  const std::size_t d = dim();
  const auto di = static_cast<Eigen::Index>(d);
  auto svd = linalg::thin_svd_scaled(w_, {sigma_hat_.data(), static_cast<std::size_t>(sigma_hat_.size())},
                                     {.rank = d, .refine = false});
  const Eigen::Index r = svd.singular_values.size();
  const double delta = r >= di ? svd.singular_values[di - 1] : 0.0;
  const double delta_sq = delta * delta;

  w_.bottomRows(di).setZero();
  sigma_hat_.tail(di).setOnes();
  for (Eigen::Index i = 0; i < di; ++i) {
    if (i < r) {
      const double s = svd.singular_values[i];
      sigma_hat_[i] = std::sqrt(std::max(s * s - delta_sq, 0.0));
      w_.row(i) = svd.vt.row(i);
    } else {
      sigma_hat_[i] = 0.0;
      w_.row(i).setZero();
    }
  }
  sigma_hat_[di - 1] = 0.0;
  fill_ = 0;
  ++shrinks_;
}

Sketcher::Spectrum FrequentDirections::compute_spectrum() const {
  const std::size_t d = dim();
  const auto di = static_cast<Eigen::Index>(d);
  if (fill_ == 0) {
    Spectrum s;
    if (shrinks_ == 0) {
      s.sigma = Vector::Zero(di);
      s.directions = Matrix::Zero(di, w_.cols());
    } else {
      s.sigma = sigma_hat_.head(di);
      s.directions = w_.topRows(di);
    }
    return s;
  }
  // Compress: SVD of the weighted buffer without subtraction, top d kept.
  Spectrum s;
  auto svd = linalg::thin_svd_scaled(w_, {sigma_hat_.data(), static_cast<std::size_t>(sigma_hat_.size())},
                                     {.rank = d, .refine = false});
  s.sigma = std::move(svd.singular_values);
  s.directions = std::move(svd.vt);
  return s;
}

Matrix FrequentDirections::materialize() const {
  const std::size_t used = next_slot();
  if (used == 0) return Matrix(0, w_.cols());
  const auto ui = static_cast<Eigen::Index>(used);
  Matrix top = w_.topRows(ui);
  auto svd = linalg::thin_svd_scaled(top, {sigma_hat_.data(), used}, {.refine = false});
  Eigen::Index nonzero = 0;
  while (nonzero < svd.singular_values.size() && svd.singular_values[nonzero] > 0.0) ++nonzero;
  Matrix rows = svd.vt.topRows(nonzero);
  for (Eigen::Index i = 0; i < nonzero; ++i) rows.row(i) *= svd.singular_values[i];
  return rows;
}

FrequentDirections merge(const FrequentDirections& a, const FrequentDirections& b) {
  if (a.dim() != b.dim() || a.num_cols() != b.num_cols())
    throw std::invalid_argument("merge: sketches differ in shape");
  FrequentDirections out(a.dim(), a.num_cols());
  const Matrix ra = a.materialize();
  const Matrix rb = b.materialize();

  // Interleave by norm so the stream order does not depend on argument order.
  struct Item {
    double norm;
    const Matrix* src;
    Eigen::Index row;
  };
  std::vector<Item> items;
  for (Eigen::Index i = 0; i < ra.rows(); ++i) items.push_back({ra.row(i).norm(), &ra, i});
  for (Eigen::Index i = 0; i < rb.rows(); ++i) items.push_back({rb.row(i).norm(), &rb, i});
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& x, const Item& y) { return x.norm > y.norm; });

  std::vector<double> row(a.num_cols());
  std::uint64_t index = 0;
  for (const Item& it : items) {
    Eigen::Map<Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size())) =
        it.src->row(it.row);
    out.insert(index++, row);
  }
  out.set_rows_seen(a.rows_seen() + b.rows_seen());
  return out;
}

// ---- Hashing ----

HashingSketch::HashingSketch(std::size_t d, std::size_t n, std::uint64_t seed)
    : Sketcher(d, n),
      w_(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n))) {
  set_seeds(similarity::stream_seed(seed, 0x68617368ULL), similarity::stream_seed(seed, 0x7369676eULL));
}

void HashingSketch::set_seeds(std::uint64_t bucket_seed, std::uint64_t sign_seed) noexcept {
  bucket_seed_ = bucket_seed;
  sign_seed_ = sign_seed;
  a_ = 1 + similarity::stream_seed(bucket_seed, 0) % (kMersenne61 - 1);
  b_ = similarity::stream_seed(bucket_seed, 1) % kMersenne61;
  for (std::uint64_t j = 0; j < 4; ++j) c_[j] = similarity::stream_seed(sign_seed, j) % kMersenne61;
}

HashingSketch HashingSketch::from_state(std::size_t d, std::size_t n, std::uint64_t rows_seen,
                                        std::uint64_t bucket_seed, std::uint64_t sign_seed,
                                        double total_sq_norm, Matrix w) {
  HashingSketch h(d, n, 0);
  if (w.rows() != static_cast<Eigen::Index>(d) || w.cols() != static_cast<Eigen::Index>(n))
    throw DataError("hashing state has the wrong shape");
  if (!w.allFinite() || !(total_sq_norm >= 0.0)) throw DataError("hashing state has invalid entries");
  h.set_seeds(bucket_seed, sign_seed);
  h.w_ = std::move(w);
  h.total_sq_norm_ = total_sq_norm;
  h.set_rows_seen(rows_seen);
  return h;
}

std::unique_ptr<Sketcher> HashingSketch::clone() const { return std::make_unique<HashingSketch>(*this); }

std::size_t HashingSketch::bucket(std::uint64_t index) const noexcept {
  const std::uint64_t x = index % kMersenne61;
  return static_cast<std::size_t>(add_mod(mul_mod(a_, x), b_) % dim());
}

double HashingSketch::sign(std::uint64_t index) const noexcept {
  const std::uint64_t x = index % kMersenne61;
  std::uint64_t acc = c_[3];
  for (int j = 2; j >= 0; --j) acc = add_mod(mul_mod(acc, x), c_[j]);
  return (acc & 1) ? 1.0 : -1.0;
}

void HashingSketch::do_insert(std::uint64_t index, std::span<const double> row) {
  Eigen::Map<const Eigen::RowVectorXd> r(row.data(), static_cast<Eigen::Index>(row.size()));
  w_.row(static_cast<Eigen::Index>(bucket(index))) += sign(index) * r;
  total_sq_norm_ += r.squaredNorm();
}

Sketcher::Spectrum HashingSketch::compute_spectrum() const {
  if (all_zero(w_)) return {Vector::Zero(w_.rows()), Matrix::Zero(w_.rows(), w_.cols())};
  return svd_spectrum(w_, dim());
}

HashingSketch merge(const HashingSketch& a, const HashingSketch& b) {
  if (a.dim() != b.dim() || a.num_cols() != b.num_cols())
    throw std::invalid_argument("merge: sketches differ in shape");
  if (a.bucket_seed_ != b.bucket_seed_ || a.sign_seed_ != b.sign_seed_)
    throw std::invalid_argument("merge: hashing sketches use different hash functions");
  HashingSketch out = a;
  out.w_ += b.w_;
  out.total_sq_norm_ += b.total_sq_norm_;
  out.set_rows_seen(a.rows_seen() + b.rows_seen());
  return out;
}

// ---- Random projection ----

RandomProjectionSketch::RandomProjectionSketch(std::size_t d, std::size_t n, std::uint64_t seed)
    : Sketcher(d, n),
      w_(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n))),
      seed_(seed) {}

RandomProjectionSketch RandomProjectionSketch::from_state(std::size_t d, std::size_t n,
                                                          std::uint64_t rows_seen,
                                                          std::uint64_t seed, double total_sq_norm,
                                                          Matrix w) {
  RandomProjectionSketch rp(d, n, seed);
  if (w.rows() != static_cast<Eigen::Index>(d) || w.cols() != static_cast<Eigen::Index>(n))
    throw DataError("random projection state has the wrong shape");
  if (!w.allFinite() || !(total_sq_norm >= 0.0))
    throw DataError("random projection state has invalid entries");
  rp.w_ = std::move(w);
  rp.total_sq_norm_ = total_sq_norm;
  rp.set_rows_seen(rows_seen);
  return rp;
}

std::unique_ptr<Sketcher> RandomProjectionSketch::clone() const {
  return std::make_unique<RandomProjectionSketch>(*this);
}

Vector RandomProjectionSketch::projection(std::uint64_t index) const {
  const auto d = static_cast<Eigen::Index>(dim());
  const double v = 1.0 / std::sqrt(static_cast<double>(dim()));
  std::mt19937_64 rng(similarity::stream_seed(seed_, index));
  Vector r(d);
  std::uint64_t bits = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j % 64 == 0) bits = rng();
    r[j] = (bits & 1) ? v : -v;
    bits >>= 1;
  }
  return r;
}

void RandomProjectionSketch::do_insert(std::uint64_t index, std::span<const double> row) {
  Eigen::Map<const Eigen::RowVectorXd> x(row.data(), static_cast<Eigen::Index>(row.size()));
  const Vector r = projection(index);
  w_.noalias() += r * x;
  total_sq_norm_ += x.squaredNorm();
}

Sketcher::Spectrum RandomProjectionSketch::compute_spectrum() const {
  if (all_zero(w_)) return {Vector::Zero(w_.rows()), Matrix::Zero(w_.rows(), w_.cols())};
  return svd_spectrum(w_, dim());
}

RandomProjectionSketch merge(const RandomProjectionSketch& a, const RandomProjectionSketch& b) {
  if (a.dim() != b.dim() || a.num_cols() != b.num_cols())
    throw std::invalid_argument("merge: sketches differ in shape");
  if (a.seed_ != b.seed_) throw std::invalid_argument("merge: projection seeds differ");
  RandomProjectionSketch out = a;
  out.w_ += b.w_;
  out.total_sq_norm_ += b.total_sq_norm_;
  out.set_rows_seen(a.rows_seen() + b.rows_seen());
  return out;
}

// ---- Sampling ----

SamplingSketch::SamplingSketch(std::size_t d, std::size_t n, std::uint64_t seed)
    : Sketcher(d, n),
      w_(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n))),
      keys_(Vector::Constant(static_cast<Eigen::Index>(d), -std::numeric_limits<double>::infinity())),
      slot_sq_norms_(Vector::Zero(static_cast<Eigen::Index>(d))),
      seed_(seed) {}

SamplingSketch SamplingSketch::from_state(std::size_t d, std::size_t n, std::uint64_t rows_seen,
                                          std::uint64_t seed, double total_sq_norm, Matrix w,
                                          Vector keys, Vector slot_sq_norms) {
  SamplingSketch s(d, n, seed);
  const auto di = static_cast<Eigen::Index>(d);
  if (w.rows() != di || w.cols() != static_cast<Eigen::Index>(n) || keys.size() != di ||
      slot_sq_norms.size() != di)
    throw DataError("sampling state has the wrong shape");
  if (!w.allFinite() || !slot_sq_norms.allFinite() || !(total_sq_norm >= 0.0))
    throw DataError("sampling state has invalid entries");
  for (Eigen::Index i = 0; i < di; ++i)
    if (std::isnan(keys[i]) || keys[i] > 0.0) throw DataError("sampling state has invalid keys");
  s.w_ = std::move(w);
  s.keys_ = std::move(keys);
  s.slot_sq_norms_ = std::move(slot_sq_norms);
  s.total_sq_norm_ = total_sq_norm;
  s.set_rows_seen(rows_seen);
  return s;
}

std::unique_ptr<Sketcher> SamplingSketch::clone() const { return std::make_unique<SamplingSketch>(*this); }

void SamplingSketch::do_insert(std::uint64_t index, std::span<const double> row) {
  Eigen::Map<const Eigen::RowVectorXd> x(row.data(), static_cast<Eigen::Index>(row.size()));
  const double weight = x.squaredNorm();
  total_sq_norm_ += weight;
  if (weight == 0.0) return;
  std::mt19937_64 rng(similarity::stream_seed(seed_, index));
  for (Eigen::Index s = 0; s < w_.rows(); ++s) {
    // u in (0, 1]
    const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double key = std::log(u) / weight;
    if (key > keys_[s]) {
      keys_[s] = key;
      slot_sq_norms_[s] = weight;
      w_.row(s) = x;
    }
  }
}

Matrix SamplingSketch::scaled_rows() const {
  Matrix out = w_;
  const double target = std::sqrt(total_sq_norm_ / static_cast<double>(dim()));
  for (Eigen::Index s = 0; s < out.rows(); ++s) {
    if (slot_sq_norms_[s] > 0.0)
      out.row(s) *= target / std::sqrt(slot_sq_norms_[s]);
    else
      out.row(s).setZero();
  }
  return out;
}

Sketcher::Spectrum SamplingSketch::compute_spectrum() const {
  Matrix scaled = scaled_rows();
  if (all_zero(scaled)) return {Vector::Zero(w_.rows()), Matrix::Zero(w_.rows(), w_.cols())};
  return svd_spectrum(scaled, dim());
}

SamplingSketch merge(const SamplingSketch& a, const SamplingSketch& b) {
  if (a.dim() != b.dim() || a.num_cols() != b.num_cols())
    throw std::invalid_argument("merge: sketches differ in shape");
  SamplingSketch out = a;
  for (Eigen::Index s = 0; s < out.w_.rows(); ++s) {
    if (b.keys_[s] > out.keys_[s]) {
      out.keys_[s] = b.keys_[s];
      out.slot_sq_norms_[s] = b.slot_sq_norms_[s];
      out.w_.row(s) = b.w_.row(s);
    }
  }
  out.total_sq_norm_ += b.total_sq_norm_;
  out.set_rows_seen(a.rows_seen() + b.rows_seen());
  return out;
}

// ---- dispatch ----

std::unique_ptr<Sketcher> merge(const Sketcher& a, const Sketcher& b) {
  if (a.kind() != b.kind()) throw std::invalid_argument("merge: sketcher kinds differ");
  switch (a.kind()) {
    case SketcherKind::frequent_directions:
      return std::make_unique<FrequentDirections>(merge(static_cast<const FrequentDirections&>(a),
                                                        static_cast<const FrequentDirections&>(b)));
    case SketcherKind::hashing:
      return std::make_unique<HashingSketch>(
          merge(static_cast<const HashingSketch&>(a), static_cast<const HashingSketch&>(b)));
    case SketcherKind::random_projection:
      return std::make_unique<RandomProjectionSketch>(merge(
          static_cast<const RandomProjectionSketch&>(a), static_cast<const RandomProjectionSketch&>(b)));
    case SketcherKind::sampling:
      return std::make_unique<SamplingSketch>(
          merge(static_cast<const SamplingSketch&>(a), static_cast<const SamplingSketch&>(b)));
  }
  throw std::invalid_argument("merge: unknown sketcher kind");
}

std::unique_ptr<Sketcher> make_sketcher(SketcherKind kind, std::size_t d, std::size_t n,
                                        std::uint64_t seed) {
  switch (kind) {
    case SketcherKind::frequent_directions: return std::make_unique<FrequentDirections>(d, n);
    case SketcherKind::hashing: return std::make_unique<HashingSketch>(d, n, seed);
    case SketcherKind::random_projection: return std::make_unique<RandomProjectionSketch>(d, n, seed);
    case SketcherKind::sampling: return std::make_unique<SamplingSketch>(d, n, seed);
  }
  throw std::invalid_argument("unknown sketcher kind");
}

}  // namespace fdembed::sketch
