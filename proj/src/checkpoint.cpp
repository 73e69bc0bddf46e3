#include "fdembed/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "fdembed/error.hpp"

namespace fdembed::sketch {
namespace {

using linalg::Matrix;
using linalg::Vector;

constexpr char kMagic[4] = {'F', 'D', 'S', 'K'};

template <typename T>
T byteswap_if_needed(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    v = byteswap_if_needed(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_doubles(const double* p, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
      for (std::size_t i = 0; i < count; ++i) put(p[i]);
    }
  }
  void put_matrix(const Matrix& m) { put_doubles(m.data(), static_cast<std::size_t>(m.size())); }
  void put_vector(const Vector& v) { put_doubles(v.data(), static_cast<std::size_t>(v.size())); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get() {
    T v;
    read(&v, sizeof(T));
    return byteswap_if_needed(v);
  }
  void get_doubles(double* p, std::size_t count) {
    read(p, count * sizeof(double));
    if constexpr (std::endian::native != std::endian::little) {
      for (std::size_t i = 0; i < count; ++i) p[i] = byteswap_if_needed(p[i]);
    }
  }
  Matrix get_matrix(std::size_t rows, std::size_t cols) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    get_doubles(m.data(), rows * cols);
    return m;
  }
  Vector get_vector(std::size_t size) {
    Vector v(static_cast<Eigen::Index>(size));
    get_doubles(v.data(), size);
    return v;
  }

 private:
  void read(void* p, std::size_t bytes) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in_.gcount()) != bytes) throw DataError("checkpoint is truncated");
  }

  std::istream& in_;
};

}  // namespace

void write_checkpoint(std::ostream& out, const Sketcher& s) {
  Writer w(out);
  out.write(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(s.kind()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.dim()));
  w.put<std::uint64_t>(s.num_cols());
  w.put<std::uint64_t>(s.rows_seen());

  switch (s.kind()) {
    case SketcherKind::frequent_directions: {
      const auto& fd = static_cast<const FrequentDirections&>(s);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(fd.fill()));
      w.put_vector(fd.sigma_hat());
      w.put_matrix(fd.buffer());
      break;
    }
    case SketcherKind::hashing: {
      const auto& h = static_cast<const HashingSketch&>(s);
      w.put<std::uint32_t>(0);
      w.put_matrix(h.buffer());
      w.put<std::uint64_t>(h.bucket_seed());
      w.put<std::uint64_t>(h.sign_seed());
      w.put<double>(h.total_sq_norm());
      break;
    }
    case SketcherKind::random_projection: {
      const auto& rp = static_cast<const RandomProjectionSketch&>(s);
      w.put<std::uint32_t>(0);
      w.put_matrix(rp.buffer());
      w.put<std::uint64_t>(rp.seed());
      w.put<std::uint64_t>(0);
      w.put<double>(rp.total_sq_norm());
      break;
    }
    case SketcherKind::sampling: {
      const auto& sm = static_cast<const SamplingSketch&>(s);
      w.put<std::uint32_t>(0);
      w.put_matrix(sm.buffer());
      w.put<std::uint64_t>(sm.seed());
      w.put<std::uint64_t>(0);
      w.put<double>(sm.total_sq_norm());
      w.put_vector(sm.keys());
      w.put_vector(sm.slot_sq_norms());
      break;
    }
  }
  if (!out) throw DataError("failed writing checkpoint");
}

std::unique_ptr<Sketcher> read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a sketch checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto kind_byte = r.get<std::uint8_t>();
  if (kind_byte > static_cast<std::uint8_t>(SketcherKind::sampling))
    throw DataError("unknown sketcher kind in checkpoint");
  const auto kind = static_cast<SketcherKind>(kind_byte);
  const std::size_t d = r.get<std::uint32_t>();
  const auto n64 = r.get<std::uint64_t>();
  const auto rows_seen = r.get<std::uint64_t>();
  const std::size_t fill = r.get<std::uint32_t>();
  if (d == 0 || n64 == 0) throw DataError("checkpoint has an empty shape");
  const std::uint64_t max_cells = std::uint64_t{1} << 40;
  if (n64 > max_cells / (2 * d)) throw DataError("checkpoint shape is implausibly large");
  const auto n = static_cast<std::size_t>(n64);

  switch (kind) {
    case SketcherKind::frequent_directions: {
      Vector sigma_hat = r.get_vector(2 * d);
      Matrix w = r.get_matrix(2 * d, n);
      return std::make_unique<FrequentDirections>(
          FrequentDirections::from_state(d, n, rows_seen, fill, std::move(sigma_hat), std::move(w)));
    }
    case SketcherKind::hashing: {
      Matrix w = r.get_matrix(d, n);
      const auto sa = r.get<std::uint64_t>();
      const auto sb = r.get<std::uint64_t>();
      const auto total = r.get<double>();
      return std::make_unique<HashingSketch>(
          HashingSketch::from_state(d, n, rows_seen, sa, sb, total, std::move(w)));
    }
    case SketcherKind::random_projection: {
      Matrix w = r.get_matrix(d, n);
      const auto sa = r.get<std::uint64_t>();
      r.get<std::uint64_t>();
      const auto total = r.get<double>();
      return std::make_unique<RandomProjectionSketch>(
          RandomProjectionSketch::from_state(d, n, rows_seen, sa, total, std::move(w)));
    }
    case SketcherKind::sampling: {
      Matrix w = r.get_matrix(d, n);
      const auto sa = r.get<std::uint64_t>();
      r.get<std::uint64_t>();
      const auto total = r.get<double>();
      Vector keys = r.get_vector(d);
      Vector norms = r.get_vector(d);
      return std::make_unique<SamplingSketch>(SamplingSketch::from_state(
          d, n, rows_seen, sa, total, std::move(w), std::move(keys), std::move(norms)));
    }
  }
  throw DataError("unknown sketcher kind in checkpoint");
}

void save_checkpoint(const std::string& path, const Sketcher& s) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    write_checkpoint(out, s);
    out.flush();
    if (!out) throw DataError("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp + ": " + ec.message());
}

std::unique_ptr<Sketcher> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace fdembed::sketch
