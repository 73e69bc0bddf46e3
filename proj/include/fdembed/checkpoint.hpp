#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "fdembed/sketch.hpp"

namespace fdembed::sketch {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary little-endian layout:
//   "FDSK" | u32 version | u8 kind | u32 d | u64 n | u64 rows_seen | u32 fill
// then for fd:       sigma_hat (2d f64), W (2d x n f64, row-major)
// for baselines:     W (d x n f64), u64 seed_a, u64 seed_b, f64 total_sq_norm
// sampling appends:  keys (d f64), slot squared norms (d f64)
void write_checkpoint(std::ostream& out, const Sketcher& s);
std::unique_ptr<Sketcher> read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Sketcher& s);
std::unique_ptr<Sketcher> load_checkpoint(const std::string& path);

}  // namespace fdembed::sketch
