#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdembed/linalg.hpp"

namespace fdembed {

// k x n matrix whose column j is the vector of node j.
struct Embedding {
  linalg::Matrix values;
  std::string sketcher;
  std::uint64_t rows_seen = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(values.cols()); }

  // n x k copy, one row per node.
  linalg::Matrix node_vectors() const { return values.transpose(); }
};

// Text format: header "n k", then one line per node "original_id v_1 ... v_k".
// Values use the shortest round-trip decimal representation.
void write_embedding(std::ostream& out, const Embedding& e,
                     std::span<const std::uint64_t> original_ids);
void save_embedding(const std::string& path, const Embedding& e,
                    std::span<const std::uint64_t> original_ids);

struct LoadedEmbedding {
  linalg::Matrix vectors;  // n x k, row order of the file
  std::vector<std::uint64_t> original_ids;
};

LoadedEmbedding read_embedding(std::istream& in);
LoadedEmbedding load_embedding(const std::string& path);

}  // namespace fdembed
