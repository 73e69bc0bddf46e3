#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fdembed/graph.hpp"
#include "fdembed/linalg.hpp"

namespace fdembed::similarity {

enum class PprMethod { exact, monte_carlo };

struct PprConfig {
  double alpha = 0.85;  // restart probability
  PprMethod method = PprMethod::monte_carlo;
  double tol = 1e-8;  // L1 tolerance, exact mode
  std::size_t max_iters = 1000;
  std::size_t walks_per_node = 10000;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// One row of the log-PPR matrix; values are non-negative and finite.
struct SimilarityRow {
  graph::NodeId node = 0;
  std::vector<double> values;
};

// Fixed point of x = alpha e_v + (1 - alpha) P^T x by power iteration.
// Mass reaching a node without out-arcs teleports back to v. Throws
// ConvergenceError when `max_iters` is exhausted.
std::vector<double> ppr_exact(const graph::Graph& g, graph::NodeId v, const PprConfig& cfg);

// Terminal-node frequencies of `walks_per_node` geometric walks from v
// (stop with probability alpha before every step; a walk stuck at a node
// without out-arcs restarts at v). Deterministic in (seed, v).
std::vector<double> ppr_monte_carlo(const graph::Graph& g, graph::NodeId v,
                                    const PprConfig& cfg);

// Dispatches on cfg.method.
std::vector<double> ppr(const graph::Graph& g, graph::NodeId v, const PprConfig& cfg);

// values[i] = max(log(n p[i]), 0).
SimilarityRow log_transform(std::span<const double> p, std::size_t n, graph::NodeId node = 0);

// ppr followed by log_transform with n = g.num_nodes().
SimilarityRow similarity_row(const graph::Graph& g, graph::NodeId v, const PprConfig& cfg);

// Dense n x n log-PPR matrix, row v = similarity_row(g, v, cfg).values.
linalg::Matrix similarity_matrix(const graph::Graph& g, const PprConfig& cfg);

// Seed of the independent random stream for node v.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t v) noexcept;

}  // namespace fdembed::similarity
