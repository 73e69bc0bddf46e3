#include "fdembed/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fdembed/error.hpp"

namespace fdembed::similarity {

void PprConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iters == 0) throw std::invalid_argument("max_iters must be at least 1");
  if (walks_per_node == 0) throw std::invalid_argument("walks_per_node must be at least 1");
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t v) noexcept {
  // splitmix64 finalizer over (seed, v)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (v + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> ppr_exact(const graph::Graph& g, graph::NodeId v, const PprConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  if (v >= n) throw std::out_of_range("source node out of range");

  std::vector<double> x(n, 0.0), next(n, 0.0);
  x[v] = 1.0;
  double residual = 0.0;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double dangling = 0.0;
    for (graph::NodeId u = 0; u < n; ++u) {
      if (x[u] == 0.0) continue;
      auto nb = g.neighbors(u);
      if (nb.empty()) {
        dangling += x[u];
        continue;
      }
      const double share = (1.0 - cfg.alpha) * x[u] / static_cast<double>(nb.size());
      for (graph::NodeId t : nb) next[t] += share;
    }
    next[v] += cfg.alpha + (1.0 - cfg.alpha) * dangling;

    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += std::abs(next[i] - x[i]);
    x.swap(next);
    if (residual <= cfg.tol) return x;
  }
  throw ConvergenceError("personalized PageRank did not converge", residual);
}

std::vector<double> ppr_monte_carlo(const graph::Graph& g, graph::NodeId v,
                                    const PprConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  if (v >= n) throw std::out_of_range("source node out of range");

  std::mt19937_64 rng(stream_seed(cfg.seed, v));
  std::bernoulli_distribution stop(cfg.alpha);
  std::vector<std::uint64_t> counts(n, 0);
  for (std::size_t w = 0; w < cfg.walks_per_node; ++w) {
    graph::NodeId cur = v;
    while (!stop(rng)) {
      auto nb = g.neighbors(cur);
      if (nb.empty()) {
        cur = v;
        continue;
      }
      std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
      cur = nb[pick(rng)];
    }
    ++counts[cur];
  }
  std::vector<double> p(n);
  const double inv = 1.0 / static_cast<double>(cfg.walks_per_node);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<double>(counts[i]) * inv;
  return p;
}

std::vector<double> ppr(const graph::Graph& g, graph::NodeId v, const PprConfig& cfg) {
  return cfg.method == PprMethod::exact ? ppr_exact(g, v, cfg) : ppr_monte_carlo(g, v, cfg);
}

SimilarityRow log_transform(std::span<const double> p, std::size_t n, graph::NodeId node) {
  SimilarityRow row;
  row.node = node;
  row.values.resize(p.size());
  const double scale = static_cast<double>(n);
  std::transform(p.begin(), p.end(), row.values.begin(), [scale](double pi) {
    if (!(pi > 0.0)) return 0.0;
    return std::max(std::log(scale * pi), 0.0);
  });
  return row;
}

SimilarityRow similarity_row(const graph::Graph& g, graph::NodeId v, const PprConfig& cfg) {
  auto p = ppr(g, v, cfg);
  return log_transform(p, g.num_nodes(), v);
}

linalg::Matrix similarity_matrix(const graph::Graph& g, const PprConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  linalg::Matrix m(n, n);
  for (graph::NodeId v = 0; v < g.num_nodes(); ++v) {
    auto row = similarity_row(g, v, cfg);
    m.row(v) = Eigen::Map<const Eigen::RowVectorXd>(row.values.data(), n);
  }
  return m;
}

}  // namespace fdembed::similarity
