#include "testing.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace fdembed::testing {

BlockGraph sbm(const std::vector<std::size_t>& sizes, double p_in, double p_out, std::uint64_t seed) {
  BlockGraph out;
  for (std::size_t b = 0; b < sizes.size(); ++b)
    for (std::size_t i = 0; i < sizes[b]; ++i) out.block.push_back(static_cast<std::uint32_t>(b));
  const std::size_t n = out.block.size();
  std::vector<std::size_t> start(sizes.size() + 1, 0);
  for (std::size_t b = 0; b < sizes.size(); ++b) start[b + 1] = start[b] + sizes[b];

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<graph::Edge> edges;
  std::vector<std::size_t> deg(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = out.block[u] == out.block[v] ? p_in : p_out;
      if (unif(rng) < p) {
        edges.emplace_back(static_cast<graph::NodeId>(u), static_cast<graph::NodeId>(v));
        ++deg[u];
        ++deg[v];
      }
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (deg[u] > 0) continue;
    const std::size_t b = out.block[u];
    if (sizes[b] < 2) continue;
    std::uniform_int_distribution<std::size_t> pick(start[b], start[b + 1] - 1);
    std::size_t v = u;
    while (v == u) v = pick(rng);
    edges.emplace_back(static_cast<graph::NodeId>(u), static_cast<graph::NodeId>(v));
    ++deg[u];
    ++deg[v];
  }
  out.graph = graph::Graph::from_edges(n, edges, true);
  return out;
}

graph::Graph random_graph(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<graph::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    edges.emplace_back(static_cast<graph::NodeId>(i), static_cast<graph::NodeId>((i + 1) % n));
  for (std::size_t i = 0; i < m; ++i) {
    const auto u = static_cast<graph::NodeId>(pick(rng));
    const auto v = static_cast<graph::NodeId>(pick(rng));
    if (u != v) edges.emplace_back(u, v);
  }
  return graph::Graph::from_edges(n, edges, true);
}

Matrix random_normal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  return m;
}

Matrix random_rotation(std::size_t k, std::uint64_t seed) {
  const Matrix g = random_normal(k, k, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Eigen::MatrixXd(qr.householderQ());
}

Vector jacobi_eigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return Eigen::Map<Vector>(ev.data(), n);
}

double symmetric_spectral_norm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double dense_covariance_error(const Matrix& m, const Matrix& w) {
  Eigen::MatrixXd diff = m.transpose() * m;
  if (w.rows() > 0) diff -= w.transpose() * w;
  return symmetric_spectral_norm(diff) / m.squaredNorm();
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto base = std::filesystem::temp_directory_path() /
              ("fdembed-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  path_ = base.string();
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

void write_graph(const std::string& path, const graph::Graph& g) {
  std::vector<std::uint64_t> ids(g.num_nodes());
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  std::ostringstream text;
  try {
    graph::write_edgelist(text, g, ids);
  } catch (const std::invalid_argument&) {
    // reload order differs from g; original ids still equal g's ids
    text.str("");
    for (graph::NodeId u = 0; u < g.num_nodes(); ++u)
      for (graph::NodeId v : g.neighbors(u))
        if (!g.undirected() || u <= v) text << u << ' ' << v << '\n';
  }
  write_file(path, text.str());
}

}  // namespace fdembed::testing
