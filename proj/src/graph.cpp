#include "fdembed/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "fdembed/error.hpp"

namespace fdembed::graph {

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                        bool undirected) {
  if (num_nodes >= std::numeric_limits<NodeId>::max()) {
    throw std::invalid_argument("graph too large for 32-bit node ids");
  }
  std::vector<Edge> arcs;
  arcs.reserve(undirected ? 2 * edges.size() : edges.size());
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw std::out_of_range("edge endpoint out of range");
    }
    arcs.emplace_back(u, v);
    if (undirected && u != v) arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  Graph g;
  g.undirected_ = undirected;
  g.offsets_.assign(num_nodes + 1, 0);
  g.targets_.reserve(arcs.size());
  for (const auto& [u, v] : arcs) {
    ++g.offsets_[u + 1];
    g.targets_.push_back(v);
    if (!undirected || u <= v) ++g.num_edges_;
  }
  for (std::size_t i = 0; i < num_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
  return g;
}

bool Graph::has_arc(NodeId u, NodeId v) const noexcept {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

namespace {

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::uint64_t parse_id(std::string_view token, std::size_t line) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("malformed node id '" + std::string(token) + "'", line);
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

LoadedGraph load_edgelist(std::istream& in, bool undirected) {
  LoadedGraph result;
  std::unordered_map<std::uint64_t, NodeId> index;
  std::vector<Edge> edges;
  auto intern = [&](std::uint64_t id) {
    auto [it, inserted] = index.try_emplace(id, static_cast<NodeId>(result.original_ids.size()));
    if (inserted) result.original_ids.push_back(id);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (is_blank(view)) continue;
    auto first = view.find_first_not_of(" \t");
    if (view[first] == '#') continue;
    auto tokens = split_ws(view);
    if (tokens.size() != 2) {
      throw ParseError("expected two node ids, got " + std::to_string(tokens.size()) + " tokens",
                       line_no);
    }
    const auto a = parse_id(tokens[0], line_no);
    const auto b = parse_id(tokens[1], line_no);
    const NodeId u = intern(a);
    const NodeId v = intern(b);
    edges.emplace_back(u, v);
  }
  if (edges.empty()) throw DataError("edge list contains no edges");
  result.graph = Graph::from_edges(result.original_ids.size(), edges, undirected);
  return result;
}

LoadedGraph load_edgelist_file(const std::string& path, bool undirected) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list '" + path + "'");
  return load_edgelist(in, undirected);
}

void write_edgelist(std::ostream& out, const Graph& g,
                    std::span<const std::uint64_t> original_ids) {
  const std::size_t n = g.num_nodes();
  if (original_ids.size() != n) throw std::invalid_argument("id map size does not match graph");

  // In-arcs are needed to introduce nodes of a directed graph.
  std::vector<std::vector<NodeId>> in_arcs;
  if (!g.undirected()) {
    in_arcs.resize(n);
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v : g.neighbors(u)) in_arcs[v].push_back(u);
  }

  auto key = [](NodeId u, NodeId v) { return (std::uint64_t{u} << 32) | v; };
  std::unordered_set<std::uint64_t> written;
  auto emit = [&](NodeId u, NodeId v) {
    out << original_ids[u] << ' ' << original_ids[v] << '\n';
    if (g.undirected()) {
      written.insert(key(std::min(u, v), std::max(u, v)));
    } else {
      written.insert(key(u, v));
    }
  };

  // Reloading assigns ids in first-seen order, so every node k is first
  // mentioned on a line whose other endpoint is already known (or is k+1,
  // printed after k).
  std::size_t seen = 0;
  while (seen < n) {
    const NodeId k = static_cast<NodeId>(seen);
    bool introduced = false;
    for (NodeId t : g.neighbors(k)) {
      if (t <= k) {
        g.undirected() ? emit(t, k) : emit(k, t);
        seen = k + 1;
        introduced = true;
        break;
      }
    }
    if (!introduced && !g.undirected()) {
      for (NodeId s : in_arcs[k]) {
        if (s < k) {
          emit(s, k);
          seen = k + 1;
          introduced = true;
          break;
        }
      }
    }
    if (!introduced && k + 1 < n && g.has_arc(k, k + 1)) {
      emit(k, k + 1);
      seen = k + 2;
      introduced = true;
    }
    if (!introduced) {
      throw std::invalid_argument("node " + std::to_string(original_ids[k]) +
                                  " cannot be introduced in first-seen order");
    }
  }

  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (g.undirected() && v < u) continue;
      if (written.contains(key(u, v))) continue;
      out << original_ids[u] << ' ' << original_ids[v] << '\n';
    }
  }
}

void write_id_map(std::ostream& out, std::span<const std::uint64_t> original_ids) {
  for (std::size_t i = 0; i < original_ids.size(); ++i) {
    out << original_ids[i] << ' ' << i << '\n';
  }
}

std::vector<TransitionEntry> transition_row(const Graph& g, NodeId v) {
  if (v >= g.num_nodes()) throw std::out_of_range("node id out of range");
  auto nb = g.neighbors(v);
  std::vector<TransitionEntry> row;
  row.reserve(nb.size());
  const double p = nb.empty() ? 0.0 : 1.0 / static_cast<double>(nb.size());
  for (NodeId t : nb) row.push_back({t, p});
  return row;
}

}  // namespace fdembed::graph
