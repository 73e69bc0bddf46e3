#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fdembed::graph {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Immutable compressed adjacency (CSR). Neighbor lists are sorted and free
// of duplicates; undirected graphs store every edge in both directions.
class Graph {
 public:
  Graph() : offsets_{0} {}

  // Builds from arcs over nodes [0, num_nodes). Duplicates collapse; with
  // `undirected` each edge is also stored reversed (self-loops once).
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                          bool undirected);

  std::size_t num_nodes() const noexcept { return offsets_.size() - 1; }
  // Undirected edges are counted once, directed arcs individually.
  std::size_t num_edges() const noexcept { return num_edges_; }
  std::size_t num_arcs() const noexcept { return targets_.size(); }
  bool undirected() const noexcept { return undirected_; }

  std::uint32_t degree(NodeId v) const noexcept {
    return static_cast<std::uint32_t>(offsets_[v + 1] - offsets_[v]);
  }

  std::span<const NodeId> neighbors(NodeId v) const noexcept {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }

  bool has_arc(NodeId u, NodeId v) const noexcept;

  std::span<const std::uint64_t> offsets() const noexcept { return offsets_; }
  std::span<const NodeId> targets() const noexcept { return targets_; }

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<NodeId> targets_;
  std::size_t num_edges_ = 0;
  bool undirected_ = true;
};

// A graph read from an edge list together with the original id of every
// internal node (internal ids are assigned in first-seen order).
struct LoadedGraph {
  Graph graph;
  std::vector<std::uint64_t> original_ids;
};

// Whitespace-separated "u v" pairs, one per line; '#' lines and blank lines
// are skipped. Throws ParseError (with line number) on malformed tokens and
// DataError on input without edges.
LoadedGraph load_edgelist(std::istream& in, bool undirected);
LoadedGraph load_edgelist_file(const std::string& path, bool undirected);

// Writes an edge list that load_edgelist turns back into the same Graph and
// id mapping. Every node must have at least one incident arc.
void write_edgelist(std::ostream& out, const Graph& g,
                    std::span<const std::uint64_t> original_ids);

// Sidecar mapping: "original_id internal_id" per line.
void write_id_map(std::ostream& out, std::span<const std::uint64_t> original_ids);

struct TransitionEntry {
  NodeId node;
  double probability;
};

// Row v of P = D^-1 A. Empty for nodes without out-arcs.
std::vector<TransitionEntry> transition_row(const Graph& g, NodeId v);

}  // namespace fdembed::graph
