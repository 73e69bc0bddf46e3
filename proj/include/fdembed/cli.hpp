#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fdembed/embedding.hpp"
#include "fdembed/eval.hpp"
#include "fdembed/similarity.hpp"

namespace fdembed::cli {

enum class NodeOrder { random, natural };

struct RunConfig {
  std::size_t dim = 128;
  std::string sketcher = "fd";  // fd, hash, rp, sample, svd
  similarity::PprConfig ppr;    // ppr.seed is overwritten from `seed`
  NodeOrder order = NodeOrder::random;
  double checkpoint_every = 0.0;  // fraction of nodes; 0 disables snapshots
  std::uint64_t seed = 0;
  std::string out;
  bool directed = false;
  double exponent = 0.5;
  std::size_t workers = 1;
  std::size_t oracle_limit = 20000;
  bool resume = false;
  std::uint64_t stop_after = 0;  // stop once this many rows are in the sketch; 0 = all

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

// Processing order of the n nodes for a given configuration.
std::vector<graph::NodeId> node_order(std::size_t n, NodeOrder order, std::uint64_t seed);

struct EmbedResult {
  Embedding embedding;
  std::vector<std::string> snapshots;  // embedding snapshot paths, in order
  std::uint64_t resumed_from = 0;
};

// Streams similarity rows of the graph at `graph_path` through the configured
// sketcher. Writes cfg.out, cfg.out + ".idmap", and for sketchers also
// cfg.out + ".ckpt". Snapshots go to cfg.out + ".snap-<rows_seen>.emb".
// With cfg.resume an existing cfg.out + ".ckpt" is continued.
EmbedResult cmd_embed(const RunConfig& cfg, const std::string& graph_path, std::ostream& log);

// Writes merge(a, b) to out_path and reports the merged state on `log`.
void cmd_merge(const std::string& a_path, const std::string& b_path, const std::string& out_path,
               std::ostream& log);

// TSV "d ce pe_k" for every d in dims, on the dense log-PPR matrix.
void cmd_errors(const RunConfig& cfg, const std::string& graph_path,
                const std::vector<std::size_t>& dims, std::size_t k, std::ostream& out);

struct ClassifyOptions {
  double train_fraction = 0.5;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  eval::LogisticOptions logistic;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};
Summary summarize(const std::vector<double>& values);

// Prints "train_frac micro_f1 micro_sd macro_f1 macro_sd" (TSV with header).
void cmd_classify(const std::string& embedding_path, const std::string& labels_path,
                  const ClassifyOptions& options, std::ostream& out);

struct LinkPredOptions {
  eval::EdgeOp op = eval::EdgeOp::hadamard;
  double train_fraction = 0.5;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  std::string negative_pool;  // edge list whose non-edges are sampled; empty: positives
  std::string dump_negatives;
  eval::LogisticOptions logistic;
};

// Positives come from `edges_path` (original ids); prints "op accuracy
// accuracy_sd auc auc_sd" (TSV with header).
void cmd_linkpred(const std::string& embedding_path, const std::string& edges_path,
                  const LinkPredOptions& options, std::ostream& out);

// One line per requested node: "node idx:value ..." with entries above 1e-9,
// using original ids. An empty node list prints every node.
void cmd_ppr(const RunConfig& cfg, const std::string& graph_path,
             const std::vector<std::uint64_t>& nodes, std::ostream& out);

}  // namespace fdembed::cli
