#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fdembed/graph.hpp"
#include "fdembed/linalg.hpp"

namespace fdembed::eval {

using linalg::Matrix;
using linalg::Vector;

// labels[v] lists the dense label ids of node v (sorted, unique).
struct LabelSet {
  std::vector<std::vector<std::uint32_t>> labels;
  std::size_t label_count = 0;
  std::vector<std::uint64_t> label_names;  // original id of each dense label
};

// Lines "node_id label_id" with original node ids; repeated lines give
// multiple labels. Label ids are renumbered densely in increasing order.
// Nodes missing from `original_ids` are a DataError.
LabelSet read_labels(std::istream& in, std::span<const std::uint64_t> original_ids);
LabelSet load_labels(const std::string& path, std::span<const std::uint64_t> original_ids);

struct EvalSplit {
  std::vector<graph::NodeId> train_nodes;
  std::vector<graph::NodeId> test_nodes;
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
};

// Random split of the labeled nodes; both sides are non-empty.
EvalSplit make_split(const LabelSet& labels, double train_fraction, std::uint64_t seed);

struct LogisticOptions {
  double c = 1.0;  // weight of the summed log-loss against 0.5 ||w||^2
  double tol = 1e-10;
  std::size_t max_iters = 100;
};

// Binary L2-regularized logistic regression with an unpenalized intercept,
// solved by damped Newton steps.
struct LogisticModel {
  Vector w;
  double bias = 0.0;

  double decision(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return x.dot(w) + bias; }
};

// x holds one sample per row; y entries are +1 or -1.
LogisticModel train_logistic(const Matrix& x, std::span<const int> y,
                             const LogisticOptions& options = {});

struct ClassificationReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  // Labels with no positive training node; they are never predicted.
  std::vector<std::uint32_t> untrained_labels;
};

// One-vs-rest logistic regression on the train nodes; each test node with t
// true labels is assigned its t highest-scoring labels. node_vectors has one
// row per node.
ClassificationReport classify(const Matrix& node_vectors, const LabelSet& labels,
                              const EvalSplit& split, const LogisticOptions& options = {});

enum class EdgeOp { average, concat, hadamard, weighted_l1, weighted_l2 };

// average, concat, hadamard, l1, l2
EdgeOp parse_edge_op(std::string_view name);
std::string_view to_string(EdgeOp op) noexcept;

Vector edge_features(std::span<const double> a, std::span<const double> b, EdgeOp op);

struct LinkPredictionReport {
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t train_edges = 0;
  std::size_t test_edges = 0;
};

// Positives and negatives are shuffled separately and split by
// `train_fraction`; the classifier sees edge features of the train part and
// is scored on the rest.
LinkPredictionReport link_predict(const Matrix& node_vectors, std::span<const graph::Edge> positives,
                                  std::span<const graph::Edge> negatives, EdgeOp op,
                                  double train_fraction, std::uint64_t seed,
                                  const LogisticOptions& options = {});

// `count` distinct node pairs (u != v) that are not arcs of g, uniform over
// such pairs. For undirected graphs pairs are unordered.
std::vector<graph::Edge> sample_non_edges(const graph::Graph& g, std::size_t count,
                                          std::uint64_t seed);

// Area under the ROC curve by the rank-sum statistic; ties count one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace fdembed::eval
