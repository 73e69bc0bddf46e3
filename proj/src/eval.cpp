#include "fdembed/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "fdembed/error.hpp"

namespace fdembed::eval {
namespace {

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

std::uint64_t parse_u64(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("malformed id '" + std::string(tok) + "'", line);
  return v;
}

// log(1 + exp(-m)) without overflow
double log_loss(double m) { return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

// 1 / (1 + exp(m))
double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

std::size_t split_point(std::size_t size, double fraction) {
  auto t = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(size)));
  return std::clamp<std::size_t>(t, 1, size - 1);
}

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
}

}  // namespace

LabelSet read_labels(std::istream& in, std::span<const std::uint64_t> original_ids) {
  std::unordered_map<std::uint64_t, graph::NodeId> index;
  index.reserve(original_ids.size());
  for (std::size_t i = 0; i < original_ids.size(); ++i)
    index.emplace(original_ids[i], static_cast<graph::NodeId>(i));

  std::vector<std::pair<graph::NodeId, std::uint64_t>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 2) throw ParseError("expected 'node_id label_id'", lineno);
    const std::uint64_t node = parse_u64(tok[0], lineno);
    const std::uint64_t label = parse_u64(tok[1], lineno);
    auto it = index.find(node);
    if (it == index.end())
      throw ParseError("label for unknown node " + std::to_string(node), lineno);
    pairs.emplace_back(it->second, label);
  }
  if (pairs.empty()) throw DataError("label file has no entries");

  LabelSet out;
  std::map<std::uint64_t, std::uint32_t> dense;
  for (const auto& p : pairs) dense.emplace(p.second, 0);
  for (auto& [name, id] : dense) {
    id = static_cast<std::uint32_t>(out.label_names.size());
    out.label_names.push_back(name);
  }
  out.label_count = out.label_names.size();
  out.labels.assign(original_ids.size(), {});
  for (const auto& [node, label] : pairs) out.labels[node].push_back(dense[label]);
  for (auto& l : out.labels) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return out;
}

LabelSet load_labels(const std::string& path, std::span<const std::uint64_t> original_ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_labels(in, original_ids);
}

EvalSplit make_split(const LabelSet& labels, double train_fraction, std::uint64_t seed) {
  check_fraction(train_fraction);
  std::vector<graph::NodeId> nodes;
  for (std::size_t v = 0; v < labels.labels.size(); ++v)
    if (!labels.labels[v].empty()) nodes.push_back(static_cast<graph::NodeId>(v));
  if (nodes.size() < 2) throw DataError("need at least two labeled nodes to split");
  std::mt19937_64 rng(seed);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const std::size_t t = split_point(nodes.size(), train_fraction);
  EvalSplit s;
  s.train_nodes.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(t));
  s.test_nodes.assign(nodes.begin() + static_cast<std::ptrdiff_t>(t), nodes.end());
  std::sort(s.train_nodes.begin(), s.train_nodes.end());
  std::sort(s.test_nodes.begin(), s.test_nodes.end());
  s.train_fraction = train_fraction;
  s.seed = seed;
  return s;
}

LogisticModel train_logistic(const Matrix& x, std::span<const int> y, const LogisticOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw std::invalid_argument("label count mismatch");
  if (n == 0) throw std::invalid_argument("no training samples");
  if (!(options.c > 0.0)) throw std::invalid_argument("regularization weight must be positive");

  LogisticModel model;
  model.w = Vector::Zero(k);
  const bool all_pos = std::all_of(y.begin(), y.end(), [](int v) { return v > 0; });
  const bool all_neg = std::all_of(y.begin(), y.end(), [](int v) { return v <= 0; });
  if (all_pos || all_neg) {
    model.bias = all_pos ? 30.0 : -30.0;
    return model;
  }

  const double c = options.c;
  Vector yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)] > 0 ? 1.0 : -1.0;

  auto objective = [&](const Vector& w, double b, Vector& margins) {
    margins = (x * w).array() + b;
    margins.array() *= yv.array();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += log_loss(margins[i]);
    return 0.5 * w.squaredNorm() + c * loss;
  };

  Vector w = model.w;
  double b = 0.0;
  Vector margins;
  double f = objective(w, b, margins);
  double g0 = -1.0;
  Vector s(n), dvec(n), grad(k + 1), step(k + 1);
  Eigen::MatrixXd h(k + 1, k + 1);

  for (std::size_t it = 0; it < options.max_iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      s[i] = sigmoid_neg(margins[i]);
      dvec[i] = s[i] * (1.0 - s[i]);
    }
    const Vector ys = yv.cwiseProduct(s);
    grad.head(k) = w - c * (x.transpose() * ys);
    grad[k] = -c * ys.sum();
    const double gnorm = grad.norm();
    if (g0 < 0.0) g0 = std::max(gnorm, 1.0);
    if (gnorm <= options.tol * g0) break;

    const Matrix xd = x.array().colwise() * dvec.array().sqrt();
    h.topLeftCorner(k, k).noalias() = c * (xd.transpose() * xd);
    h.topLeftCorner(k, k).diagonal().array() += 1.0;
    const Vector xtd = c * (x.transpose() * dvec);
    h.block(0, k, k, 1) = xtd;
    h.block(k, 0, 1, k) = xtd.transpose();
    h(k, k) = c * dvec.sum() + 1e-12;

    step = h.ldlt().solve(-grad);
    const double slope = grad.dot(step);
    if (!(slope < 0.0)) break;

    double t = 1.0;
    Vector w_new;
    double b_new = 0.0, f_new = 0.0;
    Vector m_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      w_new = w + t * step.head(k);
      b_new = b + t * step[k];
      f_new = objective(w_new, b_new, m_new);
      if (f_new <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    w = std::move(w_new);
    b = b_new;
    margins = std::move(m_new);
    const double df = f - f_new;
    f = f_new;
    if (df <= 1e-16 * std::max(1.0, std::abs(f)) && gnorm <= 1e-6 * g0) break;
  }
  model.w = std::move(w);
  model.bias = b;
  return model;
}

ClassificationReport classify(const Matrix& node_vectors, const LabelSet& labels,
                              const EvalSplit& split, const LogisticOptions& options) {
  if (split.train_nodes.empty() || split.test_nodes.empty())
    throw std::invalid_argument("split has an empty side");
  const auto rows = static_cast<std::size_t>(node_vectors.rows());
  for (auto v : split.train_nodes)
    if (v >= rows || v >= labels.labels.size()) throw DataError("split node outside the embedding");
  for (auto v : split.test_nodes)
    if (v >= rows || v >= labels.labels.size()) throw DataError("split node outside the embedding");

  const std::size_t nl = labels.label_count;
  const auto k = node_vectors.cols();
  Matrix xtrain(static_cast<Eigen::Index>(split.train_nodes.size()), k);
  for (std::size_t i = 0; i < split.train_nodes.size(); ++i)
    xtrain.row(static_cast<Eigen::Index>(i)) = node_vectors.row(split.train_nodes[i]);
  Matrix xtest(static_cast<Eigen::Index>(split.test_nodes.size()), k);
  for (std::size_t i = 0; i < split.test_nodes.size(); ++i)
    xtest.row(static_cast<Eigen::Index>(i)) = node_vectors.row(split.test_nodes[i]);

  ClassificationReport report;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Matrix scores(xtest.rows(), static_cast<Eigen::Index>(nl));
  std::vector<int> y(split.train_nodes.size());
  for (std::size_t l = 0; l < nl; ++l) {
    bool any = false;
    for (std::size_t i = 0; i < split.train_nodes.size(); ++i) {
      const auto& ls = labels.labels[split.train_nodes[i]];
      y[i] = std::binary_search(ls.begin(), ls.end(), static_cast<std::uint32_t>(l)) ? 1 : -1;
      any = any || y[i] > 0;
    }
    const auto li = static_cast<Eigen::Index>(l);
    if (!any) {
      report.untrained_labels.push_back(static_cast<std::uint32_t>(l));
      scores.col(li).setConstant(neg_inf);
      continue;
    }
    const auto model = train_logistic(xtrain, y, options);
    scores.col(li) = xtest * model.w;
    scores.col(li).array() += model.bias;
  }

  std::vector<std::size_t> tp(nl, 0), fp(nl, 0), fn(nl, 0);
  std::vector<std::uint32_t> order(nl);
  for (std::size_t i = 0; i < split.test_nodes.size(); ++i) {
    const auto& truth = labels.labels[split.test_nodes[i]];
    const auto ii = static_cast<Eigen::Index>(i);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return scores(ii, a) > scores(ii, b);
    });
    std::vector<std::uint32_t> predicted;
    for (std::size_t j = 0; j < order.size() && predicted.size() < truth.size(); ++j) {
      if (scores(ii, order[j]) == neg_inf) break;
      predicted.push_back(order[j]);
    }
    for (auto l : predicted) {
      if (std::binary_search(truth.begin(), truth.end(), l))
        ++tp[l];
      else
        ++fp[l];
    }
    for (auto l : truth)
      if (std::find(predicted.begin(), predicted.end(), l) == predicted.end()) ++fn[l];
  }

  std::size_t tps = 0, fps = 0, fns = 0;
  double macro = 0.0;
  std::size_t counted = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    tps += tp[l];
    fps += fp[l];
    fns += fn[l];
    const std::size_t denom = 2 * tp[l] + fp[l] + fn[l];
    if (denom == 0) continue;
    macro += 2.0 * static_cast<double>(tp[l]) / static_cast<double>(denom);
    ++counted;
  }
  const std::size_t denom = 2 * tps + fps + fns;
  report.micro_f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tps) / static_cast<double>(denom);
  report.macro_f1 = counted == 0 ? 0.0 : macro / static_cast<double>(counted);
  return report;
}

EdgeOp parse_edge_op(std::string_view name) {
  if (name == "average") return EdgeOp::average;
  if (name == "concat") return EdgeOp::concat;
  if (name == "hadamard") return EdgeOp::hadamard;
  if (name == "l1") return EdgeOp::weighted_l1;
  if (name == "l2") return EdgeOp::weighted_l2;
  throw std::invalid_argument("unknown edge operator '" + std::string(name) + "'");
}

std::string_view to_string(EdgeOp op) noexcept {
  switch (op) {
    case EdgeOp::average: return "average";
    case EdgeOp::concat: return "concat";
    case EdgeOp::hadamard: return "hadamard";
    case EdgeOp::weighted_l1: return "l1";
    case EdgeOp::weighted_l2: return "l2";
  }
  return "unknown";
}

Vector edge_features(std::span<const double> a, std::span<const double> b, EdgeOp op) {
  if (a.size() != b.size()) throw std::invalid_argument("edge endpoints differ in dimension");
  const auto k = static_cast<Eigen::Index>(a.size());
  Eigen::Map<const Vector> va(a.data(), k), vb(b.data(), k);
  switch (op) {
    case EdgeOp::average: return (va + vb) / 2.0;
    case EdgeOp::concat: {
      Vector out(2 * k);
      out << va, vb;
      return out;
    }
    case EdgeOp::hadamard: return va.cwiseProduct(vb);
    case EdgeOp::weighted_l1: return (va - vb).cwiseAbs();
    case EdgeOp::weighted_l2: return (va - vb).array().square().matrix();
  }
  throw std::invalid_argument("unknown edge operator");
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("score and label counts differ");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]] > 0) {
        rank_sum += avg_rank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("AUC needs both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

LinkPredictionReport link_predict(const Matrix& node_vectors, std::span<const graph::Edge> positives,
                                  std::span<const graph::Edge> negatives, EdgeOp op,
                                  double train_fraction, std::uint64_t seed,
                                  const LogisticOptions& options) {
  check_fraction(train_fraction);
  if (positives.size() < 2 || negatives.size() < 2)
    throw DataError("link prediction needs at least two positive and two negative pairs");
  const auto rows = static_cast<std::size_t>(node_vectors.rows());
  auto check = [&](std::span<const graph::Edge> es) {
    for (const auto& [u, v] : es)
      if (u >= rows || v >= rows) throw DataError("edge endpoint outside the embedding");
  };
  check(positives);
  check(negatives);

  std::mt19937_64 rng(seed);
  std::vector<graph::Edge> pos(positives.begin(), positives.end());
  std::vector<graph::Edge> neg(negatives.begin(), negatives.end());
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const std::size_t tp = split_point(pos.size(), train_fraction);
  const std::size_t tn = split_point(neg.size(), train_fraction);

  const auto k = static_cast<std::size_t>(node_vectors.cols());
  const Eigen::Index width = op == EdgeOp::concat ? static_cast<Eigen::Index>(2 * k)
                                                  : static_cast<Eigen::Index>(k);
  auto feature = [&](const graph::Edge& e) {
    const double* pu = node_vectors.data() + static_cast<std::size_t>(e.first) * k;
    const double* pv = node_vectors.data() + static_cast<std::size_t>(e.second) * k;
    return edge_features({pu, k}, {pv, k}, op);
  };

  const std::size_t ntrain = tp + tn;
  const std::size_t ntest = (pos.size() - tp) + (neg.size() - tn);
  Matrix xtrain(static_cast<Eigen::Index>(ntrain), width);
  std::vector<int> ytrain(ntrain);
  Matrix xtest(static_cast<Eigen::Index>(ntest), width);
  std::vector<int> ytest(ntest);
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (i < tp) {
      xtrain.row(static_cast<Eigen::Index>(a)) = feature(pos[i]).transpose();
      ytrain[a++] = 1;
    } else {
      xtest.row(static_cast<Eigen::Index>(b)) = feature(pos[i]).transpose();
      ytest[b++] = 1;
    }
  }
  for (std::size_t i = 0; i < neg.size(); ++i) {
    if (i < tn) {
      xtrain.row(static_cast<Eigen::Index>(a)) = feature(neg[i]).transpose();
      ytrain[a++] = -1;
    } else {
      xtest.row(static_cast<Eigen::Index>(b)) = feature(neg[i]).transpose();
      ytest[b++] = -1;
    }
  }

  const auto model = train_logistic(xtrain, ytrain, options);
  std::vector<double> scores(ntest);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ntest; ++i) {
    scores[i] = model.decision(xtest.row(static_cast<Eigen::Index>(i)));
    const int predicted = scores[i] > 0.0 ? 1 : -1;
    if (predicted == ytest[i]) ++correct;
  }
  LinkPredictionReport report;
  report.accuracy = static_cast<double>(correct) / static_cast<double>(ntest);
  report.auc = roc_auc(scores, ytest);
  report.train_edges = ntrain;
  report.test_edges = ntest;
  return report;
}

std::vector<graph::Edge> sample_non_edges(const graph::Graph& g, std::size_t count, std::uint64_t seed) {
  const std::uint64_t n = g.num_nodes();
  if (n < 2) throw DataError("graph too small for negative sampling");
  std::uint64_t self_loops = 0;
  for (graph::NodeId v = 0; v < n; ++v)
    if (g.has_arc(v, v)) ++self_loops;
  const std::uint64_t arcs = g.num_arcs() - self_loops;
  const bool und = g.undirected();
  const std::uint64_t pairs = und ? n * (n - 1) / 2 : n * (n - 1);
  const std::uint64_t taken = und ? arcs / 2 : arcs;
  const std::uint64_t available = pairs - taken;
  if (count > available)
    throw DataError("requested " + std::to_string(count) + " non-edges, only " +
                    std::to_string(available) + " exist");

  std::mt19937_64 rng(seed);
  std::vector<graph::Edge> out;
  out.reserve(count);
  if (count * 2 > available) {
    // dense regime: enumerate and sample without replacement
    std::vector<graph::Edge> all;
    all.reserve(available);
    for (graph::NodeId u = 0; u < n; ++u)
      for (graph::NodeId v = und ? u + 1 : 0; v < n; ++v)
        if (u != v && !g.has_arc(u, v)) all.emplace_back(u, v);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(count);
    return all;
  }
  std::unordered_set<std::uint64_t> seen;
  std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
  while (out.size() < count) {
    auto u = static_cast<graph::NodeId>(pick(rng));
    auto v = static_cast<graph::NodeId>(pick(rng));
    if (u == v) continue;
    if (und && u > v) std::swap(u, v);
    if (g.has_arc(u, v)) continue;
    if (!seen.insert((static_cast<std::uint64_t>(u) << 32) | v).second) continue;
    out.emplace_back(u, v);
  }
  return out;
}

}  // namespace fdembed::eval
