#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "testing.hpp"

using namespace fdembed;
using namespace fdembed::eval;

namespace {

// Two clusters of `per` nodes at +e1 and -e1 (small jitter), label = cluster.
struct Toy {
  Matrix vectors;
  LabelSet labels;
};

Toy two_clusters(std::size_t per, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.05);
  Toy t;
  t.vectors.resize(static_cast<Eigen::Index>(2 * per), 2);
  t.labels.label_count = 2;
  t.labels.label_names = {0, 1};
  for (std::size_t i = 0; i < 2 * per; ++i) {
    const bool second = i >= per;
    t.vectors(static_cast<Eigen::Index>(i), 0) = (second ? -1.0 : 1.0) + jitter(rng);
    t.vectors(static_cast<Eigen::Index>(i), 1) = jitter(rng);
    t.labels.labels.push_back({second ? 1u : 0u});
  }
  return t;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST(EdgeFeatures, OperatorTable) {
  std::vector<double> a{1, 2}, b{3, 4};
  auto avg = edge_features(a, b, EdgeOp::average);
  EXPECT_EQ(avg, (Vector(2) << 2, 3).finished());
  auto had = edge_features(a, b, EdgeOp::hadamard);
  EXPECT_EQ(had, (Vector(2) << 3, 8).finished());
  auto l1 = edge_features(a, b, EdgeOp::weighted_l1);
  EXPECT_EQ(l1, (Vector(2) << 2, 2).finished());
  auto l2 = edge_features(a, b, EdgeOp::weighted_l2);
  EXPECT_EQ(l2, (Vector(2) << 4, 4).finished());
  auto cat = edge_features(a, b, EdgeOp::concat);
  EXPECT_EQ(cat, (Vector(4) << 1, 2, 3, 4).finished());
}

TEST(EdgeFeatures, SymmetryProperties) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(7), b(7);
    for (auto& x : a) x = normal(rng);
    for (auto& x : b) x = normal(rng);
    EXPECT_TRUE(edge_features(a, a, EdgeOp::weighted_l1).isZero(0.0));
    EXPECT_TRUE(edge_features(a, a, EdgeOp::weighted_l2).isZero(0.0));
    for (auto op : {EdgeOp::average, EdgeOp::hadamard, EdgeOp::weighted_l1, EdgeOp::weighted_l2})
      EXPECT_EQ(edge_features(a, b, op), edge_features(b, a, op));
  }
}

TEST(EdgeFeatures, NamesAndErrors) {
  for (auto op : {EdgeOp::average, EdgeOp::concat, EdgeOp::hadamard, EdgeOp::weighted_l1,
                  EdgeOp::weighted_l2})
    EXPECT_EQ(parse_edge_op(to_string(op)), op);
  EXPECT_EQ(parse_edge_op("l1"), EdgeOp::weighted_l1);
  EXPECT_THROW(parse_edge_op("cosine"), std::invalid_argument);
  std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(edge_features(a, b, EdgeOp::average), std::invalid_argument);
}

TEST(Logistic, SatisfiesOptimalityConditions) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix x = fdembed::testing::random_normal(80, 5, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise;
    std::vector<int> y(80);
    for (int i = 0; i < 80; ++i) y[i] = x(i, 0) + 0.5 * x(i, 1) + noise(rng) > 0.2 ? 1 : -1;
    LogisticOptions opt;
    opt.c = 0.7;
    auto model = train_logistic(x, y, opt);
    // gradient of 0.5 ||w||^2 + C sum log(1 + exp(-y f))
    Vector grad_w = model.w;
    double grad_b = 0.0;
    for (int i = 0; i < 80; ++i) {
      const double f = model.decision(x.row(i));
      const double g = -y[i] * sigmoid(-y[i] * f);
      grad_w += opt.c * g * x.row(i).transpose();
      grad_b += opt.c * g;
    }
    EXPECT_LE(grad_w.cwiseAbs().maxCoeff(), 1e-7) << "seed " << seed;
    EXPECT_LE(std::abs(grad_b), 1e-7) << "seed " << seed;
  }
}

TEST(Logistic, SingleClassPredictsThatClass) {
  Matrix x = fdembed::testing::random_normal(5, 3, 1);
  std::vector<int> pos(5, 1), neg(5, -1);
  auto mp = train_logistic(x, pos);
  auto mn = train_logistic(x, neg);
  for (int i = 0; i < 5; ++i) {
    EXPECT_GT(mp.decision(x.row(i)), 0.0);
    EXPECT_LT(mn.decision(x.row(i)), 0.0);
  }
}

TEST(Logistic, InvalidInput) {
  Matrix x = fdembed::testing::random_normal(3, 2, 1);
  std::vector<int> y{1, -1};
  EXPECT_THROW(train_logistic(x, y), std::invalid_argument);
  std::vector<int> ok{1, -1, 1};
  LogisticOptions bad;
  bad.c = 0.0;
  EXPECT_THROW(train_logistic(x, ok, bad), std::invalid_argument);
}

TEST(Classify, SeparableClustersArePerfect) {
  auto toy = two_clusters(20, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto split = make_split(toy.labels, 0.5, seed);
    auto r = classify(toy.vectors, toy.labels, split);
    EXPECT_DOUBLE_EQ(r.micro_f1, 1.0);
    EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
  }
}

TEST(Classify, RandomLabelsAtChance) {
  const std::size_t n = 400;
  Matrix vectors = fdembed::testing::random_normal(n, 8, 77);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, 3);
    LabelSet labels;
    labels.label_count = 4;
    labels.label_names = {0, 1, 2, 3};
    for (std::size_t i = 0; i < n; ++i) labels.labels.push_back({pick(rng)});
    auto r = classify(vectors, labels, make_split(labels, 0.5, seed));
    EXPECT_GE(r.micro_f1, 0.0);
    EXPECT_LE(r.micro_f1, 1.0);
    total += r.micro_f1;
  }
  EXPECT_NEAR(total / 20.0, 0.25, 0.1);
}

TEST(Classify, MicroF1EqualsAccuracyForSingleLabels) {
  const std::size_t n = 120;
  Matrix vectors = fdembed::testing::random_normal(n, 4, 5);
  LabelSet labels;
  labels.label_count = 3;
  labels.label_names = {0, 1, 2};
  for (std::size_t i = 0; i < n; ++i) {
    const double s = vectors(static_cast<Eigen::Index>(i), 0);
    labels.labels.push_back({s < -0.4 ? 0u : (s < 0.4 ? 1u : 2u)});
  }
  auto split = make_split(labels, 0.5, 3);
  auto r = classify(vectors, labels, split);

  // accuracy by an independent argmax over one-vs-rest models
  std::vector<LogisticModel> models;
  for (std::uint32_t l = 0; l < 3; ++l) {
    Matrix x(static_cast<Eigen::Index>(split.train_nodes.size()), 4);
    std::vector<int> y;
    for (std::size_t i = 0; i < split.train_nodes.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = vectors.row(split.train_nodes[i]);
      y.push_back(labels.labels[split.train_nodes[i]][0] == l ? 1 : -1);
    }
    models.push_back(train_logistic(x, y));
  }
  std::size_t correct = 0;
  for (auto v : split.test_nodes) {
    std::uint32_t best = 0;
    for (std::uint32_t l = 1; l < 3; ++l)
      if (models[l].decision(vectors.row(v)) > models[best].decision(vectors.row(v))) best = l;
    correct += best == labels.labels[v][0];
  }
  EXPECT_NEAR(r.micro_f1, static_cast<double>(correct) / split.test_nodes.size(), 1e-12);
  EXPECT_GE(r.macro_f1, 0.0);
  EXPECT_LE(r.macro_f1, 1.0);
}

TEST(Classify, InvariantToRotation) {
  const std::size_t n = 150;
  Matrix vectors = fdembed::testing::random_normal(n, 6, 9);
  LabelSet labels;
  labels.label_count = 3;
  labels.label_names = {0, 1, 2};
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.3);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> l;
    if (vectors(static_cast<Eigen::Index>(i), 0) > 0) l.push_back(0);
    if (vectors(static_cast<Eigen::Index>(i), 1) + vectors(static_cast<Eigen::Index>(i), 2) > 0.5) l.push_back(1);
    if (coin(rng) || l.empty()) l.push_back(2);
    labels.labels.push_back(l);
  }
  Matrix rotated = vectors * fdembed::testing::random_rotation(6, 10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto split = make_split(labels, 0.5, seed);
    auto a = classify(vectors, labels, split);
    auto b = classify(rotated, labels, split);
    EXPECT_NEAR(a.micro_f1, b.micro_f1, 1e-6);
    EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-6);
  }
  // the decision values themselves agree
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) y.push_back(labels.labels[i][0] == 0 ? 1 : -1);
  auto ma = train_logistic(vectors, y);
  auto mb = train_logistic(rotated, y);
  for (std::size_t i = 0; i < n; ++i)
    EXPECT_NEAR(ma.decision(vectors.row(static_cast<Eigen::Index>(i))),
                mb.decision(rotated.row(static_cast<Eigen::Index>(i))), 1e-6);
}

TEST(Classify, UntrainedLabelIsReportedAndNeverPredicted) {
  auto toy = two_clusters(10, 2);
  toy.labels.label_count = 3;
  toy.labels.label_names = {0, 1, 2};
  EvalSplit split;
  for (graph::NodeId v = 0; v < 20; ++v) (v % 2 ? split.test_nodes : split.train_nodes).push_back(v);
  // label 2 only on a test node
  toy.labels.labels[1] = {2};
  auto r = classify(toy.vectors, toy.labels, split);
  ASSERT_EQ(r.untrained_labels, (std::vector<std::uint32_t>{2}));
  // node 1 is predicted as some trained label, so it costs one error
  EXPECT_LT(r.micro_f1, 1.0);
  EXPECT_GT(r.micro_f1, 0.85);
}

TEST(Split, DisjointCoveringAndDeterministic) {
  auto toy = two_clusters(25, 3);
  toy.labels.labels[4].clear();  // unlabeled node is excluded
  auto s = make_split(toy.labels, 0.3, 11);
  std::set<graph::NodeId> train(s.train_nodes.begin(), s.train_nodes.end());
  std::set<graph::NodeId> test(s.test_nodes.begin(), s.test_nodes.end());
  EXPECT_FALSE(train.empty());
  EXPECT_FALSE(test.empty());
  for (auto v : train) EXPECT_EQ(test.count(v), 0u);
  EXPECT_EQ(train.size() + test.size(), 49u);
  EXPECT_EQ(train.count(4) + test.count(4), 0u);
  EXPECT_EQ(train.size(), 15u);  // floor-ish of 0.3 * 49
  auto again = make_split(toy.labels, 0.3, 11);
  EXPECT_EQ(again.train_nodes, s.train_nodes);
  EXPECT_THROW(make_split(toy.labels, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_split(toy.labels, 1.0, 1), std::invalid_argument);
}

TEST(Labels, ParseRenumberAndMultiLabel) {
  std::vector<std::uint64_t> ids{100, 200, 300};
  std::istringstream in("# comment\n100 7\n200 3\n100 3\n100 7\n");
  auto ls = read_labels(in, ids);
  EXPECT_EQ(ls.label_count, 2u);
  EXPECT_EQ(ls.label_names, (std::vector<std::uint64_t>{3, 7}));
  EXPECT_EQ(ls.labels[0], (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(ls.labels[1], (std::vector<std::uint32_t>{0}));
  EXPECT_TRUE(ls.labels[2].empty());
}

TEST(Labels, Errors) {
  std::vector<std::uint64_t> ids{1, 2};
  std::istringstream unknown("1 0\n5 0\n");
  try {
    read_labels(unknown, ids);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream malformed("1 x\n");
  EXPECT_THROW(read_labels(malformed, ids), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_labels(empty, ids), DataError);
}

TEST(RocAuc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> score(0, 9);  // many ties
  std::bernoulli_distribution coin(0.4);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      s.push_back(score(rng));
      y.push_back(coin(rng) ? 1 : -1);
    }
    y[0] = 1;
    y[1] = -1;
    double wins = 0.0, pairs = 0.0;
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 40; ++j)
        if (y[i] == 1 && y[j] == -1) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    EXPECT_NEAR(roc_auc(s, y), wins / pairs, 1e-12);
  }
  std::vector<double> s{1, 2};
  std::vector<int> y{1, 1};
  EXPECT_THROW(roc_auc(s, y), std::invalid_argument);
}

TEST(LinkPredict, SeparableClusters) {
  // 4 clusters on orthogonal axes; positives inside clusters, negatives across
  const std::size_t per = 15, k = 4;
  Matrix vectors = Matrix::Zero(per * k, k);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (std::size_t i = 0; i < per * k; ++i) {
    vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i / per)) = 1.0;
    for (std::size_t j = 0; j < k; ++j) vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += jitter(rng);
  }
  std::vector<graph::Edge> pos, neg;
  std::uniform_int_distribution<std::size_t> pick(0, per * k - 1);
  while (pos.size() < 200 || neg.size() < 200) {
    auto u = static_cast<graph::NodeId>(pick(rng));
    auto v = static_cast<graph::NodeId>(pick(rng));
    if (u == v) continue;
    if (u / per == v / per) {
      if (pos.size() < 200) pos.emplace_back(u, v);
    } else if (neg.size() < 200) {
      neg.emplace_back(u, v);
    }
  }
  auto r = link_predict(vectors, pos, neg, EdgeOp::hadamard, 0.5, 1);
  EXPECT_GE(r.accuracy, 0.95);
  EXPECT_GE(r.auc, 0.95);
  EXPECT_EQ(r.train_edges, 200u);
  EXPECT_EQ(r.test_edges, 200u);
}

TEST(LinkPredict, UninformativeEmbeddingNearHalfAuc) {
  Matrix vectors = Matrix::Ones(50, 3);
  auto g = fdembed::testing::random_graph(50, 100, 7);
  std::vector<graph::Edge> pos;
  for (graph::NodeId u = 0; u < 50; ++u)
    for (auto v : g.neighbors(u))
      if (u < v) pos.push_back({u, v});
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto neg = sample_non_edges(g, pos.size(), seed);
    total += link_predict(vectors, pos, neg, EdgeOp::hadamard, 0.5, seed).auc;
  }
  EXPECT_NEAR(total / 20.0, 0.5, 0.05);
}

TEST(LinkPredict, Errors) {
  Matrix vectors = Matrix::Ones(4, 2);
  std::vector<graph::Edge> one{{0, 1}}, two{{0, 1}, {2, 3}}, far{{0, 9}, {1, 2}};
  EXPECT_THROW(link_predict(vectors, one, two, EdgeOp::average, 0.5, 0), DataError);
  EXPECT_THROW(link_predict(vectors, far, two, EdgeOp::average, 0.5, 0), DataError);
}

TEST(NonEdges, SparseAndDenseRegimes) {
  auto g = fdembed::testing::random_graph(40, 60, 8);
  for (std::size_t count : {10u, 600u}) {  // rejection sampling, then enumeration
    auto neg = sample_non_edges(g, count, 3);
    ASSERT_EQ(neg.size(), count);
    std::set<std::pair<graph::NodeId, graph::NodeId>> seen;
    for (auto [u, v] : neg) {
      EXPECT_NE(u, v);
      EXPECT_LT(u, v);
      EXPECT_FALSE(g.has_arc(u, v));
      EXPECT_TRUE(seen.insert({u, v}).second);
    }
  }
  EXPECT_EQ(sample_non_edges(g, 10, 3), sample_non_edges(g, 10, 3));
}

TEST(NonEdges, ExhaustionIsDataError) {
  // complete graph on 4 nodes has no non-edges
  std::vector<graph::Edge> e;
  for (graph::NodeId u = 0; u < 4; ++u)
    for (graph::NodeId v = u + 1; v < 4; ++v) e.emplace_back(u, v);
  auto g = graph::Graph::from_edges(4, e, true);
  EXPECT_THROW(sample_non_edges(g, 1, 0), DataError);
  std::vector<graph::Edge> path{{0, 1}, {1, 2}};
  auto p = graph::Graph::from_edges(3, path, true);
  auto neg = sample_non_edges(p, 1, 0);
  ASSERT_EQ(neg.size(), 1u);
  EXPECT_EQ(neg[0], (graph::Edge{0, 2}));
}
