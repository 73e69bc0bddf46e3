#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <thread>
#include <unordered_map>

#include "fdembed/checkpoint.hpp"
#include "fdembed/cli.hpp"
#include "fdembed/error.hpp"
#include "fdembed/metrics.hpp"
#include "fdembed/sketch.hpp"

namespace fdembed::cli {
namespace {

constexpr std::uint64_t kOrderStream = 0x6f72646572ULL;
constexpr std::uint64_t kSketchStream = 0x736b65746368ULL;

std::string fmt(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

// Produces similarity rows for order[begin, end) and hands them to `consume`
// in order. With more than one worker, rows are computed ahead on a pool and
// reordered through a bounded ring of slots.
void produce_rows(const graph::Graph& g, const similarity::PprConfig& ppr,
                  const std::vector<graph::NodeId>& order, std::size_t begin, std::size_t end,
                  std::size_t workers, const std::function<void(similarity::SimilarityRow&&)>& consume) {
  if (workers <= 1 || end - begin < 2) {
    for (std::size_t p = begin; p < end; ++p) consume(similarity::similarity_row(g, order[p], ppr));
    return;
  }

  const std::size_t cap = 2 * workers;
  std::vector<std::optional<similarity::SimilarityRow>> slots(cap);
  std::mutex mu;
  std::condition_variable cv;
  std::size_t next = begin;
  std::size_t consumed = begin;
  bool stop = false;
  std::exception_ptr error;

  auto work = [&] {
    for (;;) {
      std::size_t p;
      {
        std::unique_lock lk(mu);
        cv.wait(lk, [&] { return stop || next >= end || next < consumed + cap; });
        if (stop || next >= end) return;
        p = next++;
      }
      try {
        auto row = similarity::similarity_row(g, order[p], ppr);
        {
          std::lock_guard lk(mu);
          slots[p % cap] = std::move(row);
        }
      } catch (...) {
        std::lock_guard lk(mu);
        if (!error) error = std::current_exception();
        stop = true;
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  auto shutdown = [&] {
    {
      std::lock_guard lk(mu);
      stop = true;
    }
    cv.notify_all();
    for (auto& t : pool)
      if (t.joinable()) t.join();
  };

  try {
    for (std::size_t c = begin; c < end; ++c) {
      similarity::SimilarityRow row;
      {
        std::unique_lock lk(mu);
        cv.wait(lk, [&] { return error || slots[c % cap].has_value(); });
        if (error) break;
        row = std::move(*slots[c % cap]);
        slots[c % cap].reset();
        consumed = c + 1;
      }
      cv.notify_all();
      consume(std::move(row));
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();
  if (error) std::rethrow_exception(error);
}

graph::LoadedGraph load_graph(const RunConfig& cfg, const std::string& path) {
  return graph::load_edgelist_file(path, !cfg.directed);
}

similarity::PprConfig ppr_config(const RunConfig& cfg) {
  similarity::PprConfig p = cfg.ppr;
  p.seed = cfg.seed;
  p.validate();
  return p;
}

void write_text_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  body(out);
  if (!out) throw DataError("failed writing " + path);
}

linalg::Matrix dense_similarity(const RunConfig& cfg, const graph::Graph& g) {
  if (g.num_nodes() > cfg.oracle_limit)
    throw CapabilityError("dense similarity matrix for " + std::to_string(g.num_nodes()) +
                          " nodes exceeds the oracle limit " + std::to_string(cfg.oracle_limit));
  return similarity::similarity_matrix(g, ppr_config(cfg));
}

std::unordered_map<std::uint64_t, graph::NodeId> invert_ids(const std::vector<std::uint64_t>& ids) {
  std::unordered_map<std::uint64_t, graph::NodeId> m;
  m.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!m.emplace(ids[i], static_cast<graph::NodeId>(i)).second)
      throw DataError("duplicate node id " + std::to_string(ids[i]));
  }
  return m;
}

}  // namespace

void RunConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("--dim must be at least 1");
  if (sketcher != "svd") sketch::parse_sketcher_kind(sketcher);
  if (!(checkpoint_every == 0.0 || (checkpoint_every > 0.0 && checkpoint_every <= 1.0)))
    throw std::invalid_argument("--checkpoint-every must lie in (0, 1]");
  if (!(exponent >= 0.0) || !std::isfinite(exponent))
    throw std::invalid_argument("--exponent must be finite and non-negative");
  if (workers < 1) throw std::invalid_argument("--workers must be at least 1");
  ppr.validate();
}

std::vector<graph::NodeId> node_order(std::size_t n, NodeOrder order, std::uint64_t seed) {
  std::vector<graph::NodeId> v(n);
  std::iota(v.begin(), v.end(), graph::NodeId{0});
  if (order == NodeOrder::random) {
    std::mt19937_64 rng(similarity::stream_seed(seed, kOrderStream));
    std::shuffle(v.begin(), v.end(), rng);
  }
  return v;
}

EmbedResult cmd_embed(const RunConfig& cfg, const std::string& graph_path, std::ostream& log) {
  cfg.validate();
  if (cfg.out.empty()) throw std::invalid_argument("--out is required");
  const auto loaded = load_graph(cfg, graph_path);
  const graph::Graph& g = loaded.graph;
  const std::size_t n = g.num_nodes();
  const auto ppr = ppr_config(cfg);

  write_text_file(cfg.out + ".idmap", [&](std::ostream& o) { graph::write_id_map(o, loaded.original_ids); });

  EmbedResult result;
  if (cfg.sketcher == "svd") {
    const auto m = dense_similarity(cfg, g);
    result.embedding = linalg::svd_oracle_embedding(m, cfg.dim, cfg.exponent, cfg.oracle_limit);
    save_embedding(cfg.out, result.embedding, loaded.original_ids);
    log << "svd n=" << n << " d=" << cfg.dim << " -> " << cfg.out << "\n";
    return result;
  }

  const auto kind = sketch::parse_sketcher_kind(cfg.sketcher);
  const auto order = node_order(n, cfg.order, cfg.seed);
  const std::string ckpt = cfg.out + ".ckpt";

  std::unique_ptr<sketch::Sketcher> sk;
  if (cfg.resume && std::filesystem::exists(ckpt)) {
    sk = sketch::load_checkpoint(ckpt);
    if (sk->kind() != kind || sk->dim() != cfg.dim || sk->num_cols() != n)
      throw DataError("checkpoint " + ckpt + " does not match the run configuration");
    if (sk->rows_seen() > n) throw DataError("checkpoint has more rows than the graph has nodes");
    result.resumed_from = sk->rows_seen();
    log << "resuming from " << ckpt << " at row " << sk->rows_seen() << "\n";
  } else {
    sk = sketch::make_sketcher(kind, cfg.dim, n, similarity::stream_seed(cfg.seed, kSketchStream));
  }

  const std::uint64_t step =
      cfg.checkpoint_every > 0.0
          ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(cfg.checkpoint_every * static_cast<double>(n))))
          : 0;
  const std::size_t begin = static_cast<std::size_t>(sk->rows_seen());
  std::size_t end = n;
  if (cfg.stop_after > 0) end = std::max(begin, std::min<std::size_t>(n, cfg.stop_after));

  auto snapshot = [&] {
    const auto rows = sk->rows_seen();
    const std::string path = cfg.out + ".snap-" + std::to_string(rows) + ".emb";
    save_embedding(path, sk->embedding(cfg.dim, cfg.exponent), loaded.original_ids);
    sketch::save_checkpoint(ckpt, *sk);
    result.snapshots.push_back(path);
    log << "snapshot " << rows << "/" << n << " -> " << path << "\n";
  };

  produce_rows(g, ppr, order, begin, end, cfg.workers, [&](similarity::SimilarityRow&& row) {
    sk->insert(row);
    const auto rows = sk->rows_seen();
    if (step > 0 && (rows % step == 0 || rows == n)) snapshot();
  });

  result.embedding = sk->embedding(cfg.dim, cfg.exponent);
  save_embedding(cfg.out, result.embedding, loaded.original_ids);
  sketch::save_checkpoint(ckpt, *sk);
  log << cfg.sketcher << " n=" << n << " d=" << cfg.dim << " rows=" << sk->rows_seen() << " -> "
      << cfg.out << "\n";
  return result;
}

void cmd_merge(const std::string& a_path, const std::string& b_path, const std::string& out_path,
               std::ostream& log) {
  const auto a = sketch::load_checkpoint(a_path);
  const auto b = sketch::load_checkpoint(b_path);
  if (a->kind() != b->kind()) throw DataError("cannot merge sketches of different kinds");
  if (a->dim() != b->dim() || a->num_cols() != b->num_cols())
    throw DataError("cannot merge sketches of different shapes");
  std::unique_ptr<sketch::Sketcher> merged;
  try {
    merged = sketch::merge(*a, *b);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  sketch::save_checkpoint(out_path, *merged);
  log << sketch::to_string(merged->kind()) << " d=" << merged->dim() << " n=" << merged->num_cols()
      << " rows=" << merged->rows_seen() << " -> " << out_path << "\n";
}

void cmd_errors(const RunConfig& cfg, const std::string& graph_path,
                const std::vector<std::size_t>& dims, std::size_t k, std::ostream& out) {
  cfg.validate();
  if (dims.empty()) throw std::invalid_argument("no dimensions given");
  if (k == 0) throw std::invalid_argument("--k must be at least 1");
  const auto loaded = load_graph(cfg, graph_path);
  const graph::Graph& g = loaded.graph;
  const std::size_t n = g.num_nodes();
  const auto m = dense_similarity(cfg, g);
  const linalg::MatrixRowSource src(m);
  const auto order = node_order(n, cfg.order, cfg.seed);

  out << "d\tce\tpe_" << k << "\n";
  for (std::size_t d : dims) {
    if (d == 0) throw std::invalid_argument("dimensions must be at least 1");
    Embedding cov;
    if (cfg.sketcher == "svd") {
      cov = linalg::svd_oracle_embedding(m, d, 1.0, cfg.oracle_limit);
    } else {
      auto sk = sketch::make_sketcher(sketch::parse_sketcher_kind(cfg.sketcher), d, n,
                                      similarity::stream_seed(cfg.seed, kSketchStream));
      for (graph::NodeId v : order)
        sk->insert(v, {m.data() + static_cast<std::size_t>(v) * n, n});
      cov = sk->embedding(d, 1.0);
    }
    const double ce = linalg::covariance_error(src, cov);
    double pe = std::numeric_limits<double>::quiet_NaN();
    if (k <= d) {
      try {
        pe = linalg::projection_error(src, cov, k, cfg.oracle_limit);
      } catch (const std::invalid_argument&) {
      }
    }
    out << d << '\t' << fmt(ce) << '\t' << fmt(pe) << '\n';
  }
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

void cmd_classify(const std::string& embedding_path, const std::string& labels_path,
                  const ClassifyOptions& options, std::ostream& out) {
  if (options.repeats == 0) throw std::invalid_argument("--repeats must be at least 1");
  const auto emb = load_embedding(embedding_path);
  const auto labels = eval::load_labels(labels_path, emb.original_ids);
  std::vector<double> micro, macro;
  std::vector<std::uint32_t> untrained;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    const auto split = eval::make_split(labels, options.train_fraction, options.seed + r);
    const auto rep = eval::classify(emb.vectors, labels, split, options.logistic);
    micro.push_back(rep.micro_f1);
    macro.push_back(rep.macro_f1);
    for (auto l : rep.untrained_labels)
      if (std::find(untrained.begin(), untrained.end(), l) == untrained.end()) untrained.push_back(l);
  }
  if (!untrained.empty()) {
    std::sort(untrained.begin(), untrained.end());
    out << "# labels without training nodes in some split:";
    for (auto l : untrained) out << ' ' << labels.label_names[l];
    out << '\n';
  }
  const auto mi = summarize(micro);
  const auto ma = summarize(macro);
  out << "train_frac\tmicro_f1\tmicro_sd\tmacro_f1\tmacro_sd\n";
  out << fmt(options.train_fraction) << '\t' << fmt(mi.mean) << '\t' << fmt(mi.stddev) << '\t'
      << fmt(ma.mean) << '\t' << fmt(ma.stddev) << '\n';
}

void cmd_linkpred(const std::string& embedding_path, const std::string& edges_path,
                  const LinkPredOptions& options, std::ostream& out) {
  if (options.repeats == 0) throw std::invalid_argument("--repeats must be at least 1");
  const auto emb = load_embedding(embedding_path);
  const auto index = invert_ids(emb.original_ids);
  const std::size_t n = emb.original_ids.size();

  auto mapped_edges = [&](const std::string& path) {
    const auto lg = graph::load_edgelist_file(path, true);
    std::vector<graph::Edge> edges;
    for (graph::NodeId u = 0; u < lg.graph.num_nodes(); ++u) {
      for (graph::NodeId v : lg.graph.neighbors(u)) {
        if (v <= u) continue;
        auto iu = index.find(lg.original_ids[u]);
        auto iv = index.find(lg.original_ids[v]);
        if (iu == index.end() || iv == index.end())
          throw DataError("edge endpoint missing from the embedding in " + path);
        edges.emplace_back(iu->second, iv->second);
      }
    }
    return edges;
  };

  const auto positives = mapped_edges(edges_path);
  std::vector<graph::Edge> pool = positives;
  if (!options.negative_pool.empty()) {
    auto extra = mapped_edges(options.negative_pool);
    pool.insert(pool.end(), extra.begin(), extra.end());
  }
  const auto pool_graph = graph::Graph::from_edges(n, pool, true);

  std::vector<double> acc, auc;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    const auto negatives = eval::sample_non_edges(pool_graph, positives.size(), options.seed + r);
    if (r == 0 && !options.dump_negatives.empty()) {
      write_text_file(options.dump_negatives, [&](std::ostream& o) {
        for (const auto& [u, v] : negatives) o << emb.original_ids[u] << ' ' << emb.original_ids[v] << '\n';
      });
    }
    const auto rep = eval::link_predict(emb.vectors, positives, negatives, options.op,
                                        options.train_fraction, options.seed + r, options.logistic);
    acc.push_back(rep.accuracy);
    auc.push_back(rep.auc);
  }
  const auto a = summarize(acc);
  const auto u = summarize(auc);
  out << "op\taccuracy\taccuracy_sd\tauc\tauc_sd\n";
  out << eval::to_string(options.op) << '\t' << fmt(a.mean) << '\t' << fmt(a.stddev) << '\t'
      << fmt(u.mean) << '\t' << fmt(u.stddev) << '\n';
}

void cmd_ppr(const RunConfig& cfg, const std::string& graph_path,
             const std::vector<std::uint64_t>& nodes, std::ostream& out) {
  cfg.ppr.validate();
  const auto loaded = load_graph(cfg, graph_path);
  const auto& g = loaded.graph;
  const auto ppr = ppr_config(cfg);
  std::vector<graph::NodeId> targets;
  if (nodes.empty()) {
    targets.resize(g.num_nodes());
    std::iota(targets.begin(), targets.end(), graph::NodeId{0});
  } else {
    const auto index = invert_ids(loaded.original_ids);
    for (auto id : nodes) {
      auto it = index.find(id);
      if (it == index.end()) throw DataError("node " + std::to_string(id) + " is not in the graph");
      targets.push_back(it->second);
    }
  }
  std::string line;
  for (graph::NodeId v : targets) {
    const auto p = similarity::ppr(g, v, ppr);
    line = std::to_string(loaded.original_ids[v]);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 1e-9) {
        line += ' ';
        line += std::to_string(loaded.original_ids[i]);
        line += ':';
        line += fmt(p[i]);
      }
    }
    line += '\n';
    out << line;
  }
}

}  // namespace fdembed::cli
