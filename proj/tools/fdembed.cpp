#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdembed/cli.hpp"
#include "fdembed/error.hpp"

namespace {

using fdembed::cli::NodeOrder;
using fdembed::cli::RunConfig;

struct PprFlags {
  bool exact = false;
};

void add_ppr_options(CLI::App* sub, RunConfig& cfg, PprFlags& flags) {
  sub->add_option("--alpha", cfg.ppr.alpha, "Restart probability of the random walk")
      ->capture_default_str();
  sub->add_option("--walks", cfg.ppr.walks_per_node, "Monte-Carlo walks per node")
      ->capture_default_str();
  sub->add_flag("--exact", flags.exact, "Power iteration instead of random walks");
  sub->add_option("--tol", cfg.ppr.tol, "L1 tolerance of the power iteration")->capture_default_str();
  sub->add_option("--max-iters", cfg.ppr.max_iters, "Power iteration cap")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sub->add_flag("--directed", cfg.directed, "Treat the edge list as directed");
}

void add_sketch_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--dim", cfg.dim, "Embedding dimension d")->capture_default_str();
  sub->add_option("--sketcher", cfg.sketcher, "fd, hash, rp, sample or svd")
      ->check(CLI::IsMember({"fd", "hash", "rp", "sample", "svd"}))
      ->capture_default_str();
  const std::map<std::string, NodeOrder> orders{{"random", NodeOrder::random},
                                                {"natural", NodeOrder::natural}};
  sub->add_option("--order", cfg.order, "Node processing order: random or natural")
      ->transform(CLI::CheckedTransformer(orders, CLI::ignore_case));
  sub->add_option("--oracle-limit", cfg.oracle_limit, "Largest n for dense SVD work")
      ->capture_default_str();
}

// Expands "--config FILE" after the subcommand into "--key=value" arguments
// placed ahead of the command-line ones, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2) return args;
  std::string subcommand = args[1];
  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return args;

  std::vector<std::string> out{args[0], subcommand};
  for (const auto& item : CLI::ConfigTOML{}.from_file(config_path)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == subcommand)) continue;
    std::string value;
    for (std::size_t j = 0; j < item.inputs.size(); ++j) {
      if (j > 0) value += ',';
      value += item.inputs[j];
    }
    out.push_back("--" + item.name + "=" + value);
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anytime graph embeddings from sketched personalized PageRank"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  RunConfig cfg;
  PprFlags ppr_flags;

  // embed
  std::string graph_path;
  auto* embed = app.add_subcommand("embed", "Stream a graph into an embedding");
  embed->add_option("graph", graph_path, "Edge list")->required();
  add_ppr_options(embed, cfg, ppr_flags);
  add_sketch_options(embed, cfg);
  embed->add_option("--checkpoint-every", cfg.checkpoint_every,
                    "Snapshot after every such fraction of nodes (0 disables)");
  embed->add_option("--out", cfg.out, "Output embedding path")->required();
  embed->add_option("--exponent", cfg.exponent, "Singular value exponent")->capture_default_str();
  embed->add_option("--workers", cfg.workers, "Threads computing similarity rows")->capture_default_str();
  embed->add_flag("--resume", cfg.resume, "Continue from OUT.ckpt when present");
  embed->add_option("--stop-after", cfg.stop_after, "Stop after this many rows (0 = all)");

  // merge
  std::string merge_a, merge_b, merge_out;
  auto* merge = app.add_subcommand("merge", "Merge two sketch checkpoints");
  merge->add_option("a", merge_a, "First checkpoint")->required()->check(CLI::ExistingFile);
  merge->add_option("b", merge_b, "Second checkpoint")->required()->check(CLI::ExistingFile);
  merge->add_option("--out", merge_out, "Merged checkpoint path")->required();

  // errors
  std::vector<std::size_t> dims{16, 32, 64, 128};
  std::size_t k = 10;
  auto* errors = app.add_subcommand("errors", "Covariance and projection error sweep (TSV)");
  errors->add_option("graph", graph_path, "Edge list")->required();
  add_ppr_options(errors, cfg, ppr_flags);
  add_sketch_options(errors, cfg);
  errors->add_option("--dims", dims, "Comma-separated dimensions")->delimiter(',')->capture_default_str();
  errors->add_option("--k", k, "Rank of the projection error")->capture_default_str();

  // classify
  std::string emb_path, labels_path;
  fdembed::cli::ClassifyOptions cls;
  auto* classify = app.add_subcommand("classify", "Node classification (micro/macro F1)");
  classify->add_option("embedding", emb_path, "Embedding file")->required();
  classify->add_option("--labels", labels_path, "Label file")->required();
  classify->add_option("--train-frac", cls.train_fraction, "Fraction of labeled nodes used for training")
      ->capture_default_str();
  classify->add_option("--repeats", cls.repeats, "Number of random splits")->capture_default_str();
  classify->add_option("--seed", cls.seed, "Seed of the first split")->capture_default_str();
  classify->add_option("--reg", cls.logistic.c, "Logistic regression C")->capture_default_str();

  // linkpred
  std::string edges_path;
  fdembed::cli::LinkPredOptions lp;
  std::string op_name = "hadamard";
  auto* linkpred = app.add_subcommand("linkpred", "Link prediction with edge operators");
  linkpred->add_option("embedding", emb_path, "Embedding file")->required();
  linkpred->add_option("edges", edges_path, "Positive pairs 'u v'")->required();
  linkpred->add_option("--op", op_name, "average, concat, hadamard, l1 or l2")
      ->check(CLI::IsMember({"average", "concat", "hadamard", "l1", "l2"}))
      ->capture_default_str();
  linkpred->add_option("--train-frac", lp.train_fraction, "Training fraction of the pairs")
      ->capture_default_str();
  linkpred->add_option("--repeats", lp.repeats, "Number of random splits")->capture_default_str();
  linkpred->add_option("--seed", lp.seed, "Seed of the first split")->capture_default_str();
  linkpred->add_option("--graph", lp.negative_pool, "Edge list whose non-edges give the negatives");
  linkpred->add_option("--negatives-out", lp.dump_negatives, "Write the first negative sample here");
  linkpred->add_option("--reg", lp.logistic.c, "Logistic regression C")->capture_default_str();

  // ppr
  std::vector<std::uint64_t> ppr_nodes;
  auto* ppr = app.add_subcommand("ppr", "Dump personalized PageRank rows");
  ppr->add_option("graph", graph_path, "Edge list")->required();
  add_ppr_options(ppr, cfg, ppr_flags);
  ppr->add_option("--node", ppr_nodes, "Source node ids (default: all)");

  std::string config_help;
  for (auto* sub : {embed, errors, classify, linkpred, ppr})
    sub->add_option("--config", config_help, "key=value file; command-line flags take precedence");

  try {
    const auto args = expand_config(argc, argv);
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  cfg.ppr.method = ppr_flags.exact ? fdembed::similarity::PprMethod::exact
                                   : fdembed::similarity::PprMethod::monte_carlo;
  try {
    if (*embed) {
      fdembed::cli::cmd_embed(cfg, graph_path, std::cerr);
    } else if (*merge) {
      fdembed::cli::cmd_merge(merge_a, merge_b, merge_out, std::cerr);
    } else if (*errors) {
      fdembed::cli::cmd_errors(cfg, graph_path, dims, k, std::cout);
    } else if (*classify) {
      fdembed::cli::cmd_classify(emb_path, labels_path, cls, std::cout);
    } else if (*linkpred) {
      lp.op = fdembed::eval::parse_edge_op(op_name);
      fdembed::cli::cmd_linkpred(emb_path, edges_path, lp, std::cout);
    } else if (*ppr) {
      fdembed::cli::cmd_ppr(cfg, graph_path, ppr_nodes, std::cout);
    }
  } catch (const fdembed::CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fdembed::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout.flush();
  return 0;
}
