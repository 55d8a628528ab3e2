//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

// Command-line front door. Exit codes: 1 usage error, 2 data error,
// 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgm/analyze/census.hpp"
#include "mgm/analyze/probe.hpp"
#include "mgm/cli/config.hpp"
#include "mgm/core/error.hpp"
#include "mgm/fragment/fragmentation.hpp"
#include "mgm/gradcheck/gradcheck.hpp"
#include "mgm/kernels/kernels.hpp"
#include "mgm/molgraph/graph_io.hpp"
#include "mgm/nets/nets.hpp"
#include "mgm/pretrain/pretrain.hpp"
#include "mgm/sgt/sgt.hpp"
#include "mgm/tokenize/tokenize.hpp"

namespace {

using mgm::DataError;
using mgm::NumericalError;
using mgm::molgraph::MolGraph;

std::string fragment_kind_name(mgm::fragment::FragmentKind k) {
  using mgm::fragment::FragmentKind;
  switch (k) {
  case FragmentKind::fg: return "fg";
  case FragmentKind::cycle: return "cycle";
  case FragmentKind::merged_cycle: return "merged_cycle";
  case FragmentKind::brics_piece: return "brics_piece";
  case FragmentKind::singleton_node: return "singleton_node";
  case FragmentKind::single_edge: return "single_edge";
  case FragmentKind::refined: return "refined";
  }
  return "?";
}

std::string join_ints(const std::vector<int> &v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) {
      os << ',';
    }
    os << v[i];
  }
  return os.str();
}

void write_or_print(const std::string &out_path, const std::string &content) {
  if (out_path.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    mgm::molgraph::write_file_atomic(out_path, content);
  }
}

mgm::cli::RunConfig load_config(const std::string &config_path,
                                std::optional<std::uint64_t> seed_flag) {
  mgm::cli::RunConfig cfg = config_path.empty()
                                ? mgm::cli::RunConfig::defaults()
                                : mgm::cli::RunConfig::from_file(config_path);
  if (const char *env = std::getenv("MGMLAB_SEED")) {
    cfg.set("run.seed", env);
  }
  if (seed_flag) {
    cfg.set("run.seed", std::to_string(*seed_flag));
  }
  return cfg;
}

int cmd_parse(const std::string &in, const std::string &out) {
  const std::vector<MolGraph> graphs = mgm::molgraph::load_graph_file(in);
  mgm::molgraph::write_graph_file(graphs, out);
  std::fprintf(stderr, "parsed %zu molecules -> %s\n", graphs.size(),
               out.c_str());
  return 0;
}

int cmd_fragment(const std::string &in, const std::string &recipe_spec,
                 const std::string &patterns_path,
                 const std::string &cleavage_path, const std::string &out) {
  const std::vector<MolGraph> graphs = mgm::molgraph::load_graph_file(in);
  const auto patterns = patterns_path.empty()
                            ? mgm::fragment::default_fg_patterns()
                            : mgm::fragment::load_pattern_file(patterns_path);
  const auto table = cleavage_path.empty()
                         ? mgm::fragment::default_cleavage_table()
                         : mgm::fragment::load_cleavage_file(cleavage_path);
  const auto recipe = mgm::fragment::Recipe::parse(recipe_spec, patterns, table);
  std::ostringstream os;
  os << "# recipe " << recipe.canonical_text() << '\n';
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const auto frags = mgm::fragment::compose(graphs[k], recipe);
    os << "mol " << k << ' ' << graphs[k].node_count() << ' '
       << graphs[k].edge_count() << '\n';
    for (const auto &f: frags) {
      os << "frag " << fragment_kind_name(f.kind) << " nodes="
         << join_ints(f.node_ids) << " edges=" << join_ints(f.edge_ids) << '\n';
    }
  }
  write_or_print(out, os.str());
  return 0;
}

int cmd_tokenize(const std::string &in, const std::string &tokenizer,
                 const std::string &recipe_spec, std::int64_t threshold,
                 const std::string &vocab_in, const std::string &vocab_out,
                 int dim, int layers, const std::string &op_name,
                 std::uint64_t seed, const std::string &out) {
  const std::vector<MolGraph> graphs = mgm::molgraph::load_graph_file(in);
  if (graphs.empty()) {
    throw DataError("empty corpus: " + in);
  }
  std::ostringstream os;
  if (tokenizer == "node") {
    const auto vocab = mgm::tokenize::AtomVocabulary::build(graphs);
    for (std::size_t k = 0; k < graphs.size(); ++k) {
      os << "mol " << k << '\n';
      for (const auto &t: mgm::tokenize::tok_node(graphs[k], vocab)) {
        os << "token " << t.id << '\n';
      }
    }
  } else if (tokenizer == "edge") {
    for (std::size_t k = 0; k < graphs.size(); ++k) {
      os << "mol " << k << '\n';
      for (const auto &t: mgm::tokenize::tok_edge(graphs[k])) {
        os << "token " << t.id << '\n';
      }
    }
  } else if (tokenizer == "motif") {
    const auto recipe = mgm::fragment::Recipe::parse(recipe_spec);
    mgm::tokenize::MotifVocabulary vocab =
        vocab_in.empty()
            ? mgm::tokenize::MotifVocabulary::build(graphs, recipe, threshold)
            : mgm::tokenize::MotifVocabulary::load(vocab_in);
    if (!vocab_out.empty()) {
      vocab.save(vocab_out);
    }
    for (std::size_t k = 0; k < graphs.size(); ++k) {
      os << "mol " << k << '\n';
      for (const auto &t: mgm::tokenize::tok_motif(graphs[k], recipe, vocab)) {
        os << "token " << t.id << " nodes=" << join_ints(t.fragment.node_ids)
           << '\n';
      }
    }
  } else if (tokenizer == "sgt") {
    // Standalone tokenization uses a seeded random embedding table; during
    // pretraining the encoder's live embedding is used instead.
    const auto vocab = mgm::tokenize::AtomVocabulary::build(graphs);
    mgm::SeedSplitter seeds(seed);
    mgm::RngStream init = seeds.stream("init");
    mgm::tensorcore::Tensor embed(static_cast<std::size_t>(vocab.size()),
                                  static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < embed.size(); ++i) {
      embed.data()[i] = 0.1 * init.normal();
    }
    mgm::sgt::SgtConfig cfg;
    cfg.layers = layers;
    cfg.dim = dim;
    if (op_name == "gin") {
      cfg.op.family = mgm::sgt::OperatorFamily::gin;
    } else if (op_name == "gcn") {
      cfg.op.family = mgm::sgt::OperatorFamily::gcn;
    } else if (op_name == "sage") {
      cfg.op.family = mgm::sgt::OperatorFamily::sage;
    } else {
      throw DataError("unknown SGT operator: " + op_name);
    }
    const auto batch = mgm::molgraph::batch_graphs(graphs);
    const auto ids = vocab.ids_for(batch.graph);
    const auto tokens = mgm::sgt::sgt_tokenize(batch.graph, embed, ids, cfg);
    for (int g = 0; g < batch.graph_count(); ++g) {
      os << "mol " << g << '\n';
      const auto [b, e] = batch.node_range(g);
      for (int v = b; v < e; ++v) {
        os << "token";
        for (std::size_t c = 0; c < tokens.mat.cols(); ++c) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), " %.17g",
                        tokens.mat.at(static_cast<std::size_t>(v), c));
          os << buf;
        }
        os << '\n';
      }
    }
  } else {
    throw DataError("unknown tokenizer: " + tokenizer);
  }
  write_or_print(out, os.str());
  return 0;
}

int cmd_census(const std::string &in, const std::string &out, int threads) {
  const std::vector<MolGraph> graphs = mgm::molgraph::load_graph_file(in);
  const auto census = mgm::analyze::subtree_census(graphs, threads);
  write_or_print(out, census.to_csv());
  return 0;
}

int cmd_pretrain(const std::string &config_path,
                 std::optional<std::uint64_t> seed_flag,
                 const std::string &out_dir, const std::string &corpus_flag) {
  mgm::cli::RunConfig cfg = load_config(config_path, seed_flag);
  if (!corpus_flag.empty()) {
    cfg.set("data.corpus", corpus_flag);
  }
  const std::string corpus_path = cfg.get("data.corpus");
  if (corpus_path.empty()) {
    throw DataError("data.corpus is not set (config or --corpus)");
  }
  const std::vector<MolGraph> corpus = mgm::molgraph::load_graph_file(corpus_path);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    mgm::molgraph::write_file_atomic(out_dir + "/resolved.cfg",
                                     cfg.resolved_text());
  }
  const mgm::pretrain::TrainConfig tc = cfg.to_train_config();
  mgm::tensorcore::ParamStore store;
  const auto result = mgm::pretrain::train(corpus, tc, store, out_dir);
  if (!result.metrics.empty()) {
    const auto &last = result.metrics.back();
    std::fprintf(stderr, "epoch %d mean_loss %.6f accuracy %.4f\n", last.epoch,
                 last.mean_loss, last.token_accuracy);
  }
  if (out_dir.empty()) {
    std::fputs(mgm::pretrain::format_metrics_csv(result.metrics).c_str(),
               stdout);
  }
  return 0;
}

int cmd_probe(const std::string &checkpoint_path, const std::string &config_path,
              const std::string &task, std::optional<std::uint64_t> seed_flag,
              const std::string &corpus_flag, const std::string &out) {
  mgm::cli::RunConfig cfg = load_config(config_path, seed_flag);
  if (!corpus_flag.empty()) {
    cfg.set("data.corpus", corpus_flag);
  }
  const std::string corpus_path = cfg.get("data.corpus");
  if (corpus_path.empty()) {
    throw DataError("data.corpus is not set (config or --corpus)");
  }
  const std::vector<MolGraph> corpus = mgm::molgraph::load_graph_file(corpus_path);
  const auto vocab = mgm::tokenize::AtomVocabulary::build(corpus);

  const auto ckpt = mgm::pretrain::load_checkpoint(checkpoint_path);
  if (ckpt.meta.config_fingerprint != 0 &&
      ckpt.meta.config_fingerprint != cfg.fingerprint()) {
    std::fprintf(stderr,
                 "warning: checkpoint config fingerprint differs from the "
                 "resolved config\n");
  }
  mgm::tensorcore::ParamStore store;
  mgm::pretrain::restore_into_store(ckpt, store);
  const mgm::pretrain::TrainConfig tc = cfg.to_train_config();
  mgm::nets::ModelConfig model_cfg = tc.model;
  // Decoder output width is whatever the checkpoint carries.
  const auto *out_w = ckpt.find("decoder.out_w");
  if (out_w == nullptr) {
    throw DataError("checkpoint lacks decoder.out_w");
  }
  model_cfg.out_dim = static_cast<int>(out_w->cols());
  const auto model = mgm::nets::AutoencoderParams::bind(store, model_cfg);

  mgm::analyze::ProbeConfig pc;
  pc.mask_ratio = cfg.get_double("probe.mask_ratio");
  pc.seed = cfg.get_u64("run.seed");
  pc.epochs = static_cast<int>(cfg.get_int("probe.epochs"));
  pc.lr = cfg.get_double("probe.lr");
  pc.train_fraction = cfg.get_double("probe.train_fraction");

  mgm::analyze::ProbeReport report;
  if (task == "masked_atoms") {
    report = mgm::analyze::probe_masked_atoms(model, vocab, corpus, pc);
  } else if (task == "fg") {
    report = mgm::analyze::probe_fg(model, vocab, corpus,
                                    mgm::fragment::default_fg_patterns(), pc);
  } else {
    throw DataError("unknown probe task: " + task);
  }
  write_or_print(out, report.to_text());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const auto outcomes = mgm::gradcheck::run_suite(seed);
  for (const auto &o: outcomes) {
    std::printf("%-28s max_rel_err %.3e  %s\n", o.name.c_str(), o.max_rel_error,
                o.ok ? "ok" : "FAIL");
  }
  if (!mgm::gradcheck::all_ok(outcomes)) {
    throw NumericalError("gradient check failed");
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"mgmlab: masked graph modeling laboratory"};
  app.require_subcommand(1);

  // parse
  auto *parse = app.add_subcommand("parse", "SMILES corpus -> structured graph file");
  std::string parse_in, parse_out;
  parse->add_option("--in", parse_in, "input corpus")->required();
  parse->add_option("--out", parse_out, "output structured graph file")->required();

  // fragment
  auto *frag = app.add_subcommand("fragment", "emit fragment listings per molecule");
  std::string frag_in, frag_recipe = "preset:mgssl", frag_patterns, frag_cleavage, frag_out;
  frag->add_option("--in", frag_in, "input corpus")->required();
  frag->add_option("--recipe", frag_recipe, "fragmentation recipe");
  frag->add_option("--patterns", frag_patterns, "FG pattern file");
  frag->add_option("--cleavage", frag_cleavage, "cleavage table file");
  frag->add_option("--out", frag_out, "output file (stdout if omitted)");

  // tokenize
  auto *tok = app.add_subcommand("tokenize", "emit tokens per molecule");
  std::string tok_in, tok_kind = "node", tok_recipe = "preset:mgssl";
  std::string tok_vocab_in, tok_vocab_out, tok_out, tok_op = "gin";
  std::int64_t tok_threshold = 5;
  int tok_dim = 16, tok_layers = 1;
  std::uint64_t tok_seed = 7;
  tok->add_option("--in", tok_in, "input corpus")->required();
  tok->add_option("--tokenizer", tok_kind, "node|edge|motif|sgt");
  tok->add_option("--recipe", tok_recipe, "motif recipe");
  tok->add_option("--threshold", tok_threshold, "motif frequency threshold");
  tok->add_option("--vocab-in", tok_vocab_in, "existing motif vocabulary file");
  tok->add_option("--vocab-out", tok_vocab_out, "write motif vocabulary here");
  tok->add_option("--dim", tok_dim, "SGT embedding width");
  tok->add_option("--layers", tok_layers, "SGT layer count");
  tok->add_option("--operator", tok_op, "SGT operator: gin|gcn|sage");
  tok->add_option("--seed", tok_seed, "seed for the standalone SGT embedding");
  tok->add_option("--out", tok_out, "output file (stdout if omitted)");

  // census
  auto *census = app.add_subcommand("census", "one-hop subtree and atom censuses");
  std::string census_in, census_out;
  int census_threads = 1;
  census->add_option("corpus", census_in, "input corpus")->required();
  census->add_option("--out", census_out, "output file (stdout if omitted)");
  census->add_option("--threads", census_threads, "worker threads");

  // pretrain
  auto *pre = app.add_subcommand("pretrain", "run MGM pretraining");
  std::string pre_config, pre_out, pre_corpus;
  std::optional<std::uint64_t> pre_seed;
  pre->add_option("--config", pre_config, "run config file");
  pre->add_option("--seed", pre_seed, "override run.seed");
  pre->add_option("--out", pre_out, "output directory");
  pre->add_option("--corpus", pre_corpus, "override data.corpus");

  // probe
  auto *probe = app.add_subcommand("probe", "linear probing on a checkpoint");
  std::string probe_ckpt, probe_config, probe_task = "masked_atoms";
  std::string probe_corpus, probe_out;
  std::optional<std::uint64_t> probe_seed;
  probe->add_option("--checkpoint", probe_ckpt, "checkpoint file")->required();
  probe->add_option("--config", probe_config, "run config file");
  probe->add_option("--task", probe_task, "masked_atoms|fg");
  probe->add_option("--seed", probe_seed, "override run.seed");
  probe->add_option("--corpus", probe_corpus, "override data.corpus");
  probe->add_option("--out", probe_out, "output file (stdout if omitted)");

  // gradcheck
  auto *gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  std::uint64_t gc_seed = 20260808;
  gc->add_option("--seed", gc_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (parse->parsed()) {
      return cmd_parse(parse_in, parse_out);
    }
    if (frag->parsed()) {
      return cmd_fragment(frag_in, frag_recipe, frag_patterns, frag_cleavage,
                          frag_out);
    }
    if (tok->parsed()) {
      return cmd_tokenize(tok_in, tok_kind, tok_recipe, tok_threshold,
                          tok_vocab_in, tok_vocab_out, tok_dim, tok_layers,
                          tok_op, tok_seed, tok_out);
    }
    if (census->parsed()) {
      return cmd_census(census_in, census_out, census_threads);
    }
    if (pre->parsed()) {
      return cmd_pretrain(pre_config, pre_seed, pre_out, pre_corpus);
    }
    if (probe->parsed()) {
      return cmd_probe(probe_ckpt, probe_config, probe_task, probe_seed,
                       probe_corpus, probe_out);
    }
    if (gc->parsed()) {
      return cmd_gradcheck(gc_seed);
    }
  } catch (const NumericalError &e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const mgm::Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
