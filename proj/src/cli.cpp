#include "ctxmatch/cli.hpp"

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctxmatch/checkpoint.hpp"
#include "ctxmatch/config.hpp"
#include "ctxmatch/errors.hpp"
#include "ctxmatch/gradcheck.hpp"
#include "ctxmatch/retrieval.hpp"
#include "ctxmatch/text.hpp"
#include "ctxmatch/train.hpp"

namespace ctxmatch {

namespace {

struct Flags {
  std::string config;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> group_size;
  std::optional<std::size_t> k;
  std::vector<std::string> turns;
};

const std::string& need(const std::string& value, const char* what) {
  if (value.empty()) throw UsageError(std::string(what) + " is required");
  return value;
}

Config load(const Flags& f) {
  Config cfg = load_config(need(f.config, "--config"));
  if (f.seed) cfg.train.seed = *f.seed;
  if (f.group_size) cfg.train.group_size = *f.group_size;
  if (f.k) cfg.candidates = *f.k;
  return cfg;
}

EncodeOptions encode_options(const Config& cfg) { return {cfg.model.seq_len, cfg.model.max_turns}; }

Vocab load_vocab(Config& cfg) {
  Vocab v = Vocab::load_file(need(cfg.vocab_path, "config key 'vocab'"));
  cfg.model.vocab_size = v.size();
  return v;
}

std::vector<ConversationExample> load_optional(const std::string& path, const Vocab& v, const Config& cfg,
                                               Domain d) {
  if (path.empty()) return {};
  return load_dataset(path, v, encode_options(cfg), cfg.train.group_size, d);
}

void print_metrics(std::ostream& out, const MetricsReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%.6f\t%.6f\t%zu", r.map, r.recall_at_5, r.recall_at_2,
                r.recall_at_1, r.group_count);
  out << "MAP\tR@5\tR@2\tR@1\tgroups\n" << buf << '\n';
}

int build_vocab(const Flags& f, std::ostream& out) {
  Config cfg = load(f);
  std::vector<std::string> texts;
  const std::vector<std::string> paths = cfg.kind == ModelKind::transfer
                                             ? std::vector<std::string>{cfg.source_train_path, cfg.target_train_path}
                                             : std::vector<std::string>{cfg.train_path};
  for (const auto& p : paths) {
    const auto rows = read_dataset_file(need(p, "training data path"), cfg.model.max_turns);
    for (auto& t : corpus_texts(rows)) texts.push_back(std::move(t));
  }
  const Vocab v = Vocab::build(texts, cfg.min_count);
  v.save_file(need(cfg.vocab_path, "config key 'vocab'"));
  out << "vocab\t" << v.size() << '\n';
  return kExitOk;
}

int train(const Flags& f, std::ostream& out, std::ostream& err) {
  const std::string& ckpt = need(f.checkpoint, "--checkpoint");
  Config cfg = load(f);
  const Vocab vocab = load_vocab(cfg);
  const EpochSink sink = [&](const EpochLog& e) { out << format_log_line(e) << '\n' << std::flush; };
  out << "epoch\tloss\tMAP\tR@5\tR@2\tR@1\n";
  TrainResult res;
  if (cfg.kind == ModelKind::transfer) {
    const auto src = load_dataset(need(cfg.source_train_path, "config key 'source_train'"), vocab,
                                  encode_options(cfg), cfg.train.group_size, Domain::source);
    const auto tgt = load_dataset(need(cfg.target_train_path, "config key 'target_train'"), vocab,
                                  encode_options(cfg), cfg.train.group_size, Domain::target);
    const auto valid = load_optional(cfg.target_valid_path, vocab, cfg, Domain::target);
    TransferModel model(cfg.model, cfg.train.seed);
    res = train_transfer(model, src, tgt, valid, cfg.train, sink);
    save_checkpoint(model, ckpt);
  } else {
    const auto data = load_dataset(need(cfg.train_path, "config key 'train'"), vocab, encode_options(cfg),
                                   cfg.train.group_size);
    const auto valid = load_optional(cfg.valid_path, vocab, cfg, Domain::unset);
    MtHcnnModel model(cfg.model, cfg.kind == ModelKind::mt_hcnn_d, cfg.train.seed);
    res = train_plain(model, data, valid, cfg.train, sink);
    save_checkpoint(model, ckpt);
  }
  err << "best epoch " << res.best_epoch << (res.stopped_early ? " (early stop)" : "") << ", checkpoint " << ckpt
      << '\n';
  return kExitOk;
}

int eval(const Flags& f, std::ostream& out) {
  need(f.checkpoint, "--checkpoint");
  Config cfg = load(f);
  const Vocab vocab = load_vocab(cfg);
  const AnyModel model = load_checkpoint(need(f.checkpoint, "--checkpoint"), cfg.kind, cfg.model);
  const Domain d = cfg.kind == ModelKind::transfer ? Domain::target : Domain::unset;
  const auto test = load_dataset(need(cfg.test_path, "config key 'test'"), vocab, encode_options(cfg),
                                 cfg.train.group_size, d);
  print_metrics(out, evaluate(model, test));
  return kExitOk;
}

int gradcheck(const Flags& f, std::ostream& out) {
  std::vector<ModelKind> kinds{ModelKind::mt_hcnn, ModelKind::mt_hcnn_d, ModelKind::transfer};
  if (!f.config.empty()) kinds = {load_config(f.config).kind};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  if (f.seed) seeds = {*f.seed};
  bool ok = true;
  out << "model\tseed\tmax_rel_error\n";
  for (auto kind : kinds) {
    for (auto seed : seeds) {
      const auto rep = grad_check(kind, gradcheck_config(), seed);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3e", rep.max_rel_error);
      out << rep.label << '\t' << seed << '\t' << buf << (rep.passed() ? "" : "\tFAIL") << '\n';
      ok = ok && rep.passed();
    }
  }
  return ok ? kExitOk : kExitNumeric;
}

TfIdfIndex index_from(const Config& cfg) {
  return TfIdfIndex::build(read_bank_file(need(cfg.bank_path, "config key 'bank'")));
}

int build_index(const Flags& f, std::ostream& out) {
  const Config cfg = load(f);
  const TfIdfIndex idx = index_from(cfg);
  out << "questions\t" << idx.size() << "\nterms\t" << idx.vocab_size() << '\n';
  return kExitOk;
}

int rerank_cmd(const Flags& f, std::istream& in, std::ostream& out, bool serving) {
  need(f.checkpoint, "--checkpoint");
  Config cfg = load(f);
  const Vocab vocab = load_vocab(cfg);
  const AnyModel model = load_checkpoint(need(f.checkpoint, "--checkpoint"), cfg.kind, cfg.model);
  const TfIdfIndex idx = index_from(cfg);
  if (cfg.candidates == 0) throw UsageError("--k must be at least 1");
  if (serving) {
    serve(in, out, idx, model, vocab, cfg.candidates);
  } else {
    if (f.turns.empty()) throw UsageError("rerank needs at least one context turn");
    out << to_json(rerank(f.turns, idx, model, vocab, cfg.candidates)) << '\n';
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware question matching with multi-turn hybrid CNNs"};
  app.name("ctxmatch");
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub, bool checkpoint) {
    sub->add_option("--config", f.config, "key = value configuration file");
    if (checkpoint) sub->add_option("--checkpoint", f.checkpoint, "model checkpoint path");
    sub->add_option("--seed", f.seed, "override the configured seed");
    sub->add_option("--group-size", f.group_size, "candidates per evaluation group");
    sub->add_option("--k", f.k, "candidates called back per query");
  };
  auto* vocab_cmd = app.add_subcommand("build-vocab", "build the vocabulary from the training data");
  add_common(vocab_cmd, false);
  auto* train_cmd = app.add_subcommand("train", "train a model and write its checkpoint");
  add_common(train_cmd, true);
  auto* eval_cmd = app.add_subcommand("eval", "score the test set, print MAP and R@k");
  add_common(eval_cmd, true);
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  add_common(grad_cmd, false);
  auto* index_cmd = app.add_subcommand("build-index", "index the question bank, print its statistics");
  add_common(index_cmd, false);
  auto* rerank_sub = app.add_subcommand("rerank", "callback and rerank for one context");
  add_common(rerank_sub, true);
  rerank_sub->add_option("turns", f.turns, "context turns, oldest first");
  auto* serve_cmd = app.add_subcommand("serve", "line-delimited JSON rerank service on stdin/stdout");
  add_common(serve_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, err, err);
    return kExitUsage;
  }

  try {
    if (*vocab_cmd) return build_vocab(f, out);
    if (*train_cmd) return train(f, out, err);
    if (*eval_cmd) return eval(f, out);
    if (*grad_cmd) return gradcheck(f, out);
    if (*index_cmd) return build_index(f, out);
    if (*rerank_sub) return rerank_cmd(f, in, out, false);
    if (*serve_cmd) return rerank_cmd(f, in, out, true);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ctxmatch
