#include "ctxmatch/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

namespace {

using Snapshot = std::vector<std::vector<double>>;

template <class M>
Snapshot take(const M& model) {
  Snapshot s;
  model.inspect([&](const std::string&, const Tensor& t) { s.emplace_back(t.data().begin(), t.data().end()); });
  return s;
}

template <class M>
void put_back(M& model, const Snapshot& s) {
  std::size_t i = 0;
  model.visit([&](const std::string&, Tensor& t) { t.assign(s[i++]); });
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<ConversationExample> gather(std::span<const ConversationExample> data,
                                        std::span<const std::size_t> idx) {
  std::vector<ConversationExample> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data[i]);
  return out;
}

AdaDelta make_optimizer(const TrainConfig& cfg) {
  return AdaDelta(AdaDeltaConfig{cfg.rho, cfg.epsilon, cfg.learning_rate});
}

[[noreturn]] void diverged(std::size_t epoch, std::size_t step, const std::string& what) {
  throw NumericError("diverged at epoch " + std::to_string(epoch) + " step " + std::to_string(step) + ": " + what);
}

// Shared epoch bookkeeping: logging, early stopping, best-epoch restore.
template <class M, class RunEpoch>
TrainResult drive(M& model, std::span<const ConversationExample> valid, const TrainConfig& cfg,
                  const EpochSink& sink, RunEpoch&& run_epoch) {
  cfg.validate();
  TrainResult res;
  Snapshot best;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog e;
    e.epoch = epoch;
    e.loss = run_epoch(epoch);
    if (!valid.empty()) e.valid = evaluate(model, valid);
    res.log.push_back(e);
    if (sink) sink(e);
    if (valid.empty()) continue;
    if (e.valid.map > res.best_map) {
      res.best_map = e.valid.map;
      res.best_epoch = epoch;
      best = take(model);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      res.stopped_early = true;
      break;
    }
  }
  if (!best.empty()) put_back(model, best);
  if (valid.empty() && !res.log.empty()) res.best_epoch = res.log.back().epoch;
  return res;
}

}  // namespace

std::string format_log_line(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.4f\t%.4f\t%.4f\t%.4f", e.epoch, e.loss, e.valid.map,
                e.valid.recall_at_5, e.valid.recall_at_2, e.valid.recall_at_1);
  return buf;
}

MetricsReport evaluate(std::span<const ConversationExample> examples, std::span<const double> scores) {
  const auto groups = make_groups(examples, scores);
  return compute_metrics(groups);
}

MetricsReport evaluate(const MtHcnnModel& model, std::span<const ConversationExample> examples) {
  const auto scores = model.score_batch(examples);
  return evaluate(examples, scores);
}

MetricsReport evaluate(const TransferModel& model, std::span<const ConversationExample> examples) {
  const auto scores = model.score_batch(examples);
  return evaluate(examples, scores);
}

MetricsReport evaluate(const AnyModel& model, std::span<const ConversationExample> examples) {
  const auto scores = model.score_batch(examples);
  return evaluate(examples, scores);
}

TrainResult train_plain(MtHcnnModel& model, std::span<const ConversationExample> train,
                        std::span<const ConversationExample> valid, const TrainConfig& cfg,
                        const EpochSink& sink) {
  cfg.validate();
  if (train.empty()) throw UsageError("empty training set");
  std::mt19937_64 rng(cfg.seed);
  AdaDelta opt = make_optimizer(cfg);
  model.zero_grad();

  auto run_epoch = [&](std::size_t epoch) {
    const auto order = shuffled(train.size(), rng);
    double total = 0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      double loss = 0;
      try {
        for (std::size_t i = start; i < end; ++i) {
          const ConversationExample& ex = train[order[i]];
          Graph g;
          Var err = g.sub(model.forward(g, ex), g.constant(Tensor::scalar(static_cast<double>(ex.label))));
          Var l = g.scale(g.sum_squares(err), 0.5 * inv);
          loss += g.scalar(l);
          g.backward(l);
        }
        model.visit([&](const std::string& name, Tensor& t) {
          opt.step(name, t);
          t.zero_grad();
        });
      } catch (const NumericError& e) {
        diverged(epoch, steps + 1, e.what());
      }
      if (!std::isfinite(loss)) diverged(epoch, steps + 1, "loss is not finite");
      total += loss;
      ++steps;
    }
    return total / static_cast<double>(steps);
  };
  return drive(model, valid, cfg, sink, run_epoch);
}

TrainResult train_transfer(TransferModel& model, std::span<const ConversationExample> source,
                           std::span<const ConversationExample> target,
                           std::span<const ConversationExample> valid, const TrainConfig& cfg,
                           const EpochSink& sink) {
  if (source.empty() || target.empty()) throw UsageError("transfer training needs source and target data");
  std::mt19937_64 rng(cfg.seed);
  AdaDelta opt = make_optimizer(cfg);
  model.zero_grad();

  // One epoch is one pass over both domains. Every step takes the same share
  // of each shuffled domain, so the mix of a batch follows the corpus sizes.
  auto run_epoch = [&](std::size_t epoch) {
    const auto src_order = shuffled(source.size(), rng);
    const auto tgt_order = shuffled(target.size(), rng);
    const std::size_t n = source.size() + target.size();
    const std::size_t steps = (n + cfg.batch_size - 1) / cfg.batch_size;
    auto slice = [&](const std::vector<std::size_t>& order, std::size_t step) {
      const std::size_t lo = order.size() * step / steps, hi = order.size() * (step + 1) / steps;
      return std::span<const std::size_t>(order.data() + lo, hi - lo);
    };
    double total = 0;
    for (std::size_t step = 0; step < steps; ++step) {
      const auto src = gather(source, slice(src_order, step));
      const auto tgt = gather(target, slice(tgt_order, step));
      LossBreakdown lb;
      try {
        lb = adversarial_step(model, src, tgt, cfg.lambdas, cfg.adversarial, opt);
      } catch (const NumericError& e) {
        diverged(epoch, step + 1, e.what());
      }
      if (!std::isfinite(lb.total)) diverged(epoch, step + 1, "loss is not finite");
      total += lb.total;
    }
    return total / static_cast<double>(steps);
  };
  return drive(model, valid, cfg, sink, run_epoch);
}

}  // namespace ctxmatch
