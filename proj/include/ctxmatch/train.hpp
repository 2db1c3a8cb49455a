#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctxmatch/checkpoint.hpp"
#include "ctxmatch/config.hpp"
#include "ctxmatch/metrics.hpp"
#include "ctxmatch/mt_hcnn.hpp"
#include "ctxmatch/transfer.hpp"

namespace ctxmatch {

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0;        // mean per-step objective
  MetricsReport valid;
};

/// `epoch\tloss\tMAP\tR@5\tR@2\tR@1`
std::string format_log_line(const EpochLog& e);

using EpochSink = std::function<void(const EpochLog&)>;

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_map = -1;
  bool stopped_early = false;
};

MetricsReport evaluate(std::span<const ConversationExample> examples, std::span<const double> scores);
MetricsReport evaluate(const MtHcnnModel& model, std::span<const ConversationExample> examples);
MetricsReport evaluate(const TransferModel& model, std::span<const ConversationExample> examples);
MetricsReport evaluate(const AnyModel& model, std::span<const ConversationExample> examples);

/// Loss 1/2 (y - y_hat)^2 averaged over each minibatch, AdaDelta, seeded
/// shuffle. After every epoch the validation set is scored; training stops
/// once validation MAP has not improved for `patience` epochs, and the
/// parameters of the best epoch are restored. An empty validation set
/// disables early stopping and keeps the last parameters.
/// NumericError on divergence names the epoch and step.
TrainResult train_plain(MtHcnnModel& model, std::span<const ConversationExample> train,
                        std::span<const ConversationExample> valid, const TrainConfig& cfg,
                        const EpochSink& sink = {});

/// Transfer training. One epoch is a single pass over both domains in
/// ceil((n_s + n_t) / batch_size) steps; each step takes an equal share of
/// each shuffled domain, so batches mix the domains in corpus proportion.
/// Validation uses target data.
TrainResult train_transfer(TransferModel& model, std::span<const ConversationExample> source,
                           std::span<const ConversationExample> target,
                           std::span<const ConversationExample> valid, const TrainConfig& cfg,
                           const EpochSink& sink = {});

}  // namespace ctxmatch
