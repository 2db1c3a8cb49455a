#pragma once

// Shared-private transfer model.
//
// A shared MT-hCNN encoder yields O^c for every example; a source-specific
// and a target-specific encoder yield O^s / O^t. The prediction for domain k
// is sigmoid(W^kc O^c + W^k O^k + b^k). Three discriminators read the
// features: one on O^c (adversarial), one on O^s and one on O^t
// (domain-discrimination). Discriminator class 0 is source, 1 is target.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ctxmatch/config.hpp"
#include "ctxmatch/graph.hpp"
#include "ctxmatch/mt_hcnn.hpp"
#include "ctxmatch/optim.hpp"
#include "ctxmatch/text.hpp"

namespace ctxmatch {

/// feature -> hidden (ReLU) -> 2 logits.
struct Discriminator {
  Tensor w1, b1, w2, b2;

  static Discriminator init(std::size_t din, std::size_t hidden, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
  Var logits(Graph& g, Var features) const;
  Var log_probs(Graph& g, Var features) const { return g.log_softmax(logits(g, features)); }
  Var probs(Graph& g, Var features) const { return g.softmax(logits(g, features)); }
};

/// W^kc, W^k, b^k for one domain.
struct DomainOutput {
  Tensor w_shared, w_specific, b;  // [h x 1], [h x 1], [1]

  static DomainOutput init(std::size_t hidden, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

int domain_index(Domain d);

class TransferModel {
 public:
  TransferModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  static constexpr ModelKind kind() { return ModelKind::transfer; }

  struct Forward {
    Var score;     // [1]
    Var shared;    // O^c
    Var specific;  // O^s or O^t, matching the example's domain
  };

  /// Routes through the branch of ex.domain; UsageError when it is unset.
  Forward forward(Graph& g, const ConversationExample& ex) const;
  Var shared_features(Graph& g, const ConversationExample& ex) const;
  Var specific_features(Graph& g, const ConversationExample& ex) const;

  double score(const ConversationExample& ex) const;
  std::vector<double> score_batch(std::span<const ConversationExample> batch) const;

  /// Every parameter, in checkpoint order.
  void visit(const ParamVisitor& fn);
  void inspect(const ConstParamVisitor& fn) const;
  /// The parameters penalised by the Frobenius term: everything except the
  /// discriminators. Embedding PAD rows are excluded by the caller.
  void visit_regularized(const ParamVisitor& fn);
  void zero_grad();

  const Tensor& shared_embedding() const { return shared_embedding_; }
  const Tensor& embedding_for(Domain d) const;

  MtEncoderParams shared, source, target;
  DomainOutput out_source, out_target;
  Discriminator disc_shared, disc_source, disc_target;

 private:
  ModelConfig cfg_;
  Tensor shared_embedding_;
  Tensor source_embedding_, target_embedding_;  // only with separate_embeddings
};

/// L_a = (1/n) sum_i sum_d p log p over the shared discriminator's posterior.
Var adversarial_loss(Graph& g, std::span<const Var> shared_features, const Discriminator& disc);

/// -(1/n) sum_i log p(d_i = true_domain).
Var specific_domain_loss(Graph& g, std::span<const Var> features, const Discriminator& disc, Domain true_domain);

struct LossBreakdown {
  double mse_source = 0;     // (1/n_s) sum 1/2 (y - y_hat)^2
  double mse_target = 0;
  double adversarial = 0;    // L_a (or the reversal cross-entropy)
  double source_domain = 0;  // L_s
  double target_domain = 0;  // L_t
  double l2 = 0;             // ||Theta||_F^2
  double total = 0;
};

/// Combined objective over a source and a target batch. With `backprop`
/// the gradient of `total` is accumulated into every parameter. Examples are
/// processed one graph at a time; each per-example term carries its batch
/// normaliser so the sum equals the batch objective.
LossBreakdown combined_loss(TransferModel& model, std::span<const ConversationExample> source_batch,
                            std::span<const ConversationExample> target_batch, const LossWeights& weights,
                            AdversarialMode mode = AdversarialMode::alternating, bool backprop = false);

/// Squared Frobenius norm of the regularised parameters (PAD rows excluded);
/// with `grad_scale` != 0 adds grad_scale * 2 * theta to their gradients.
double regularizer(TransferModel& model, double grad_scale = 0.0);

/// One training step of the transfer objective.
///   alternating: (a) fit disc_shared one step on detached O^c, then
///                (b) update every other parameter on the combined loss,
///                    with L_a read through the just-updated disc_shared.
///   entropy:     single update of all parameters on the combined loss.
///   reversal:    single update; disc_shared minimises its cross-entropy
///                while the shared encoder receives the reversed gradient.
/// The domain-discrimination terms train disc_source / disc_target and the
/// specific encoders inside step (b). Returns the loss seen in step (b).
LossBreakdown adversarial_step(TransferModel& model, std::span<const ConversationExample> source_batch,
                               std::span<const ConversationExample> target_batch, const LossWeights& weights,
                               AdversarialMode mode, AdaDelta& optimizer);

}  // namespace ctxmatch
