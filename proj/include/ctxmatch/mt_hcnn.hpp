#pragma once

// Multi-turn hybrid CNN.
//
// Every (utterance_i, candidate) pair goes through one shared hCNN; the
// resulting Z_i are stacked into H [n_max x |Z|], aggregated by CNN3
// (conv -> relu -> max-pool) and a ReLU fully-connected layer giving the
// representation O. A scalar affine head and a sigmoid turn O into a score.
// The degenerate variant (MT-hCNN-d) feeds flatten(H) to the FC layer.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ctxmatch/config.hpp"
#include "ctxmatch/graph.hpp"
#include "ctxmatch/hcnn.hpp"
#include "ctxmatch/text.hpp"

namespace ctxmatch {

struct MtEncoderParams {
  HcnnParams hcnn;
  Tensor cnn3_w, cnn3_b;  // empty when degenerate
  Tensor fc_w, fc_b;

  static MtEncoderParams init(const ModelConfig& cfg, bool degenerate, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// Affine map to one logit.
struct ScoreHead {
  Tensor w, b;  // [din x 1], [1]

  static ScoreHead init(std::size_t din, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// Intermediate nodes of one multi-turn encoding.
struct MtTrace {
  Var stack;     // H, [n_max x |Z|]
  Var pooled;    // CNN3 output (or flatten(H) when degenerate), flattened
  Var features;  // O, [fc_hidden]
};

MtTrace mt_encode(Graph& g, const ConversationExample& ex, const Tensor& embedding, const MtEncoderParams& p,
                  const ModelConfig& cfg, bool degenerate);

/// sigmoid(head(features)), shape [1].
Var score_head(Graph& g, Var features, const ScoreHead& head);

class MtHcnnModel {
 public:
  MtHcnnModel(const ModelConfig& cfg, bool degenerate, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  bool degenerate() const { return degenerate_; }
  ModelKind kind() const { return degenerate_ ? ModelKind::mt_hcnn_d : ModelKind::mt_hcnn; }

  /// Score node for one example (shape [1], value in (0, 1)).
  Var forward(Graph& g, const ConversationExample& ex) const;
  MtTrace trace(Graph& g, const ConversationExample& ex) const;

  double score(const ConversationExample& ex) const;
  /// Scores examples independently (OpenMP across examples). Bit-identical
  /// to calling score() on each.
  std::vector<double> score_batch(std::span<const ConversationExample> batch) const;

  void visit(const ParamVisitor& fn);
  void inspect(const ConstParamVisitor& fn) const;
  void zero_grad();

  Tensor embedding;
  MtEncoderParams encoder;
  ScoreHead head;

 private:
  ModelConfig cfg_;
  bool degenerate_;
};

}  // namespace ctxmatch
