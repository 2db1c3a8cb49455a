#pragma once

// Hybrid CNN matcher for one (utterance, candidate) pair.
//
//   h1 = maxpool_t(CNN1(X1)), h2 = maxpool_t(CNN1(X2))     shared CNN1
//   H_b = h1 ⊕ h2 ⊕ (h1 - h2) ⊕ (h1 · h2)                   4|h|
//   M[i,j] = <X1_i, X2_j>
//   H_p = flatten(grid(pool(relu(conv(pool(relu(conv(M))))))))
//   Z = H_b ⊕ H_p

#include <functional>
#include <random>
#include <string>

#include "ctxmatch/config.hpp"
#include "ctxmatch/graph.hpp"
#include "ctxmatch/tensor.hpp"

namespace ctxmatch {

using ParamVisitor = std::function<void(const std::string& name, Tensor& t)>;
using ConstParamVisitor = std::function<void(const std::string& name, const Tensor& t)>;

/// Glorot-uniform weights for a tensor with the given fan-in/out.
Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

struct HcnnParams {
  Tensor cnn1_w, cnn1_b;  // [window x d x ch], [ch]
  Tensor pyr1_w, pyr1_b;  // [k x k x 1 x c1], [c1]
  Tensor pyr2_w, pyr2_b;  // [k x k x c1 x c2], [c2]

  static HcnnParams init(const ModelConfig& cfg, std::mt19937_64& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

/// One sentence through CNN1 and max-over-time pooling: [m x d] -> [|h|].
Var sentence_encode(Graph& g, Var x, const HcnnParams& p);

/// h1 ⊕ h2 ⊕ (h1 - h2) ⊕ (h1 · h2).
Var combine_sentences(Graph& g, Var h1, Var h2);

Var bcnn_encode(Graph& g, Var x1, Var x2, const HcnnParams& p);

/// Interaction-matrix branch, flattened to pyramid_dim().
Var pyramid_encode(Graph& g, Var x1, Var x2, const HcnnParams& p, const ModelConfig& cfg);

/// Z for one pair. `h2` may carry a precomputed sentence_encode(x2).
Var hcnn_forward(Graph& g, Var x1, Var x2, const HcnnParams& p, const ModelConfig& cfg);
Var hcnn_forward(Graph& g, Var x1, Var x2, Var h2, const HcnnParams& p, const ModelConfig& cfg);

}  // namespace ctxmatch
