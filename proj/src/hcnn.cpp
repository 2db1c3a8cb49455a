#include "ctxmatch/hcnn.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ctxmatch {

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  Tensor t(std::move(shape), true);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

HcnnParams HcnnParams::init(const ModelConfig& cfg, std::mt19937_64& rng) {
  HcnnParams p;
  const std::size_t w = cfg.cnn1_window, d = cfg.embedding_dim, ch = cfg.cnn1_channels;
  p.cnn1_w = glorot({w, d, ch}, w * d, w * ch, rng);
  p.cnn1_b = Tensor({ch}, true);
  const std::size_t k = cfg.pyramid_kernel, c1 = cfg.pyramid_channels1, c2 = cfg.pyramid_channels2;
  p.pyr1_w = glorot({k, k, 1, c1}, k * k, k * k * c1, rng);
  p.pyr1_b = Tensor({c1}, true);
  p.pyr2_w = glorot({k, k, c1, c2}, k * k * c1, k * k * c2, rng);
  p.pyr2_b = Tensor({c2}, true);
  return p;
}

void HcnnParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + "cnn1.w", cnn1_w);
  fn(prefix + "cnn1.b", cnn1_b);
  fn(prefix + "pyramid1.w", pyr1_w);
  fn(prefix + "pyramid1.b", pyr1_b);
  fn(prefix + "pyramid2.w", pyr2_w);
  fn(prefix + "pyramid2.b", pyr2_b);
}

Var sentence_encode(Graph& g, Var x, const HcnnParams& p) {
  return g.max_over_time(g.conv1d(x, g.param(p.cnn1_w), g.param(p.cnn1_b)));
}

Var combine_sentences(Graph& g, Var h1, Var h2) {
  const std::array<Var, 4> parts{h1, h2, g.sub(h1, h2), g.mul(h1, h2)};
  return g.concat(parts, 0);
}

Var bcnn_encode(Graph& g, Var x1, Var x2, const HcnnParams& p) {
  return combine_sentences(g, sentence_encode(g, x1, p), sentence_encode(g, x2, p));
}

namespace {

// Pooling windows larger than the feature map shrink to fit it.
Var fitted_pool(Graph& g, Var x, std::size_t window, std::size_t stride) {
  const Tensor& v = g.value(x);
  return g.maxpool2d(x, PoolSpec{std::min(window, v.dim(0)), std::min(window, v.dim(1)), stride, stride});
}

}  // namespace

Var pyramid_encode(Graph& g, Var x1, Var x2, const HcnnParams& p, const ModelConfig& cfg) {
  Var m = g.dot_interaction(x1, x2);
  const Tensor& mv = g.value(m);
  m = g.reshape(m, {mv.dim(0), mv.dim(1), 1});
  Var s1 = fitted_pool(g, g.relu(g.conv2d(m, g.param(p.pyr1_w), g.param(p.pyr1_b))), cfg.pyramid_pool,
                       cfg.pyramid_stride);
  Var s2 = fitted_pool(g, g.relu(g.conv2d(s1, g.param(p.pyr2_w), g.param(p.pyr2_b))), cfg.pyramid_pool,
                       cfg.pyramid_stride);
  Var grid = g.adaptive_maxpool2d(s2, cfg.pyramid_grid, cfg.pyramid_grid);
  return g.reshape(grid, {g.value(grid).size()});
}

Var hcnn_forward(Graph& g, Var x1, Var x2, Var h2, const HcnnParams& p, const ModelConfig& cfg) {
  const std::array<Var, 2> parts{combine_sentences(g, sentence_encode(g, x1, p), h2),
                                 pyramid_encode(g, x1, x2, p, cfg)};
  return g.concat(parts, 0);
}

Var hcnn_forward(Graph& g, Var x1, Var x2, const HcnnParams& p, const ModelConfig& cfg) {
  return hcnn_forward(g, x1, x2, sentence_encode(g, x2, p), p, cfg);
}

}  // namespace ctxmatch
