#include "ctxmatch/mt_hcnn.hpp"

#include <algorithm>
#include <cstdint>

#include "ctxmatch/batch.hpp"
#include "ctxmatch/errors.hpp"

namespace ctxmatch {

MtEncoderParams MtEncoderParams::init(const ModelConfig& cfg, bool degenerate, std::mt19937_64& rng) {
  MtEncoderParams p;
  p.hcnn = HcnnParams::init(cfg, rng);
  if (!degenerate) {
    const std::size_t kh = cfg.cnn3_window, kw = cfg.cnn3_kernel_w(), c = cfg.cnn3_channels;
    p.cnn3_w = glorot({kh, kw, 1, c}, kh * kw, kh * kw * c, rng);
    p.cnn3_b = Tensor({c}, true);
  }
  const std::size_t din = cfg.head_input_dim(degenerate);
  p.fc_w = glorot({din, cfg.fc_hidden}, din, cfg.fc_hidden, rng);
  p.fc_b = Tensor({cfg.fc_hidden}, true);
  return p;
}

void MtEncoderParams::visit(const std::string& prefix, const ParamVisitor& fn) {
  hcnn.visit(prefix + "hcnn.", fn);
  if (!cnn3_w.empty()) {
    fn(prefix + "cnn3.w", cnn3_w);
    fn(prefix + "cnn3.b", cnn3_b);
  }
  fn(prefix + "fc.w", fc_w);
  fn(prefix + "fc.b", fc_b);
}

ScoreHead ScoreHead::init(std::size_t din, std::mt19937_64& rng) {
  return ScoreHead{glorot({din, 1}, din, 1, rng), Tensor({1}, true)};
}

void ScoreHead::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + "w", w);
  fn(prefix + "b", b);
}

MtTrace mt_encode(Graph& g, const ConversationExample& ex, const Tensor& embedding, const MtEncoderParams& p,
                  const ModelConfig& cfg, bool degenerate) {
  if (ex.utterances.size() != cfg.max_turns) {
    throw DimensionError("example has " + std::to_string(ex.utterances.size()) + " utterances, model expects " +
                         std::to_string(cfg.max_turns));
  }
  const std::size_t m = cfg.seq_len;
  if (ex.candidate.size() != m) throw DimensionError("candidate length differs from seq_len");

  Var xr = g.embedding(embedding, ex.candidate);
  Var hr = sentence_encode(g, xr, p.hcnn);
  std::vector<Var> rows;
  rows.reserve(cfg.max_turns);
  for (const auto& u : ex.utterances) {
    if (u.size() != m) throw DimensionError("utterance length differs from seq_len");
    Var xu = g.embedding(embedding, u);
    Var z = hcnn_forward(g, xu, xr, hr, p.hcnn, cfg);
    rows.push_back(g.reshape(z, {1, cfg.z_dim()}));
  }
  MtTrace t;
  t.stack = g.concat(rows, 0);
  if (degenerate) {
    t.pooled = g.reshape(t.stack, {cfg.max_turns * cfg.z_dim()});
  } else {
    Var h = g.reshape(t.stack, {cfg.max_turns, cfg.z_dim(), 1});
    Var conv = g.relu(g.conv2d(h, g.param(p.cnn3_w), g.param(p.cnn3_b)));
    const Tensor& cv = g.value(conv);
    const PoolSpec spec{std::min(cfg.cnn3_pool, cv.dim(0)), std::min(cfg.cnn3_pool_w(), cv.dim(1)), cfg.cnn3_stride,
                        cfg.cnn3_stride_w()};
    Var pooled = g.maxpool2d(conv, spec);
    t.pooled = g.reshape(pooled, {g.value(pooled).size()});
  }
  t.features = g.relu(g.affine(t.pooled, g.param(p.fc_w), g.param(p.fc_b)));
  return t;
}

Var score_head(Graph& g, Var features, const ScoreHead& head) {
  return g.sigmoid(g.affine(features, g.param(head.w), g.param(head.b)));
}

MtHcnnModel::MtHcnnModel(const ModelConfig& cfg, bool degenerate, std::uint64_t seed)
    : cfg_(cfg), degenerate_(degenerate) {
  cfg_.validate(degenerate);
  std::mt19937_64 rng(seed);
  embedding = make_embedding_table(cfg_.vocab_size, cfg_.embedding_dim, rng);
  encoder = MtEncoderParams::init(cfg_, degenerate, rng);
  head = ScoreHead::init(cfg_.fc_hidden, rng);
}

MtTrace MtHcnnModel::trace(Graph& g, const ConversationExample& ex) const {
  return mt_encode(g, ex, embedding, encoder, cfg_, degenerate_);
}

Var MtHcnnModel::forward(Graph& g, const ConversationExample& ex) const {
  return score_head(g, trace(g, ex).features, head);
}

double MtHcnnModel::score(const ConversationExample& ex) const {
  Graph g(Graph::Mode::inference);
  return g.scalar(forward(g, ex));
}

std::vector<double> MtHcnnModel::score_batch(std::span<const ConversationExample> batch) const {
  return parallel_map(batch, [this](const ConversationExample& ex) { return score(ex); });
}

void MtHcnnModel::visit(const ParamVisitor& fn) {
  fn("embedding", embedding);
  encoder.visit("encoder.", fn);
  head.visit("head.", fn);
}

void MtHcnnModel::inspect(const ConstParamVisitor& fn) const {
  const_cast<MtHcnnModel*>(this)->visit([&](const std::string& name, Tensor& t) { fn(name, t); });
}

void MtHcnnModel::zero_grad() {
  visit([](const std::string&, Tensor& t) { t.zero_grad(); });
}

}  // namespace ctxmatch
