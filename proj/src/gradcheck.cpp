#include "ctxmatch/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ctxmatch/errors.hpp"
#include "ctxmatch/mt_hcnn.hpp"
#include "ctxmatch/transfer.hpp"

namespace ctxmatch {

namespace {

bool is_embedding(const std::string& name) { return name.rfind("embedding", 0) == 0; }

bool is_bias(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return leaf == "b" || leaf == "b1" || leaf == "b2";
}

// Biases start at zero, which parks PAD-only conv windows exactly on the
// ReLU kink. Give every bias a random offset and the embeddings unit scale
// so that interaction matrices are not vanishingly small.
void perturb(const ParamList& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> bias(-0.3, 0.3);
  std::uniform_real_distribution<double> emb(-1.0, 1.0);
  params([&](const std::string& name, Tensor& t) {
    auto x = t.data();
    if (is_bias(name)) {
      for (auto& v : x) v = bias(rng);
    } else if (is_embedding(name)) {
      for (std::size_t i = t.dim(1); i < x.size(); ++i) x[i] = emb(rng);
    }
  });
}

std::vector<int> random_sentence(const ModelConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> tok(2, static_cast<int>(cfg.vocab_size) - 1);
  std::vector<int> s(cfg.seq_len);
  for (auto& t : s) t = tok(rng);
  return s;
}

ConversationExample random_example(const ModelConfig& cfg, int label, Domain domain, std::mt19937_64& rng) {
  ConversationExample ex;
  for (std::size_t i = 0; i < cfg.max_turns; ++i) ex.utterances.push_back(random_sentence(cfg, rng));
  ex.candidate = random_sentence(cfg, rng);
  ex.label = label;
  ex.domain = domain;
  return ex;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

ModelConfig gradcheck_config() {
  ModelConfig c;
  c.seq_len = 6;
  c.max_turns = 3;
  c.embedding_dim = 4;
  c.vocab_size = 10;
  c.cnn1_window = 2;
  c.cnn1_channels = 3;
  c.pyramid_kernel = 2;
  c.pyramid_channels1 = 2;
  c.pyramid_channels2 = 3;
  c.pyramid_pool = 2;
  c.pyramid_stride = 2;
  c.pyramid_grid = 1;
  c.cnn3_window = 2;
  c.cnn3_channels = 3;
  c.cnn3_pool = 2;
  c.cnn3_stride = 2;
  c.fc_hidden = 3;
  c.disc_hidden = 3;
  return c;
}

GradCheckReport check_gradients(const LossFn& loss, const ParamList& params, double step) {
  params([](const std::string&, Tensor& t) { t.zero_grad(); });
  loss(true);
  GradCheckReport rep;
  params([&](const std::string& name, Tensor& t) {
    if (!t.requires_grad()) return;
    TensorCheck tc;
    tc.name = name;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto x = t.data();
    const std::size_t first = is_embedding(name) ? t.dim(1) : 0;
    for (std::size_t i = first; i < x.size(); ++i) {
      const double keep = x[i];
      x[i] = keep + step;
      const double up = loss(false);
      x[i] = keep - step;
      const double down = loss(false);
      x[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      tc.max_rel_error = std::max(tc.max_rel_error, relative_error(analytic[i], numeric));
      ++tc.entries;
    }
    rep.max_rel_error = std::max(rep.max_rel_error, tc.max_rel_error);
    rep.tensors.push_back(std::move(tc));
  });
  params([](const std::string&, Tensor& t) { t.zero_grad(); });
  return rep;
}

GradCheckReport grad_check(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  GradCheckReport rep;
  if (kind == ModelKind::transfer) {
    TransferModel model(cfg, seed);
    const ParamList params = [&](const auto& fn) { model.visit(fn); };
    perturb(params, rng);
    std::vector<ConversationExample> src, tgt;
    for (int i = 0; i < 2; ++i) src.push_back(random_example(cfg, i == 0, Domain::source, rng));
    for (int i = 0; i < 2; ++i) tgt.push_back(random_example(cfg, i == 0, Domain::target, rng));
    const LossWeights w;
    rep = check_gradients(
        [&](bool with_grad) {
          return combined_loss(model, src, tgt, w, AdversarialMode::alternating, with_grad).total;
        },
        params);
  } else {
    MtHcnnModel model(cfg, kind == ModelKind::mt_hcnn_d, seed);
    const ParamList params = [&](const auto& fn) { model.visit(fn); };
    perturb(params, rng);
    std::vector<ConversationExample> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(random_example(cfg, i == 0, Domain::unset, rng));
    const double inv = 1.0 / static_cast<double>(batch.size());
    rep = check_gradients(
        [&](bool with_grad) {
          double total = 0;
          for (const auto& ex : batch) {
            Graph g(with_grad ? Graph::Mode::training : Graph::Mode::inference);
            Var err = g.sub(model.forward(g, ex), g.constant(Tensor::scalar(static_cast<double>(ex.label))));
            Var l = g.scale(g.sum_squares(err), 0.5 * inv);
            total += g.scalar(l);
            if (with_grad) g.backward(l);
          }
          return total;
        },
        params);
  }
  rep.label = std::string(to_string(kind));
  rep.seed = seed;
  return rep;
}

}  // namespace ctxmatch
