#include "ctxmatch/transfer.hpp"

#include <array>

#include "ctxmatch/batch.hpp"
#include "ctxmatch/errors.hpp"

namespace ctxmatch {

namespace {

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

Var zero_bias(Graph& g) { return g.constant(Tensor({1})); }

}  // namespace

int domain_index(Domain d) {
  switch (d) {
    case Domain::source: return 0;
    case Domain::target: return 1;
    case Domain::unset: break;
  }
  throw UsageError("example has no domain");
}

// ---------------------------------------------------------------------------
// components

Discriminator Discriminator::init(std::size_t din, std::size_t hidden, std::mt19937_64& rng) {
  Discriminator d;
  d.w1 = glorot({din, hidden}, din, hidden, rng);
  d.b1 = Tensor({hidden}, true);
  d.w2 = glorot({hidden, 2}, hidden, 2, rng);
  d.b2 = Tensor({2}, true);
  return d;
}

void Discriminator::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + "w1", w1);
  fn(prefix + "b1", b1);
  fn(prefix + "w2", w2);
  fn(prefix + "b2", b2);
}

Var Discriminator::logits(Graph& g, Var features) const {
  Var h = g.relu(g.affine(features, g.param(w1), g.param(b1)));
  return g.affine(h, g.param(w2), g.param(b2));
}

DomainOutput DomainOutput::init(std::size_t hidden, std::mt19937_64& rng) {
  DomainOutput o;
  o.w_shared = glorot({hidden, 1}, 2 * hidden, 1, rng);
  o.w_specific = glorot({hidden, 1}, 2 * hidden, 1, rng);
  o.b = Tensor({1}, true);
  return o;
}

void DomainOutput::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + "w_shared", w_shared);
  fn(prefix + "w_specific", w_specific);
  fn(prefix + "b", b);
}

// ---------------------------------------------------------------------------
// model

TransferModel::TransferModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate(false);
  std::mt19937_64 rng(seed);
  shared_embedding_ = make_embedding_table(cfg_.vocab_size, cfg_.embedding_dim, rng);
  if (cfg_.separate_embeddings) {
    source_embedding_ = make_embedding_table(cfg_.vocab_size, cfg_.embedding_dim, rng);
    target_embedding_ = make_embedding_table(cfg_.vocab_size, cfg_.embedding_dim, rng);
  }
  shared = MtEncoderParams::init(cfg_, false, rng);
  source = MtEncoderParams::init(cfg_, false, rng);
  target = MtEncoderParams::init(cfg_, false, rng);
  out_source = DomainOutput::init(cfg_.fc_hidden, rng);
  out_target = DomainOutput::init(cfg_.fc_hidden, rng);
  disc_shared = Discriminator::init(cfg_.fc_hidden, cfg_.disc_hidden, rng);
  disc_source = Discriminator::init(cfg_.fc_hidden, cfg_.disc_hidden, rng);
  disc_target = Discriminator::init(cfg_.fc_hidden, cfg_.disc_hidden, rng);
}

const Tensor& TransferModel::embedding_for(Domain d) const {
  domain_index(d);
  if (!cfg_.separate_embeddings) return shared_embedding_;
  return d == Domain::source ? source_embedding_ : target_embedding_;
}

Var TransferModel::shared_features(Graph& g, const ConversationExample& ex) const {
  return mt_encode(g, ex, shared_embedding_, shared, cfg_, false).features;
}

Var TransferModel::specific_features(Graph& g, const ConversationExample& ex) const {
  const MtEncoderParams& p = domain_index(ex.domain) == 0 ? source : target;
  return mt_encode(g, ex, embedding_for(ex.domain), p, cfg_, false).features;
}

TransferModel::Forward TransferModel::forward(Graph& g, const ConversationExample& ex) const {
  const DomainOutput& out = domain_index(ex.domain) == 0 ? out_source : out_target;
  Forward f;
  f.shared = shared_features(g, ex);
  f.specific = specific_features(g, ex);
  Var logit = g.add(g.affine(f.shared, g.param(out.w_shared), g.param(out.b)),
                    g.affine(f.specific, g.param(out.w_specific), zero_bias(g)));
  f.score = g.sigmoid(logit);
  return f;
}

double TransferModel::score(const ConversationExample& ex) const {
  Graph g(Graph::Mode::inference);
  return g.scalar(forward(g, ex).score);
}

std::vector<double> TransferModel::score_batch(std::span<const ConversationExample> batch) const {
  return parallel_map(batch, [this](const ConversationExample& ex) { return score(ex); });
}

void TransferModel::visit(const ParamVisitor& fn) {
  visit_regularized(fn);
  disc_shared.visit("disc_shared.", fn);
  disc_source.visit("disc_source.", fn);
  disc_target.visit("disc_target.", fn);
}

void TransferModel::inspect(const ConstParamVisitor& fn) const {
  const_cast<TransferModel*>(this)->visit([&](const std::string& name, Tensor& t) { fn(name, t); });
}

void TransferModel::visit_regularized(const ParamVisitor& fn) {
  fn("embedding", shared_embedding_);
  if (cfg_.separate_embeddings) {
    fn("embedding.source", source_embedding_);
    fn("embedding.target", target_embedding_);
  }
  shared.visit("shared.", fn);
  source.visit("source.", fn);
  target.visit("target.", fn);
  out_source.visit("out_source.", fn);
  out_target.visit("out_target.", fn);
}

void TransferModel::zero_grad() {
  visit([](const std::string&, Tensor& t) { t.zero_grad(); });
}

// ---------------------------------------------------------------------------
// losses

Var adversarial_loss(Graph& g, std::span<const Var> shared_features, const Discriminator& disc) {
  if (shared_features.empty()) throw UsageError("adversarial loss over an empty batch");
  std::vector<Var> terms;
  terms.reserve(shared_features.size());
  for (Var f : shared_features) {
    Var lp = disc.log_probs(g, f);
    terms.push_back(g.sum(g.mul(g.exp(lp), lp)));
  }
  Var total = g.sum(g.concat(terms, 0));
  return g.scale(total, 1.0 / static_cast<double>(shared_features.size()));
}

Var specific_domain_loss(Graph& g, std::span<const Var> features, const Discriminator& disc, Domain true_domain) {
  if (features.empty()) throw UsageError("domain loss over an empty batch");
  const auto idx = static_cast<std::size_t>(domain_index(true_domain));
  std::vector<Var> terms;
  terms.reserve(features.size());
  for (Var f : features) terms.push_back(g.slice(disc.log_probs(g, f), 0, idx, 1));
  Var total = g.sum(g.concat(terms, 0));
  return g.scale(total, -1.0 / static_cast<double>(features.size()));
}

double regularizer(TransferModel& model, double grad_scale) {
  double total = 0.0;
  model.visit_regularized([&](const std::string& name, Tensor& t) {
    const std::size_t skip = starts_with(name, "embedding") ? t.dim(1) : 0;  // PAD row
    auto x = t.data();
    auto gr = t.grad();
    for (std::size_t i = skip; i < x.size(); ++i) {
      total += x[i] * x[i];
      if (grad_scale != 0.0) gr[i] += grad_scale * 2.0 * x[i];
    }
  });
  return total;
}

LossBreakdown combined_loss(TransferModel& model, std::span<const ConversationExample> source_batch,
                            std::span<const ConversationExample> target_batch, const LossWeights& weights,
                            AdversarialMode mode, bool backprop) {
  weights.validate();
  const std::size_t n = source_batch.size() + target_batch.size();
  if (n == 0) throw UsageError("combined loss over two empty batches");
  LossBreakdown lb;
  const auto inv_n = 1.0 / static_cast<double>(n);

  auto run = [&](std::span<const ConversationExample> batch, Domain domain) {
    if (batch.empty()) return;
    const auto inv_k = 1.0 / static_cast<double>(batch.size());
    const double lambda_k = domain == Domain::source ? weights.source_domain : weights.target_domain;
    const Discriminator& disc_k = domain == Domain::source ? model.disc_source : model.disc_target;
    double& mse = domain == Domain::source ? lb.mse_source : lb.mse_target;
    double& dom = domain == Domain::source ? lb.source_domain : lb.target_domain;
    for (const auto& ex : batch) {
      if (ex.domain != domain) throw UsageError("example domain does not match its batch");
      Graph g(backprop ? Graph::Mode::training : Graph::Mode::inference);
      const auto f = model.forward(g, ex);
      Var err = g.sub(f.score, g.constant(Tensor::scalar(static_cast<double>(ex.label))));
      Var sq = g.scale(g.sum_squares(err), 0.5);
      const std::array<Var, 1> shared{f.shared};
      Var adv;
      if (mode == AdversarialMode::reversal) {
        const std::array<Var, 1> reversed{g.grad_reverse(f.shared, 1.0)};
        adv = specific_domain_loss(g, reversed, model.disc_shared, domain);
      } else {
        adv = adversarial_loss(g, shared, model.disc_shared);
      }
      const std::array<Var, 1> specific{f.specific};
      Var spec = specific_domain_loss(g, specific, disc_k, domain);
      mse += g.scalar(sq) * inv_k;
      lb.adversarial += g.scalar(adv) * inv_n;
      dom += g.scalar(spec) * inv_k;
      if (backprop) {
        const std::array<Var, 3> parts{g.scale(sq, inv_k), g.scale(adv, 0.5 * weights.adversarial * inv_n),
                                       g.scale(spec, 0.5 * lambda_k * inv_k)};
        g.backward(g.sum(g.concat(parts, 0)));
      }
    }
  };
  run(source_batch, Domain::source);
  run(target_batch, Domain::target);
  lb.l2 = regularizer(model, backprop ? 0.5 * weights.l2 : 0.0);
  lb.total = lb.mse_source + lb.mse_target + 0.5 * weights.adversarial * lb.adversarial +
             0.5 * weights.source_domain * lb.source_domain + 0.5 * weights.target_domain * lb.target_domain +
             0.5 * weights.l2 * lb.l2;
  return lb;
}

LossBreakdown adversarial_step(TransferModel& model, std::span<const ConversationExample> source_batch,
                               std::span<const ConversationExample> target_batch, const LossWeights& weights,
                               AdversarialMode mode, AdaDelta& optimizer) {
  const std::size_t n = source_batch.size() + target_batch.size();
  if (n == 0) throw UsageError("adversarial step over two empty batches");
  model.zero_grad();
  if (mode == AdversarialMode::alternating) {
    auto fit = [&](std::span<const ConversationExample> batch) {
      for (const auto& ex : batch) {
        Graph enc(Graph::Mode::inference);
        Tensor oc = enc.value(model.shared_features(enc, ex));
        Graph g;
        const std::array<Var, 1> feats{g.constant(std::move(oc))};
        g.backward(g.scale(specific_domain_loss(g, feats, model.disc_shared, ex.domain), 1.0 / static_cast<double>(n)));
      }
    };
    fit(source_batch);
    fit(target_batch);
    model.disc_shared.visit("disc_shared.", [&](const std::string& name, Tensor& t) {
      optimizer.step(name, t);
      t.zero_grad();
    });
  }
  const LossBreakdown lb = combined_loss(model, source_batch, target_batch, weights, mode, true);
  model.visit([&](const std::string& name, Tensor& t) {
    if (mode == AdversarialMode::alternating && starts_with(name, "disc_shared.")) return;
    optimizer.step(name, t);
  });
  model.zero_grad();
  return lb;
}

}  // namespace ctxmatch
