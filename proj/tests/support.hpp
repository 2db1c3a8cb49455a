#pragma once

#include <functional>
#include <random>
#include <vector>

#include "ctxmatch/config.hpp"
#include "ctxmatch/tensor.hpp"
#include "ctxmatch/text.hpp"

namespace ctxmatch::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  Tensor t(std::move(shape), requires_grad);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Central differences of f with respect to every entry of t.
inline std::vector<double> numeric_grad(const std::function<double()>& f, Tensor& t, double h = 1e-6) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double keep = t[i];
    t[i] = keep + h;
    const double up = f();
    t[i] = keep - h;
    const double down = f();
    t[i] = keep;
    out[i] = (up - down) / (2 * h);
  }
  return out;
}

// Small but non-trivial architecture: |h| = 4, |Z| = 4*4 + 3 = 19.
inline ModelConfig small_config() {
  ModelConfig c;
  c.seq_len = 8;
  c.max_turns = 3;
  c.embedding_dim = 6;
  c.vocab_size = 30;
  c.cnn1_window = 3;
  c.cnn1_channels = 4;
  c.pyramid_kernel = 3;
  c.pyramid_channels1 = 2;
  c.pyramid_channels2 = 3;
  c.cnn3_channels = 2;
  c.fc_hidden = 5;
  c.disc_hidden = 4;
  return c;
}

inline ConversationExample random_example(const ModelConfig& cfg, std::mt19937_64& rng, int label = 0,
                                          Domain domain = Domain::unset) {
  std::uniform_int_distribution<int> tok(0, static_cast<int>(cfg.vocab_size) - 1);
  auto sentence = [&] {
    std::vector<int> s(cfg.seq_len);
    for (auto& t : s) t = tok(rng);
    return s;
  };
  ConversationExample ex;
  for (std::size_t i = 0; i < cfg.max_turns; ++i) ex.utterances.push_back(sentence());
  ex.candidate = sentence();
  ex.label = label;
  ex.domain = domain;
  return ex;
}

}  // namespace ctxmatch::testing
