#include "ctxmatch/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

namespace {

// Output side of a pooling stage whose window is clipped to the input.
std::size_t pooled(std::size_t side, std::size_t window, std::size_t stride) {
  const std::size_t w = std::min(window, side);
  return (side - w) / stride + 1;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mt_hcnn: return "mt_hcnn";
    case ModelKind::mt_hcnn_d: return "mt_hcnn_d";
    case ModelKind::transfer: return "transfer";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "mt_hcnn") return ModelKind::mt_hcnn;
  if (s == "mt_hcnn_d") return ModelKind::mt_hcnn_d;
  if (s == "transfer") return ModelKind::transfer;
  throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

std::size_t ModelConfig::pyramid_stage1() const {
  return pooled(seq_len - pyramid_kernel + 1, pyramid_pool, pyramid_stride);
}

std::size_t ModelConfig::pyramid_stage2() const {
  return pooled(pyramid_stage1() - pyramid_kernel + 1, pyramid_pool, pyramid_stride);
}

std::size_t ModelConfig::cnn3_out_h() const { return pooled(cnn3_conv_h(), cnn3_pool, cnn3_stride); }

std::size_t ModelConfig::cnn3_out_w() const {
  return pooled(cnn3_conv_w(), cnn3_pool_w(), cnn3_stride_w());
}

void ModelConfig::validate(bool degenerate) const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (seq_len == 0 || max_turns == 0 || embedding_dim == 0) fail("seq_len, max_turns and embedding_dim must be positive");
  if (vocab_size < 2) fail("vocab_size must include PAD and UNK");
  if (cnn1_window == 0 || cnn1_channels == 0) fail("cnn1 window and channels must be positive");
  if (cnn1_window > seq_len) fail("cnn1_window " + std::to_string(cnn1_window) + " exceeds seq_len " + std::to_string(seq_len));
  if (pyramid_kernel == 0 || pyramid_pool == 0 || pyramid_stride == 0 || pyramid_channels1 == 0 ||
      pyramid_channels2 == 0 || pyramid_grid == 0) {
    fail("pyramid sizes must be positive");
  }
  if (pyramid_kernel > seq_len) fail("seq_len " + std::to_string(seq_len) + " too small for the first pyramid convolution");
  if (pyramid_kernel > pyramid_stage1()) {
    fail("seq_len " + std::to_string(seq_len) + " too small for the second pyramid convolution");
  }
  if (pyramid_grid > pyramid_stage2()) {
    fail("pyramid_grid " + std::to_string(pyramid_grid) + " exceeds the pyramid output side " +
         std::to_string(pyramid_stage2()));
  }
  if (fc_hidden == 0 || disc_hidden == 0) fail("hidden sizes must be positive");
  if (degenerate) return;
  if (cnn3_window == 0 || cnn3_channels == 0 || cnn3_pool == 0 || cnn3_stride == 0) fail("cnn3 sizes must be positive");
  if (max_turns < cnn3_window) {
    fail("max_turns " + std::to_string(max_turns) + " is smaller than the CNN3 window " + std::to_string(cnn3_window));
  }
  if (cnn3_kernel_w() > z_dim()) fail("cnn3 window exceeds the pair representation width");
}

void LossWeights::validate() const {
  if (adversarial < 0 || source_domain < 0 || target_domain < 0 || l2 < 0) {
    throw ConfigError("loss weights must be nonnegative");
  }
}

void TrainConfig::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("adadelta_rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adadelta_eps must be positive");
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be nonnegative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (group_size == 0) throw ConfigError("group_size must be positive");
  lambdas.validate();
}

Config parse_config(std::string_view text) {
  Config cfg;
  using Setter = std::function<void(const std::string&)>;

  auto as_size = [](const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw FormatError("expected a nonnegative integer, got '" + v + "'");
    return out;
  };
  auto as_double = [](const std::string& v) {
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw FormatError("expected a number, got '" + v + "'");
    return out;
  };
  auto as_bool = [](const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw FormatError("expected true/false, got '" + v + "'");
  };
  auto sz = [&](std::size_t& f) -> Setter { return [&, ptr = &f](const std::string& v) { *ptr = as_size(v); }; };
  auto dbl = [&](double& f) -> Setter { return [&, ptr = &f](const std::string& v) { *ptr = as_double(v); }; };
  auto str = [](std::string& f) -> Setter { return [ptr = &f](const std::string& v) { *ptr = v; }; };

  ModelConfig& m = cfg.model;
  TrainConfig& t = cfg.train;
  const std::map<std::string, Setter, std::less<>> setters = {
      {"model_kind", [&](const std::string& v) { cfg.kind = parse_model_kind(v); }},
      {"seq_len", sz(m.seq_len)},
      {"max_turns", sz(m.max_turns)},
      {"embedding_dim", sz(m.embedding_dim)},
      {"separate_embeddings", [&](const std::string& v) { m.separate_embeddings = as_bool(v); }},
      {"cnn1_window", sz(m.cnn1_window)},
      {"cnn1_channels", sz(m.cnn1_channels)},
      {"pyramid_kernel", sz(m.pyramid_kernel)},
      {"pyramid_channels1", sz(m.pyramid_channels1)},
      {"pyramid_channels2", sz(m.pyramid_channels2)},
      {"pyramid_pool", sz(m.pyramid_pool)},
      {"pyramid_stride", sz(m.pyramid_stride)},
      {"pyramid_grid", sz(m.pyramid_grid)},
      {"cnn3_mode",
       [&](const std::string& v) {
         if (v == "2d") m.cnn3_mode = Cnn3Mode::conv2d;
         else if (v == "1d") m.cnn3_mode = Cnn3Mode::conv1d;
         else throw FormatError("cnn3_mode must be 2d or 1d, got '" + v + "'");
       }},
      {"cnn3_window", sz(m.cnn3_window)},
      {"cnn3_channels", sz(m.cnn3_channels)},
      {"cnn3_pool", sz(m.cnn3_pool)},
      {"cnn3_stride", sz(m.cnn3_stride)},
      {"fc_hidden", sz(m.fc_hidden)},
      {"disc_hidden", sz(m.disc_hidden)},
      {"learning_rate", dbl(t.learning_rate)},
      {"adadelta_rho", dbl(t.rho)},
      {"adadelta_eps", dbl(t.epsilon)},
      {"batch_size", sz(t.batch_size)},
      {"epochs", sz(t.epochs)},
      {"patience", sz(t.patience)},
      {"seed", [&](const std::string& v) { t.seed = as_size(v); }},
      {"group_size", sz(t.group_size)},
      {"lambda1", dbl(t.lambdas.adversarial)},
      {"lambda2", dbl(t.lambdas.source_domain)},
      {"lambda3", dbl(t.lambdas.target_domain)},
      {"lambda4", dbl(t.lambdas.l2)},
      {"adversarial",
       [&](const std::string& v) {
         if (v == "alternating") t.adversarial = AdversarialMode::alternating;
         else if (v == "entropy") t.adversarial = AdversarialMode::entropy;
         else if (v == "reversal") t.adversarial = AdversarialMode::reversal;
         else throw FormatError("adversarial must be alternating, entropy or reversal, got '" + v + "'");
       }},
      {"min_count", sz(cfg.min_count)},
      {"candidates", sz(cfg.candidates)},
      {"vocab", str(cfg.vocab_path)},
      {"train", str(cfg.train_path)},
      {"valid", str(cfg.valid_path)},
      {"test", str(cfg.test_path)},
      {"source_train", str(cfg.source_train_path)},
      {"source_valid", str(cfg.source_valid_path)},
      {"target_train", str(cfg.target_train_path)},
      {"target_valid", str(cfg.target_valid_path)},
      {"bank", str(cfg.bank_path)},
  };

  std::size_t lineno = 0;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw FormatError(where + "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw FormatError(where + "unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const Error& e) {
      throw FormatError(where + e.what());
    }
  }
  cfg.train.validate();
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ctxmatch
