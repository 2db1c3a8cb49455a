#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace ctxmatch {

enum class ModelKind : std::uint32_t { mt_hcnn = 1, mt_hcnn_d = 2, transfer = 3 };

enum class Cnn3Mode { conv2d, conv1d };

enum class AdversarialMode {
  alternating,  // discriminator step on detached shared features, then model step
  entropy,      // negative-entropy term only; the shared discriminator is never fit
  reversal,     // single pass, discriminator cross-entropy behind gradient reversal
};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

/// Architecture hyperparameters. The defaults reproduce the reference shapes:
/// |h| = 64, |H_b| = 256, |H_p| = 16, |Z| = 272, CNN3 output 1 x 135 x 8.
struct ModelConfig {
  std::size_t seq_len = 50;        // m
  std::size_t max_turns = 3;       // n_max
  std::size_t embedding_dim = 100;
  std::size_t vocab_size = 2;
  bool separate_embeddings = false;  // transfer only: one table per branch

  std::size_t cnn1_window = 3;
  std::size_t cnn1_channels = 64;

  std::size_t pyramid_kernel = 3;
  std::size_t pyramid_channels1 = 8;
  std::size_t pyramid_channels2 = 16;
  std::size_t pyramid_pool = 2;
  std::size_t pyramid_stride = 2;
  std::size_t pyramid_grid = 1;  // final adaptive max-pool grid side

  Cnn3Mode cnn3_mode = Cnn3Mode::conv2d;
  std::size_t cnn3_window = 2;
  std::size_t cnn3_channels = 8;
  std::size_t cnn3_pool = 2;
  std::size_t cnn3_stride = 2;

  std::size_t fc_hidden = 128;
  std::size_t disc_hidden = 64;

  // Derived shapes. Call validate() first.
  std::size_t bcnn_dim() const { return 4 * cnn1_channels; }
  std::size_t pyramid_stage1() const;  // spatial side after conv+pool 1
  std::size_t pyramid_stage2() const;  // spatial side after conv+pool 2
  std::size_t pyramid_dim() const { return pyramid_grid * pyramid_grid * pyramid_channels2; }
  std::size_t z_dim() const { return bcnn_dim() + pyramid_dim(); }
  std::size_t cnn3_kernel_w() const { return cnn3_mode == Cnn3Mode::conv2d ? cnn3_window : z_dim(); }
  std::size_t cnn3_conv_h() const { return max_turns - cnn3_window + 1; }
  std::size_t cnn3_conv_w() const { return z_dim() - cnn3_kernel_w() + 1; }
  std::size_t cnn3_pool_w() const { return cnn3_mode == Cnn3Mode::conv2d ? cnn3_pool : 1; }
  std::size_t cnn3_stride_w() const { return cnn3_mode == Cnn3Mode::conv2d ? cnn3_stride : 1; }
  std::size_t cnn3_out_h() const;
  std::size_t cnn3_out_w() const;
  std::size_t cnn3_dim() const { return cnn3_out_h() * cnn3_out_w() * cnn3_channels; }
  std::size_t head_input_dim(bool degenerate) const {
    return degenerate ? max_turns * z_dim() : cnn3_dim();
  }

  // Throws ConfigError when the shapes cannot be realised. `degenerate`
  // drops the CNN3 constraints.
  void validate(bool degenerate = false) const;
};

struct LossWeights {
  double adversarial = 0.05;      // lambda1
  double source_domain = 0.05;    // lambda2
  double target_domain = 0.05;    // lambda3
  double l2 = 0.005;              // lambda4
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 0.08;
  double rho = 0.95;
  double epsilon = 1e-6;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  std::size_t group_size = 10;
  LossWeights lambdas;
  AdversarialMode adversarial = AdversarialMode::alternating;
  void validate() const;
};

/// Everything a config file can set.
struct Config {
  ModelKind kind = ModelKind::mt_hcnn;
  ModelConfig model;
  TrainConfig train;
  std::size_t min_count = 1;
  std::size_t candidates = 15;
  std::string vocab_path;
  std::string train_path;   // mt_hcnn / mt_hcnn_d
  std::string valid_path;
  std::string test_path;
  std::string source_train_path;  // transfer
  std::string source_valid_path;
  std::string target_train_path;
  std::string target_valid_path;
  std::string bank_path;
};

/// Parses flat `key = value` text. `#` starts a comment, blank lines are
/// ignored, unknown keys and malformed values are FormatErrors naming the line.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

}  // namespace ctxmatch
