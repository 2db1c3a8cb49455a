#pragma once

// Binary checkpoint format (all integers little-endian):
//
//   "CMCK"                 magic
//   u32                    format version (1)
//   u32                    model kind (1 mt_hcnn, 2 mt_hcnn_d, 3 transfer)
//   u64                    tensor count
//   per tensor:            u32 name length, UTF-8 name, u32 rank,
//                          rank x u64 dims, u8 dtype (0 f64, 1 f32)
//   raw IEEE-754 arrays, in manifest order
//
// Architecture hyperparameters are not stored; loading rebuilds the model
// from a ModelConfig and checks every tensor name and shape against it.

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ctxmatch/config.hpp"
#include "ctxmatch/mt_hcnn.hpp"
#include "ctxmatch/transfer.hpp"

namespace ctxmatch {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { f64 = 0, f32 = 1 };

struct CheckpointTensor {
  std::string name;
  Shape shape;
  DType dtype = DType::f64;
  std::vector<double> data;
};

struct CheckpointFile {
  ModelKind kind = ModelKind::mt_hcnn;
  std::vector<CheckpointTensor> tensors;
};

void write_checkpoint(std::ostream& out, const CheckpointFile& file);
/// FormatError on bad magic, CheckpointVersionError, CheckpointTruncatedError.
CheckpointFile read_checkpoint(std::istream& in);

/// Either model family behind one scoring interface.
class AnyModel {
 public:
  explicit AnyModel(MtHcnnModel m) : model_(std::move(m)) {}
  explicit AnyModel(TransferModel m) : model_(std::move(m)) {}

  ModelKind kind() const;
  const ModelConfig& config() const;
  /// Transfer models score examples through the branch of ex.domain;
  /// examples with an unset domain are scored as target.
  std::vector<double> score_batch(std::span<const ConversationExample> batch) const;
  void inspect(const ConstParamVisitor& fn) const;
  void visit(const ParamVisitor& fn);

  MtHcnnModel* mt() { return std::get_if<MtHcnnModel>(&model_); }
  TransferModel* transfer() { return std::get_if<TransferModel>(&model_); }

 private:
  std::variant<MtHcnnModel, TransferModel> model_;
};

/// Fresh model of `kind` with seeded initialisation.
AnyModel make_model(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed);

CheckpointFile snapshot(const AnyModel& model, DType dtype = DType::f64);
void save_checkpoint(const AnyModel& model, const std::string& path, DType dtype = DType::f64);
void save_checkpoint(const MtHcnnModel& model, const std::string& path, DType dtype = DType::f64);
void save_checkpoint(const TransferModel& model, const std::string& path, DType dtype = DType::f64);

/// Copies a checkpoint into a model built from `cfg`. CheckpointKindError
/// when the stored kind differs from `expected`, CheckpointShapeError on any
/// name or shape difference.
AnyModel restore(const CheckpointFile& file, ModelKind expected, const ModelConfig& cfg);
AnyModel load_checkpoint(const std::string& path, ModelKind expected, const ModelConfig& cfg);

}  // namespace ctxmatch
