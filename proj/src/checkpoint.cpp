#include "ctxmatch/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'M', 'C', 'K'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxName = 4096;

template <class U>
void put(std::ostream& out, U v) {
  std::array<char, sizeof(U)> b{};
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), b.size());
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointTruncatedError("checkpoint is truncated");
  }

  template <class U>
  U get() {
    std::array<char, sizeof(U)> b{};
    bytes(b.data(), b.size());
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_checkpoint(std::ostream& out, const CheckpointFile& file) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(file.kind));
  put<std::uint64_t>(out, file.tensors.size());
  for (const auto& t : file.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
  }
  for (const auto& t : file.tensors) {
    if (shape_size(t.shape) != t.data.size()) throw DimensionError("checkpoint tensor " + t.name + " size mismatch");
    for (double v : t.data) {
      if (t.dtype == DType::f64) {
        put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
      } else {
        put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
  if (!out) throw FormatError("failed writing checkpoint");
}

CheckpointFile read_checkpoint(std::istream& in) {
  Reader r(in);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw FormatError("not a checkpoint (bad magic bytes)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointVersion));
  }
  CheckpointFile file;
  const auto kind = r.get<std::uint32_t>();
  if (kind < 1 || kind > 3) throw FormatError("unknown model kind tag " + std::to_string(kind));
  file.kind = static_cast<ModelKind>(kind);
  const auto count = r.get<std::uint64_t>();
  if (count > (1u << 20)) throw FormatError("implausible tensor count " + std::to_string(count));
  file.tensors.resize(count);
  for (auto& t : file.tensors) {
    const auto len = r.get<std::uint32_t>();
    if (len > kMaxName) throw FormatError("implausible tensor name length");
    t.name.resize(len);
    r.bytes(t.name.data(), len);
    const auto rank = r.get<std::uint32_t>();
    if (rank == 0 || rank > kMaxRank) throw FormatError("tensor " + t.name + " has invalid rank " + std::to_string(rank));
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = r.get<std::uint64_t>();
      if (d == 0 || d > (std::uint64_t{1} << 32)) throw FormatError("tensor " + t.name + " has an invalid dimension");
      t.shape.push_back(static_cast<std::size_t>(d));
    }
    const auto dtype = r.get<std::uint8_t>();
    if (dtype > 1) throw FormatError("tensor " + t.name + " has unknown dtype " + std::to_string(dtype));
    t.dtype = static_cast<DType>(dtype);
  }
  for (auto& t : file.tensors) {
    const std::size_t n = shape_size(t.shape);
    t.data.resize(n);
    for (auto& v : t.data) {
      v = t.dtype == DType::f64 ? std::bit_cast<double>(r.get<std::uint64_t>())
                                : static_cast<double>(std::bit_cast<float>(r.get<std::uint32_t>()));
    }
  }
  return file;
}

// ---------------------------------------------------------------------------
// AnyModel

ModelKind AnyModel::kind() const {
  return std::visit([](const auto& m) { return m.kind(); }, model_);
}

const ModelConfig& AnyModel::config() const {
  return std::visit([](const auto& m) -> const ModelConfig& { return m.config(); }, model_);
}

std::vector<double> AnyModel::score_batch(std::span<const ConversationExample> batch) const {
  if (const auto* t = std::get_if<TransferModel>(&model_)) {
    bool all_set = true;
    for (const auto& ex : batch) all_set = all_set && ex.domain != Domain::unset;
    if (all_set) return t->score_batch(batch);
    std::vector<ConversationExample> copy(batch.begin(), batch.end());
    for (auto& ex : copy) {
      if (ex.domain == Domain::unset) ex.domain = Domain::target;
    }
    return t->score_batch(copy);
  }
  return std::get<MtHcnnModel>(model_).score_batch(batch);
}

void AnyModel::inspect(const ConstParamVisitor& fn) const {
  std::visit([&](const auto& m) { m.inspect(fn); }, model_);
}

void AnyModel::visit(const ParamVisitor& fn) {
  std::visit([&](auto& m) { m.visit(fn); }, model_);
}

AnyModel make_model(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::mt_hcnn: return AnyModel(MtHcnnModel(cfg, false, seed));
    case ModelKind::mt_hcnn_d: return AnyModel(MtHcnnModel(cfg, true, seed));
    case ModelKind::transfer: return AnyModel(TransferModel(cfg, seed));
  }
  throw ConfigError("unknown model kind");
}

CheckpointFile snapshot(const AnyModel& model, DType dtype) {
  CheckpointFile file;
  file.kind = model.kind();
  model.inspect([&](const std::string& name, const Tensor& t) {
    file.tensors.push_back({name, t.shape(), dtype, std::vector<double>(t.data().begin(), t.data().end())});
  });
  return file;
}

namespace {

void write_file(const CheckpointFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint " + path);
  write_checkpoint(out, file);
}

template <class M>
CheckpointFile snapshot_of(const M& model, DType dtype) {
  CheckpointFile file;
  file.kind = model.kind();
  model.inspect([&](const std::string& name, const Tensor& t) {
    file.tensors.push_back({name, t.shape(), dtype, std::vector<double>(t.data().begin(), t.data().end())});
  });
  return file;
}

}  // namespace

void save_checkpoint(const AnyModel& model, const std::string& path, DType dtype) {
  write_file(snapshot(model, dtype), path);
}

void save_checkpoint(const MtHcnnModel& model, const std::string& path, DType dtype) {
  write_file(snapshot_of(model, dtype), path);
}

void save_checkpoint(const TransferModel& model, const std::string& path, DType dtype) {
  write_file(snapshot_of(model, dtype), path);
}

AnyModel restore(const CheckpointFile& file, ModelKind expected, const ModelConfig& cfg) {
  if (file.kind != expected) {
    throw CheckpointKindError("checkpoint holds a " + std::string(to_string(file.kind)) + " model, expected " +
                              std::string(to_string(expected)));
  }
  AnyModel model = make_model(expected, cfg, 0);
  std::size_t i = 0;
  model.visit([&](const std::string& name, Tensor& t) {
    if (i >= file.tensors.size()) throw CheckpointShapeError("checkpoint lacks tensor " + name);
    const auto& src = file.tensors[i++];
    if (src.name != name) throw CheckpointShapeError("checkpoint tensor " + src.name + " where " + name + " was expected");
    if (src.shape != t.shape()) {
      throw CheckpointShapeError("tensor " + name + " has shape " + shape_str(src.shape) + ", model expects " +
                                 shape_str(t.shape()));
    }
    t.assign(src.data);
  });
  if (i != file.tensors.size()) throw CheckpointShapeError("checkpoint has extra tensors");
  return model;
}

AnyModel load_checkpoint(const std::string& path, ModelKind expected, const ModelConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  return restore(read_checkpoint(in), expected, cfg);
}

}  // namespace ctxmatch
