#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxmatch/tensor.hpp"

namespace ctxmatch {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";

enum class Domain { unset, source, target };

/// Lowercases ASCII letters and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

class Vocab {
 public:
  Vocab();

  // Tokens seen at least `min_count` times get ids 2.. in descending
  // frequency, ties broken lexicographically.
  static Vocab build(const std::vector<std::string>& texts, std::size_t min_count);
  static Vocab load(std::istream& in);
  static Vocab load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  std::vector<int> encode(std::string_view text) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct ConversationExample {
  std::vector<std::vector<int>> utterances;  // n_max rows of length m, oldest first
  std::vector<int> candidate;                 // length m
  int label = 0;
  std::int64_t group_id = 0;
  Domain domain = Domain::unset;
};

struct EncodeOptions {
  std::size_t seq_len = 50;
  std::size_t max_turns = 3;
};

/// Pads/truncates every sequence on the right to seq_len and keeps the
/// most recent max_turns turns, filling missing leading turns with PAD.
ConversationExample encode_example(const std::vector<std::string>& turns, std::string_view candidate,
                                   int label, std::int64_t group_id, Domain domain, const Vocab& vocab,
                                   const EncodeOptions& opts);

/// One dataset row before encoding.
struct RawExample {
  int label = 0;
  std::vector<std::string> turns;
  std::string candidate;
};

/// Parses `label<TAB>turn_1<TAB>...<TAB>turn_k<TAB>candidate` lines. A
/// leading line starting with '#' is a header. `max_turns` bounds k.
std::vector<RawExample> read_dataset(std::istream& in, std::size_t max_turns);
std::vector<RawExample> read_dataset_file(const std::string& path, std::size_t max_turns);

/// Reads and encodes a dataset. Consecutive blocks of group_size rows share
/// a group id; group_size == 0 disables grouping (every row its own group).
std::vector<ConversationExample> load_dataset(const std::string& path, const Vocab& vocab,
                                              const EncodeOptions& opts, std::size_t group_size,
                                              Domain domain = Domain::unset);
std::vector<ConversationExample> encode_dataset(const std::vector<RawExample>& rows, const Vocab& vocab,
                                                const EncodeOptions& opts, std::size_t group_size,
                                                Domain domain = Domain::unset);

/// All turn and candidate texts of a row set, for vocabulary building.
std::vector<std::string> corpus_texts(const std::vector<RawExample>& rows);

/// |V| x d table, uniform(-0.1, 0.1), PAD row zero, trainable.
Tensor make_embedding_table(std::size_t vocab_size, std::size_t dim, std::mt19937_64& rng);

void write_dataset(std::ostream& out, const std::vector<RawExample>& rows);

}  // namespace ctxmatch
