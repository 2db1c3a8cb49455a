#pragma once

// First-stage TF-IDF callback over a question bank and the model rerank
// that follows it.

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctxmatch/checkpoint.hpp"
#include "ctxmatch/text.hpp"

namespace ctxmatch {

inline constexpr std::size_t kContextTurns = 3;

struct BankEntry {
  std::string id;
  std::string question;
  std::string answer_id;
};

/// `id<TAB>question<TAB>answer_id` per line; blank lines are skipped.
std::vector<BankEntry> read_bank(std::istream& in);
std::vector<BankEntry> read_bank_file(const std::string& path);

/// Sorted (term id, weight) pairs.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

struct Hit {
  std::size_t index = 0;  // position in the bank
  std::string id;
  double score = 0;
};

/// weight = tf * idf with idf = ln((1 + N) / (1 + df)) + 1, rows L2-normalised.
class TfIdfIndex {
 public:
  /// FormatError naming the first duplicated id.
  static TfIdfIndex build(std::vector<BankEntry> bank);

  std::size_t size() const { return bank_.size(); }
  std::size_t vocab_size() const { return terms_.size(); }
  const BankEntry& entry(std::size_t i) const { return bank_.at(i); }
  const SparseVector& vector(std::size_t i) const { return vectors_.at(i); }
  /// 0 for terms outside the index.
  double idf(const std::string& term) const;
  SparseVector vectorize(std::string_view text) const;

  /// Top-k bank questions by cosine against the concatenation of the last
  /// kContextTurns turns, ties by ascending id. Questions with zero
  /// similarity are not returned.
  std::vector<Hit> callback(std::span<const std::string> turns, std::size_t k) const;

 private:
  std::vector<BankEntry> bank_;
  std::map<std::string, std::size_t> terms_;
  std::vector<double> idf_;
  std::vector<SparseVector> vectors_;
};

std::string context_query(std::span<const std::string> turns);

struct RankedQuestion {
  std::string id;
  double score = 0;
};

struct RerankResponse {
  std::vector<RankedQuestion> ranked;  // descending score, callback order on ties
  std::vector<std::string> callback;
};

/// callback(k), then every candidate scored in one mini-batch against the
/// context turns. Candidates are scored as target-domain examples.
RerankResponse rerank(std::span<const std::string> turns, const TfIdfIndex& index, const AnyModel& model,
                      const Vocab& vocab, std::size_t k);

/// Line-delimited JSON: one request `{"turns":[...],"k":int?}` per input
/// line, one response per output line in input order. Malformed requests
/// yield `{"error": "..."}`. Returns the number of requests handled.
std::size_t serve(std::istream& in, std::ostream& out, const TfIdfIndex& index, const AnyModel& model,
                  const Vocab& vocab, std::size_t default_k);

std::string to_json(const RerankResponse& r);

}  // namespace ctxmatch
