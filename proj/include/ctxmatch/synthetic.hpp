#pragma once

// Synthetic conversation corpora with a known matching rule, used by the
// overfit and transfer experiments. Rows come out group by group, one
// positive per group at a random position.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxmatch/text.hpp"

namespace ctxmatch {

struct OverlapTaskOptions {
  std::size_t groups = 20;
  std::size_t group_size = 10;
  std::size_t vocab = 60;
  std::size_t turns = 3;
  std::size_t turn_len = 6;
  std::size_t candidate_len = 6;
  std::size_t shared = 2;  // content tokens the positive copies from the last turn
};

/// Positive candidates share `shared` tokens with the last turn; negatives
/// share none with it.
std::vector<RawExample> overlap_task(const OverlapTaskOptions& opts, std::uint64_t seed);

struct TwoDomainOptions {
  std::size_t group_size = 10;
  std::size_t turns = 3;
  std::size_t turn_len = 8;
  std::size_t candidate_len = 6;
  std::size_t shared = 2;
  std::size_t common_vocab = 150;   // content tokens of both domains
  std::size_t domain_vocab = 150;   // content tokens of one domain
  double domain_rate = 0.5;         // chance a content token is domain-specific
  std::size_t fillers = 6;          // domain filler words, meaningless for matching
  std::size_t fillers_per_sentence = 2;
  double hard_negative_rate = 0.5;  // negatives copying from an earlier turn
  double decoy_rate = 0.0;          // negatives repeating the last turn's fillers
  double shift_rate = 0.0;          // copied domain tokens written as their reply form
};

/// Both domains follow the same rule (the positive copies `shared` tokens
/// from the last turn, hard negatives copy from an earlier turn and at most
/// one token from the last). They differ in their domain-specific content
/// tokens and their filler words, which are sprinkled into every sentence.
/// With `shift_rate` > 0 a copied domain token "t17" may appear as "t17r" in
/// the candidate, so matching it needs a pairing learnt from that domain.
std::vector<RawExample> domain_task(Domain domain, std::size_t groups, const TwoDomainOptions& opts,
                                    std::uint64_t seed);

}  // namespace ctxmatch
