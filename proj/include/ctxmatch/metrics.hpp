#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ctxmatch/text.hpp"

namespace ctxmatch {

struct ScoredCandidate {
  double score = 0;
  int label = 0;
};

struct RankingGroup {
  std::int64_t group_id = 0;
  std::vector<ScoredCandidate> candidates;  // original candidate order
};

struct MetricsReport {
  double map = 0;
  double recall_at_5 = 0;
  double recall_at_2 = 0;
  double recall_at_1 = 0;
  std::size_t group_count = 0;      // groups that entered the averages
  std::size_t skipped_groups = 0;   // groups without a positive candidate
};

/// Average precision of one group. Candidates are ranked by descending
/// score, ties keeping the original order.
double average_precision(const RankingGroup& group);
/// 1 if any positive is ranked within the first k, else 0.
double recall_at(const RankingGroup& group, std::size_t k);

/// MAP and R@{5,2,1} over groups; groups with no positive label are skipped
/// and counted. Groups are evaluated in parallel. FormatError on an empty group.
MetricsReport compute_metrics(std::span<const RankingGroup> groups);

/// Collects consecutive examples with equal group_id into groups.
std::vector<RankingGroup> make_groups(std::span<const ConversationExample> examples, std::span<const double> scores);

}  // namespace ctxmatch
