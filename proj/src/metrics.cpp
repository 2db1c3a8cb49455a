#include "ctxmatch/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

namespace {

std::vector<std::size_t> ranking(const RankingGroup& group) {
  if (group.candidates.empty()) {
    throw FormatError("group " + std::to_string(group.group_id) + " has no candidates");
  }
  std::vector<std::size_t> order(group.candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return group.candidates[a].score > group.candidates[b].score;
  });
  return order;
}

}  // namespace

double average_precision(const RankingGroup& group) {
  const auto order = ranking(group);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (group.candidates[order[r]].label > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double recall_at(const RankingGroup& group, std::size_t k) {
  const auto order = ranking(group);
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    if (group.candidates[order[r]].label > 0) return 1.0;
  }
  return 0.0;
}

MetricsReport compute_metrics(std::span<const RankingGroup> groups) {
  struct Row {
    bool used = false;
    double ap = 0, r5 = 0, r2 = 0, r1 = 0;
  };
  std::vector<Row> rows(groups.size());
  for (const auto& g : groups) ranking(g);  // validate before the parallel loop
  const auto n = static_cast<std::int64_t>(groups.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::int64_t i = 0; i < n; ++i) {
    const RankingGroup& g = groups[static_cast<std::size_t>(i)];
    Row& row = rows[static_cast<std::size_t>(i)];
    row.used = std::any_of(g.candidates.begin(), g.candidates.end(), [](const auto& c) { return c.label > 0; });
    if (!row.used) continue;
    row.ap = average_precision(g);
    row.r5 = recall_at(g, 5);
    row.r2 = recall_at(g, 2);
    row.r1 = recall_at(g, 1);
  }
  MetricsReport rep;
  for (const auto& row : rows) {
    if (!row.used) {
      ++rep.skipped_groups;
      continue;
    }
    ++rep.group_count;
    rep.map += row.ap;
    rep.recall_at_5 += row.r5;
    rep.recall_at_2 += row.r2;
    rep.recall_at_1 += row.r1;
  }
  if (rep.group_count > 0) {
    const auto d = static_cast<double>(rep.group_count);
    rep.map /= d;
    rep.recall_at_5 /= d;
    rep.recall_at_2 /= d;
    rep.recall_at_1 /= d;
  }
  return rep;
}

std::vector<RankingGroup> make_groups(std::span<const ConversationExample> examples, std::span<const double> scores) {
  if (examples.size() != scores.size()) throw DimensionError("one score per example required");
  std::vector<RankingGroup> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (groups.empty() || groups.back().group_id != examples[i].group_id) {
      groups.push_back(RankingGroup{examples[i].group_id, {}});
    }
    groups.back().candidates.push_back({scores[i], examples[i].label});
  }
  return groups;
}

}  // namespace ctxmatch
