#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ctxmatch/errors.hpp"
#include "ctxmatch/metrics.hpp"
#include "ctxmatch/optim.hpp"

using namespace ctxmatch;

TEST(AdaDeltaTest, FirstStepFromUnitGradient) {
  Tensor x({1}, std::vector<double>{2.0}, true);
  x.grad()[0] = 1.0;
  AdaDelta opt;
  opt.step("x", x);
  const double dx = -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
  EXPECT_NEAR(dx, -0.004472, 1e-6);
  EXPECT_DOUBLE_EQ(x[0], 2.0 + 0.08 * dx);
  const AdaDeltaSlot* s = opt.slot("x");
  ASSERT_NE(s, nullptr);
  EXPECT_NEAR(s->sq_grad[0], 0.05, 1e-15);
  EXPECT_NEAR(s->sq_update[0], 0.05 * dx * dx, 1e-18);
}

TEST(AdaDeltaTest, ZeroGradientIsIdentity) {
  Tensor x({3}, std::vector<double>{1, -2, 3}, true);
  AdaDelta opt;
  for (int i = 0; i < 5; ++i) opt.step("x", x);
  EXPECT_EQ(x[0], 1);
  EXPECT_EQ(x[1], -2);
  EXPECT_EQ(x[2], 3);
}

TEST(AdaDeltaTest, UpdateIsNearlyScaleInvariant) {
  auto last_update = [](double g) {
    std::vector<double> x{0.0}, grad{g};
    AdaDeltaSlot slot;
    double prev = 0;
    for (int i = 0; i < 100; ++i) {
      prev = x[0];
      adadelta_update(x, grad, slot, AdaDeltaConfig{}, "x");
    }
    return x[0] - prev;
  };
  const double a = last_update(1.0), b = last_update(10.0);
  EXPECT_NEAR(a, b, 1e-3 * std::abs(a));
}

TEST(AdaDeltaTest, NonFiniteGradientNamesTheParameter) {
  Tensor x({2}, true);
  x.grad()[1] = std::numeric_limits<double>::quiet_NaN();
  AdaDelta opt;
  try {
    opt.step("encoder.fc.w", x);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.fc.w"), std::string::npos);
  }
}

namespace {

RankingGroup group(std::vector<int> labels, std::vector<double> scores) {
  RankingGroup g;
  for (std::size_t i = 0; i < labels.size(); ++i) g.candidates.push_back({scores[i], labels[i]});
  return g;
}

// Rank of candidate i straight from the definition, no sorting.
std::size_t rank_of(const RankingGroup& g, std::size_t i) {
  std::size_t r = 1;
  for (std::size_t j = 0; j < g.candidates.size(); ++j) {
    const double sj = g.candidates[j].score, si = g.candidates[i].score;
    if (sj > si || (sj == si && j < i)) ++r;
  }
  return r;
}

double brute_ap(const RankingGroup& g) {
  double sum = 0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < g.candidates.size(); ++i) {
    if (!g.candidates[i].label) continue;
    ++pos;
    const std::size_t r = rank_of(g, i);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < g.candidates.size(); ++j)
      if (g.candidates[j].label && rank_of(g, j) <= r) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r);
  }
  return sum / static_cast<double>(pos);
}

double brute_recall(const RankingGroup& g, std::size_t k) {
  for (std::size_t i = 0; i < g.candidates.size(); ++i)
    if (g.candidates[i].label && rank_of(g, i) <= k) return 1.0;
  return 0.0;
}

}  // namespace

TEST(Metrics, WorkedExamples) {
  const auto a = group({0, 1, 0}, {0.1, 0.9, 0.5});
  EXPECT_DOUBLE_EQ(average_precision(a), 1.0);
  EXPECT_DOUBLE_EQ(recall_at(a, 1), 1.0);
  const auto b = group({1, 0}, {0.2, 0.8});
  EXPECT_DOUBLE_EQ(average_precision(b), 0.5);
  EXPECT_DOUBLE_EQ(recall_at(b, 1), 0.0);
  EXPECT_DOUBLE_EQ(recall_at(b, 2), 1.0);
  // Tie: the earlier candidate ranks first.
  EXPECT_DOUBLE_EQ(average_precision(group({0, 1}, {0.5, 0.5})), 0.5);
  EXPECT_DOUBLE_EQ(average_precision(group({1, 0}, {0.5, 0.5})), 1.0);
}

TEST(Metrics, PerfectGroupsAndSkippedGroups) {
  const std::vector<RankingGroup> gs{group({1, 0, 0}, {0.9, 0.1, 0.2}), group({0, 0, 1}, {0.1, 0.2, 0.3}),
                                     group({0, 0}, {0.4, 0.3})};
  const auto r = compute_metrics(gs);
  EXPECT_DOUBLE_EQ(r.map, 1.0);
  EXPECT_DOUBLE_EQ(r.recall_at_1, 1.0);
  EXPECT_EQ(r.group_count, 2u);
  EXPECT_EQ(r.skipped_groups, 1u);
  const std::vector<RankingGroup> empty_group{RankingGroup{}};
  EXPECT_THROW(compute_metrics(empty_group), FormatError);
}

TEST(Metrics, AgreesWithBruteForceOnRandomGroups) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> size(1, 15), coarse(0, 6), bit(0, 3);
  std::vector<RankingGroup> groups;
  for (int n = 0; n < 1000; ++n) {
    RankingGroup g;
    g.group_id = n;
    const int m = size(rng);
    for (int i = 0; i < m; ++i) g.candidates.push_back({coarse(rng) / 6.0, bit(rng) == 0 ? 1 : 0});
    groups.push_back(std::move(g));
  }
  double map = 0, r1 = 0, r2 = 0, r5 = 0;
  std::size_t counted = 0;
  for (const auto& g : groups) {
    bool any = false;
    for (const auto& c : g.candidates) any = any || c.label;
    if (!any) continue;
    ++counted;
    const double ap = brute_ap(g);
    EXPECT_NEAR(average_precision(g), ap, 1e-12);
    map += ap;
    r1 += brute_recall(g, 1);
    r2 += brute_recall(g, 2);
    r5 += brute_recall(g, 5);
  }
  const auto r = compute_metrics(groups);
  EXPECT_EQ(r.group_count, counted);
  EXPECT_EQ(r.group_count + r.skipped_groups, groups.size());
  EXPECT_NEAR(r.map, map / counted, 1e-12);
  EXPECT_NEAR(r.recall_at_1, r1 / counted, 1e-12);
  EXPECT_NEAR(r.recall_at_2, r2 / counted, 1e-12);
  EXPECT_NEAR(r.recall_at_5, r5 / counted, 1e-12);
}

TEST(Metrics, RaisingAPositiveScoreNeverLowersAp) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    RankingGroup g;
    for (int i = 0; i < 8; ++i) g.candidates.push_back({u(rng), i % 3 == 0 ? 1 : 0});
    const double before = average_precision(g);
    g.candidates[3].score += u(rng);
    EXPECT_GE(average_precision(g), before);
  }
}

TEST(Metrics, RecallIsMonotoneInK) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    RankingGroup g;
    for (int i = 0; i < 10; ++i) g.candidates.push_back({u(rng), i == trial % 10 ? 1 : 0});
    EXPECT_LE(recall_at(g, 1), recall_at(g, 2));
    EXPECT_LE(recall_at(g, 2), recall_at(g, 5));
  }
}

TEST(Metrics, GroupsFromConsecutiveIds) {
  std::vector<ConversationExample> ex(5);
  const int ids[] = {0, 0, 1, 1, 1};
  for (int i = 0; i < 5; ++i) {
    ex[i].group_id = ids[i];
    ex[i].label = i == 1 || i == 2;
  }
  const std::vector<double> scores{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto gs = make_groups(ex, scores);
  ASSERT_EQ(gs.size(), 2u);
  EXPECT_EQ(gs[0].candidates.size(), 2u);
  EXPECT_EQ(gs[1].candidates.size(), 3u);
  EXPECT_EQ(gs[1].candidates[0].label, 1);
  EXPECT_DOUBLE_EQ(gs[1].candidates[2].score, 0.5);
}
