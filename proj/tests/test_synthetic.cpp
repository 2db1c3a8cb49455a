#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "ctxmatch/errors.hpp"
#include "ctxmatch/synthetic.hpp"

using namespace ctxmatch;

namespace {

std::set<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::set<std::string> out;
  for (std::string w; in >> w;) out.insert(w);
  return out;
}

std::size_t common(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& w : a) n += b.count(w);
  return n;
}

bool all_prefixed(const std::set<std::string>& ws, char allowed1, char allowed2) {
  for (const auto& w : ws)
    if (w[0] != allowed1 && w[0] != allowed2) return false;
  return true;
}

}  // namespace

TEST(SyntheticTest, OverlapTaskRule) {
  OverlapTaskOptions o;
  o.groups = 30;
  const auto rows = overlap_task(o, 3);
  ASSERT_EQ(rows.size(), 300u);
  for (std::size_t g = 0; g < o.groups; ++g) {
    int positives = 0;
    for (std::size_t c = 0; c < o.group_size; ++c) {
      const auto& r = rows[g * o.group_size + c];
      ASSERT_EQ(r.turns.size(), o.turns);
      const std::size_t shared = common(words(r.candidate), words(r.turns.back()));
      if (r.label) {
        ++positives;
        EXPECT_EQ(shared, o.shared);
      } else {
        EXPECT_EQ(shared, 0u);
      }
    }
    EXPECT_EQ(positives, 1);
  }
  EXPECT_EQ(overlap_task(o, 3)[17].candidate, rows[17].candidate);
}

TEST(SyntheticTest, DomainTaskUsesItsOwnTokens) {
  TwoDomainOptions o;
  const auto src = domain_task(Domain::source, 20, o, 1), tgt = domain_task(Domain::target, 20, o, 1);
  for (const auto& r : src) EXPECT_TRUE(all_prefixed(words(r.candidate), 's', 'c'));
  for (const auto& r : tgt) EXPECT_TRUE(all_prefixed(words(r.candidate), 't', 'c'));
  EXPECT_THROW(domain_task(Domain::unset, 1, o, 1), UsageError);
  o.shared = o.candidate_len;
  EXPECT_THROW(domain_task(Domain::source, 1, o, 1), ConfigError);
}

TEST(SyntheticTest, PositiveCopiesFromTheLastTurn) {
  TwoDomainOptions o;
  o.fillers_per_sentence = 0;
  o.hard_negative_rate = 0;
  const auto rows = domain_task(Domain::source, 40, o, 2);
  for (const auto& r : rows) {
    const std::size_t shared = common(words(r.candidate), words(r.turns.back()));
    EXPECT_EQ(shared, r.label ? o.shared : 0u);
  }
}

TEST(SyntheticTest, ShiftWritesCopiedDomainTokensInReplyForm) {
  TwoDomainOptions o;
  o.fillers_per_sentence = 0;
  o.hard_negative_rate = 0;
  o.domain_rate = 1.0;  // every content token is domain-specific
  o.shift_rate = 1.0;
  const auto rows = domain_task(Domain::target, 40, o, 4);
  for (const auto& r : rows) {
    const auto cand = words(r.candidate), last = words(r.turns.back());
    EXPECT_EQ(common(cand, last), 0u);
    std::size_t replies = 0;
    for (const auto& w : cand) {
      if (w.back() != 'r') continue;
      ++replies;
      EXPECT_TRUE(last.count(w.substr(0, w.size() - 1))) << w;
    }
    EXPECT_EQ(replies, r.label ? o.shared : 0u);
  }
  for (const auto& t : rows.front().turns)
    for (const auto& w : words(t)) EXPECT_NE(w.back(), 'r');
}
