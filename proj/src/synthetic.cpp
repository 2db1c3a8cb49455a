#include "ctxmatch/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

namespace {

using Words = std::vector<std::string>;

std::string join(const Words& w) {
  std::string out;
  for (const auto& s : w) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

// Draws `n` distinct words from `draw` that are not in `avoid`.
template <class Draw>
Words distinct(std::size_t n, const std::set<std::string>& avoid, Draw&& draw) {
  Words out;
  std::set<std::string> seen;
  for (std::size_t tries = 0; out.size() < n; ++tries) {
    if (tries > 1000 * (n + 1)) throw ConfigError("synthetic vocabulary too small for the requested lengths");
    std::string w = draw();
    if (avoid.count(w) || !seen.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

Words pick(const Words& from, std::size_t n, std::mt19937_64& rng) {
  Words pool = from;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(n, pool.size()));
  return pool;
}

std::size_t draw_index(std::size_t n, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

std::vector<RawExample> overlap_task(const OverlapTaskOptions& o, std::uint64_t seed) {
  if (o.turns == 0 || o.group_size < 2 || o.shared > o.candidate_len || o.shared > o.turn_len) {
    throw ConfigError("inconsistent overlap task options");
  }
  std::mt19937_64 rng(seed);
  auto word = [&] { return "w" + std::to_string(draw_index(o.vocab, rng)); };
  std::vector<RawExample> rows;
  for (std::size_t g = 0; g < o.groups; ++g) {
    std::vector<std::string> turns;
    Words last;
    for (std::size_t t = 0; t < o.turns; ++t) {
      last = distinct(o.turn_len, {}, word);
      turns.push_back(join(last));
    }
    const std::set<std::string> last_set(last.begin(), last.end());
    const std::size_t pos = draw_index(o.group_size, rng);
    for (std::size_t c = 0; c < o.group_size; ++c) {
      Words cand;
      if (c == pos) {
        cand = pick(last, o.shared, rng);
        std::set<std::string> avoid = last_set;
        for (auto& w : distinct(o.candidate_len - o.shared, avoid, word)) cand.push_back(w);
        std::shuffle(cand.begin(), cand.end(), rng);
      } else {
        cand = distinct(o.candidate_len, last_set, word);
      }
      rows.push_back(RawExample{c == pos ? 1 : 0, turns, join(cand)});
    }
  }
  return rows;
}

std::vector<RawExample> domain_task(Domain domain, std::size_t groups, const TwoDomainOptions& o,
                                    std::uint64_t seed) {
  if (domain == Domain::unset) throw UsageError("domain_task needs a domain");
  if (o.turns < 2 || o.group_size < 2 || o.shared + 1 > o.candidate_len || o.shared > o.turn_len) {
    throw ConfigError("inconsistent two-domain task options");
  }
  std::mt19937_64 rng(seed);
  const std::string tag = domain == Domain::source ? "s" : "t";
  std::bernoulli_distribution specific(o.domain_rate);
  std::bernoulli_distribution hard(o.hard_negative_rate);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution decoy(o.decoy_rate);
  std::bernoulli_distribution shift(o.shift_rate);
  auto content = [&] {
    if (specific(rng)) return tag + std::to_string(draw_index(o.domain_vocab, rng));
    return "c" + std::to_string(draw_index(o.common_vocab, rng));
  };
  // A copied domain token may come back in its reply form.
  auto copied = [&](Words w) {
    for (auto& x : w) {
      if (x.starts_with(tag) && shift(rng)) x += 'r';
    }
    return w;
  };
  auto random_fillers = [&] {
    Words f;
    for (std::size_t i = 0; i < o.fillers_per_sentence && o.fillers > 0; ++i) {
      f.push_back(tag + "f" + std::to_string(draw_index(o.fillers, rng)));
    }
    return f;
  };
  auto with_fillers = [&](Words w, const Words& fillers) {
    for (const auto& f : fillers) {
      const auto at = static_cast<std::ptrdiff_t>(draw_index(w.size() + 1, rng));
      w.insert(w.begin() + at, f);
    }
    return join(w);
  };

  std::vector<RawExample> rows;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<Words> turn_words;
    std::vector<std::string> turns;
    Words last_fillers;
    for (std::size_t t = 0; t < o.turns; ++t) {
      turn_words.push_back(distinct(o.turn_len, {}, content));
      last_fillers = random_fillers();
      turns.push_back(with_fillers(turn_words.back(), last_fillers));
    }
    const Words& last = turn_words.back();
    const std::set<std::string> last_set(last.begin(), last.end());
    const std::size_t pos = draw_index(o.group_size, rng);
    for (std::size_t c = 0; c < o.group_size; ++c) {
      Words cand;
      if (c == pos) {
        cand = copied(pick(last, o.shared, rng));
      } else if (hard(rng)) {
        const Words& earlier = turn_words[draw_index(o.turns - 1, rng)];
        Words from_earlier;
        for (const auto& w : earlier) {
          if (!last_set.count(w)) from_earlier.push_back(w);
        }
        cand = copied(pick(from_earlier, o.shared, rng));
        if (coin(rng)) cand.push_back(copied(pick(last, 1, rng)).front());
      }
      std::set<std::string> avoid = last_set;
      avoid.insert(cand.begin(), cand.end());
      for (auto& w : distinct(o.candidate_len - cand.size(), avoid, content)) cand.push_back(w);
      std::shuffle(cand.begin(), cand.end(), rng);
      // Decoys repeat the last turn's fillers, which look like a match.
      const Words fillers = c != pos && decoy(rng) ? last_fillers : random_fillers();
      rows.push_back(RawExample{c == pos ? 1 : 0, turns, with_fillers(cand, fillers)});
    }
  }
  return rows;
}

}  // namespace ctxmatch
