#include "ctxmatch/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

void Vocab::add(std::string token) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocab Vocab::build(const std::vector<std::string>& texts, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  if (texts.empty()) throw FormatError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (auto& [tok, n] : ranked) {
    if (n < min_count) break;
    if (tok == kPadToken || tok == kUnkToken) continue;
    v.add(tok);
  }
  return v;
}

Vocab Vocab::load(std::istream& in) {
  Vocab v;
  v.tokens_.clear();
  v.ids_.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line != kPadToken) throw FormatError("vocab line 1 must be <PAD>");
    if (lineno == 2 && line != kUnkToken) throw FormatError("vocab line 2 must be <UNK>");
    if (line.empty()) throw FormatError("vocab line " + std::to_string(lineno) + " is empty");
    if (v.ids_.count(line)) throw FormatError("vocab line " + std::to_string(lineno) + " repeats '" + line + "'");
    v.add(line);
  }
  if (v.tokens_.size() < 2) throw FormatError("vocab must start with <PAD> and <UNK>");
  return v;
}

Vocab Vocab::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocab " + path);
  return load(in);
}

void Vocab::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

void Vocab::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write vocab " + path);
  save(out);
}

int Vocab::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> out;
  for (const auto& tok : tokenize(text)) out.push_back(id(tok));
  return out;
}

// ---------------------------------------------------------------------------
// examples

namespace {

std::vector<int> fit(std::vector<int> ids, std::size_t m) {
  ids.resize(m, kPadId);
  return ids;
}

}  // namespace

ConversationExample encode_example(const std::vector<std::string>& turns, std::string_view candidate,
                                   int label, std::int64_t group_id, Domain domain, const Vocab& vocab,
                                   const EncodeOptions& opts) {
  if (turns.empty()) throw FormatError("an example needs at least one turn");
  if (label != 0 && label != 1) throw FormatError("label must be 0 or 1, got " + std::to_string(label));
  ConversationExample ex;
  const std::size_t kept = std::min(turns.size(), opts.max_turns);
  ex.utterances.assign(opts.max_turns - kept, std::vector<int>(opts.seq_len, kPadId));
  for (std::size_t i = turns.size() - kept; i < turns.size(); ++i) {
    ex.utterances.push_back(fit(vocab.encode(turns[i]), opts.seq_len));
  }
  ex.candidate = fit(vocab.encode(candidate), opts.seq_len);
  ex.label = label;
  ex.group_id = group_id;
  ex.domain = domain;
  return ex;
}

std::vector<RawExample> read_dataset(std::istream& in, std::size_t max_turns) {
  std::vector<RawExample> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && !line.empty() && line.front() == '#') continue;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string where = "dataset line " + std::to_string(lineno) + ": ";
    if (cols.size() < 3) throw FormatError(where + "expected label, at least one turn and a candidate");
    if (cols.size() - 2 > max_turns) {
      throw FormatError(where + std::to_string(cols.size() - 2) + " turns exceed max_turns " + std::to_string(max_turns));
    }
    RawExample row;
    if (cols[0] == "0") row.label = 0;
    else if (cols[0] == "1") row.label = 1;
    else throw FormatError(where + "invalid label '" + cols[0] + "'");
    row.turns.assign(cols.begin() + 1, cols.end() - 1);
    row.candidate = cols.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawExample> read_dataset_file(const std::string& path, std::size_t max_turns) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset " + path);
  return read_dataset(in, max_turns);
}

std::vector<ConversationExample> encode_dataset(const std::vector<RawExample>& rows, const Vocab& vocab,
                                                const EncodeOptions& opts, std::size_t group_size,
                                                Domain domain) {
  if (group_size > 0 && rows.size() % group_size != 0) {
    throw FormatError(std::to_string(rows.size()) + " rows do not divide into groups of " + std::to_string(group_size));
  }
  std::vector<ConversationExample> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto gid = static_cast<std::int64_t>(group_size > 0 ? i / group_size : i);
    out.push_back(encode_example(rows[i].turns, rows[i].candidate, rows[i].label, gid, domain, vocab, opts));
  }
  return out;
}

std::vector<ConversationExample> load_dataset(const std::string& path, const Vocab& vocab,
                                              const EncodeOptions& opts, std::size_t group_size,
                                              Domain domain) {
  return encode_dataset(read_dataset_file(path, opts.max_turns), vocab, opts, group_size, domain);
}

std::vector<std::string> corpus_texts(const std::vector<RawExample>& rows) {
  std::vector<std::string> texts;
  for (const auto& r : rows) {
    texts.insert(texts.end(), r.turns.begin(), r.turns.end());
    texts.push_back(r.candidate);
  }
  return texts;
}

Tensor make_embedding_table(std::size_t vocab_size, std::size_t dim, std::mt19937_64& rng) {
  Tensor t({vocab_size, dim}, true);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (std::size_t i = dim; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

void write_dataset(std::ostream& out, const std::vector<RawExample>& rows) {
  for (const auto& r : rows) {
    out << r.label;
    for (const auto& t : r.turns) out << '\t' << t;
    out << '\t' << r.candidate << '\n';
  }
}

}  // namespace ctxmatch
