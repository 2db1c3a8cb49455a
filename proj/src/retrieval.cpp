#include "ctxmatch/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

namespace {

using nlohmann::json;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void normalize(SparseVector& v) {
  double n = 0;
  for (const auto& [_, w] : v) n += w * w;
  if (n == 0) return;
  n = std::sqrt(n);
  for (auto& [_, w] : v) w /= n;
}

}  // namespace

std::vector<BankEntry> read_bank(std::istream& in) {
  std::vector<BankEntry> bank;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 3) {
      throw FormatError("bank line " + std::to_string(lineno) + ": expected id<TAB>question<TAB>answer_id");
    }
    if (cols[0].empty()) throw FormatError("bank line " + std::to_string(lineno) + ": empty id");
    bank.push_back({std::move(cols[0]), std::move(cols[1]), std::move(cols[2])});
  }
  return bank;
}

std::vector<BankEntry> read_bank_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open question bank " + path);
  return read_bank(in);
}

TfIdfIndex TfIdfIndex::build(std::vector<BankEntry> bank) {
  TfIdfIndex idx;
  std::set<std::string> ids;
  for (const auto& e : bank) {
    if (!ids.insert(e.id).second) throw FormatError("duplicate question id " + e.id);
  }
  std::vector<std::map<std::string, std::size_t>> counts(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    for (auto& tok : tokenize(bank[i].question)) ++counts[i][tok];
    for (const auto& [tok, _] : counts[i]) idx.terms_.emplace(tok, 0);
  }
  std::size_t next = 0;
  for (auto& [_, id] : idx.terms_) id = next++;
  std::vector<std::size_t> df(idx.terms_.size(), 0);
  for (const auto& c : counts) {
    for (const auto& [tok, _] : c) ++df[idx.terms_.at(tok)];
  }
  const auto n = static_cast<double>(bank.size());
  idx.idf_.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) idx.idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  idx.vectors_.resize(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    auto& v = idx.vectors_[i];
    for (const auto& [tok, tf] : counts[i]) {
      const auto t = idx.terms_.at(tok);
      v.emplace_back(t, static_cast<double>(tf) * idx.idf_[t]);
    }
    std::sort(v.begin(), v.end());
    normalize(v);
  }
  idx.bank_ = std::move(bank);
  return idx;
}

double TfIdfIndex::idf(const std::string& term) const {
  const auto it = terms_.find(term);
  return it == terms_.end() ? 0.0 : idf_[it->second];
}

SparseVector TfIdfIndex::vectorize(std::string_view text) const {
  std::map<std::size_t, double> tf;
  for (const auto& tok : tokenize(text)) {
    const auto it = terms_.find(tok);
    if (it != terms_.end()) tf[it->second] += 1.0;
  }
  SparseVector v;
  for (const auto& [t, c] : tf) v.emplace_back(t, c * idf_[t]);
  normalize(v);
  return v;
}

std::string context_query(std::span<const std::string> turns) {
  const std::size_t first = turns.size() > kContextTurns ? turns.size() - kContextTurns : 0;
  std::string q;
  for (std::size_t i = first; i < turns.size(); ++i) {
    if (!q.empty()) q += ' ';
    q += turns[i];
  }
  return q;
}

std::vector<Hit> TfIdfIndex::callback(std::span<const std::string> turns, std::size_t k) const {
  if (k == 0) throw UsageError("callback needs k >= 1");
  const SparseVector q = vectorize(context_query(turns));
  std::vector<Hit> hits;
  if (q.empty()) return hits;
  for (std::size_t i = 0; i < bank_.size(); ++i) {
    const double s = dot(q, vectors_[i]);
    if (s > 0) hits.push_back({i, bank_[i].id, s});
  }
  const auto keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    [](const Hit& a, const Hit& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; });
  hits.resize(keep);
  return hits;
}

RerankResponse rerank(std::span<const std::string> turns, const TfIdfIndex& index, const AnyModel& model,
                      const Vocab& vocab, std::size_t k) {
  RerankResponse resp;
  const auto hits = index.callback(turns, k);
  if (hits.empty()) return resp;
  const ModelConfig& cfg = model.config();
  const EncodeOptions opts{cfg.seq_len, cfg.max_turns};
  const std::vector<std::string> context(turns.begin(), turns.end());
  std::vector<ConversationExample> batch;
  batch.reserve(hits.size());
  for (const auto& h : hits) {
    resp.callback.push_back(h.id);
    batch.push_back(encode_example(context, index.entry(h.index).question, 0, 0, Domain::target, vocab, opts));
  }
  const auto scores = model.score_batch(batch);
  std::vector<std::size_t> order(hits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (auto i : order) resp.ranked.push_back({hits[i].id, scores[i]});
  return resp;
}

std::string to_json(const RerankResponse& r) {
  json j;
  j["ranked"] = json::array();
  for (const auto& q : r.ranked) j["ranked"].push_back({{"id", q.id}, {"score", q.score}});
  j["callback"] = r.callback;
  return dump(j);
}

std::size_t serve(std::istream& in, std::ostream& out, const TfIdfIndex& index, const AnyModel& model,
                  const Vocab& vocab, std::size_t default_k) {
  std::string line;
  std::size_t handled = 0;
  while (std::getline(in, line)) {
    ++handled;
    std::string reply;
    try {
      const json req = json::parse(line);
      if (!req.is_object() || !req.contains("turns") || !req["turns"].is_array()) {
        throw FormatError("request must be an object with a \"turns\" array");
      }
      std::vector<std::string> turns;
      for (const auto& t : req["turns"]) {
        if (!t.is_string()) throw FormatError("every turn must be a string");
        turns.push_back(t.get<std::string>());
      }
      std::size_t k = default_k;
      if (req.contains("k")) {
        if (!req["k"].is_number_integer() || req["k"].get<long long>() < 1) {
          throw FormatError("\"k\" must be a positive integer");
        }
        k = static_cast<std::size_t>(req["k"].get<long long>());
      }
      reply = to_json(rerank(turns, index, model, vocab, k));
    } catch (const json::exception& e) {
      reply = dump(json{{"error", std::string("invalid JSON: ") + e.what()}});
    } catch (const std::exception& e) {
      reply = dump(json{{"error", e.what()}});
    }
    out << reply << '\n' << std::flush;
  }
  return handled;
}

}  // namespace ctxmatch
