#include "icma/retrieval/bm25.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace icma::retrieval {

namespace {

bool token_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c == '-' || c >= 0x80;
}

constexpr std::string_view kIndexFormat = "icma-bm25";
constexpr int kIndexVersion = 1;

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty() && current.find_first_not_of('-') != std::string::npos) {
      tokens.push_back(current);
    }
    current.clear();
  };
  for (char ch: text) {
    const auto c = static_cast<unsigned char>(ch);
    if (token_byte(c)) {
      current += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Bm25Index Bm25Index::build(const std::vector<CorpusRecord> &records,
                           Bm25Params params) {
  if (!(params.k1 > 0.0)) throw std::invalid_argument("BM25 k1 must be positive");
  if (!(params.b >= 0.0 && params.b <= 1.0)) {
    throw std::invalid_argument("BM25 b must lie in [0, 1]");
  }

  Bm25Index index;
  index.params_ = params;
  for (const CorpusRecord &record: records) {
    if (record.split != Split::kTrain) continue;
    const std::size_t doc = index.doc_ids_.size();
    const auto tokens = tokenize(record.caption);
    index.doc_ids_.push_back(record.id);
    index.doc_len_.push_back(static_cast<int>(tokens.size()));

    std::map<std::string_view, int> tf;
    for (const auto &t: tokens) ++tf[t];
    for (const auto &[term, count]: tf) {
      index.postings_[std::string(term)].push_back({ doc, count });
    }
  }
  if (index.doc_ids_.empty()) {
    throw RetrievalError(RetrievalError::Kind::kEmptyCorpus,
                         "no training records to index");
  }
  const double total = std::accumulate(index.doc_len_.begin(),
                                       index.doc_len_.end(), 0.0);
  index.avgdl_ = total / static_cast<double>(index.doc_len_.size());
  return index;
}

std::size_t Bm25Index::doc_frequency(const std::string &term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::idf(const std::string &term) const {
  const auto n = static_cast<double>(num_docs());
  const auto df = static_cast<double>(doc_frequency(term));
  return std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
}

std::vector<double> Bm25Index::score_all(std::string_view query) const {
  std::vector<double> scores(num_docs(), 0.0);
  const double k1 = params_.k1;
  const double b = params_.b;
  for (const std::string &term: tokenize(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double weight = idf(term);
    if (weight == 0.0) continue;
    for (const Posting &p: it->second) {
      const double tf = p.tf;
      const double norm = 1.0 - b + b * doc_len_[p.doc] / avgdl_;
      scores[p.doc] += weight * tf * (k1 + 1.0) / (tf + k1 * norm);
    }
  }
  return scores;
}

RankedList Bm25Index::top_n(std::string_view query, std::size_t n,
                            std::string_view exclude_id) const {
  if (n == 0) throw std::invalid_argument("top_n requires n >= 1");
  return retrieval::top_n(doc_ids_, score_all(query), n, exclude_id);
}

void Bm25Index::save(const std::filesystem::path &path) const {
  nlohmann::json j;
  j["format"] = kIndexFormat;
  j["version"] = kIndexVersion;
  j["k1"] = params_.k1;
  j["b"] = params_.b;
  j["doc_ids"] = doc_ids_;
  j["doc_len"] = doc_len_;
  // Sorted terms keep the file byte-stable across runs.
  std::map<std::string, const std::vector<Posting> *> sorted;
  for (const auto &[term, list]: postings_) sorted.emplace(term, &list);
  nlohmann::json postings = nlohmann::json::object();
  for (const auto &[term, list]: sorted) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Posting &p: *list) arr.push_back({ p.doc, p.tf });
    postings[term] = std::move(arr);
  }
  j["postings"] = std::move(postings);

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw RetrievalError(RetrievalError::Kind::kIo,
                         "cannot write index file " + path.string());
  }
  out << j.dump() << '\n';
  if (!out) {
    throw RetrievalError(RetrievalError::Kind::kIo,
                         "write failed for " + path.string());
  }
}

Bm25Index Bm25Index::load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RetrievalError(RetrievalError::Kind::kIo,
                         "cannot open index file " + path.string());
  }
  Bm25Index index;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format") != kIndexFormat || j.at("version") != kIndexVersion) {
      throw RetrievalError(RetrievalError::Kind::kFormat, "not a BM25 index file");
    }
    index.params_.k1 = j.at("k1").get<double>();
    index.params_.b = j.at("b").get<double>();
    index.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
    index.doc_len_ = j.at("doc_len").get<std::vector<int>>();
    if (index.doc_ids_.empty() || index.doc_ids_.size() != index.doc_len_.size()) {
      throw RetrievalError(RetrievalError::Kind::kFormat,
                           "index document tables are inconsistent");
    }
    for (const auto &[term, arr]: j.at("postings").items()) {
      auto &list = index.postings_[term];
      for (const auto &entry: arr) {
        const auto doc = entry.at(0).get<std::size_t>();
        if (doc >= index.doc_ids_.size()) {
          throw RetrievalError(RetrievalError::Kind::kFormat,
                               "posting refers to a missing document");
        }
        list.push_back({ doc, entry.at(1).get<int>() });
      }
    }
  } catch (const nlohmann::json::exception &e) {
    throw RetrievalError(RetrievalError::Kind::kFormat,
                         std::string("malformed index file: ") + e.what());
  }
  const double total = std::accumulate(index.doc_len_.begin(),
                                       index.doc_len_.end(), 0.0);
  index.avgdl_ = total / static_cast<double>(index.doc_len_.size());
  return index;
}

}  // namespace icma::retrieval
