#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icma/retrieval/corpus.h"
#include "icma/retrieval/ranked_list.h"

namespace icma::retrieval {

/// Lowercases ASCII and splits on every byte that is not a letter, digit,
/// hyphen or part of a multi-byte UTF-8 sequence. Hyphenated chemical names
/// ("2-hydroxy") stay whole; tokens made only of hyphens are dropped.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

struct Posting {
  std::size_t doc;
  int tf;
};

class Bm25Index {
public:
  /// Indexes the captions of the training records only.
  /// Throws RetrievalError(kEmptyCorpus) when there is nothing to index and
  /// std::invalid_argument for k1 <= 0 or b outside [0, 1].
  static Bm25Index build(const std::vector<CorpusRecord> &records,
                         Bm25Params params = {});

  std::size_t num_docs() const { return doc_ids_.size(); }
  double avgdl() const { return avgdl_; }
  const Bm25Params &params() const { return params_; }
  const std::vector<std::string> &doc_ids() const { return doc_ids_; }
  const std::vector<int> &doc_lengths() const { return doc_len_; }
  std::size_t doc_frequency(const std::string &term) const;

  /// max(0, ln((N - df + 0.5) / (df + 0.5))).
  double idf(const std::string &term) const;

  /// Score of every indexed document, in index order. Repeated query terms
  /// contribute once per occurrence.
  std::vector<double> score_all(std::string_view query) const;

  /// Top-n by score; zero-score documents fill remaining slots by id.
  RankedList top_n(std::string_view query, std::size_t n,
                   std::string_view exclude_id = {}) const;

  void save(const std::filesystem::path &path) const;
  static Bm25Index load(const std::filesystem::path &path);

private:
  Bm25Params params_;
  std::vector<std::string> doc_ids_;
  std::vector<int> doc_len_;
  double avgdl_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace icma::retrieval
