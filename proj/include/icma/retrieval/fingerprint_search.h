#pragma once

#include <string_view>
#include <vector>

#include "icma/fingerprints.h"
#include "icma/retrieval/corpus.h"
#include "icma/retrieval/ranked_list.h"

namespace icma::retrieval {

/// Morgan fingerprints of a set of records, ranked by Dice similarity.
class FingerprintIndex {
public:
  static FingerprintIndex build(const std::vector<CorpusRecord> &records,
                                int radius = kDefaultMorganRadius,
                                std::size_t width = kDefaultFingerprintWidth);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string> &ids() const { return ids_; }
  const std::vector<FingerprintVector> &fingerprints() const { return fps_; }

  /// Throws RetrievalError(kParse) when the query does not parse. Pairs of
  /// empty fingerprints score 0.
  RankedList top_n(std::string_view query_smiles, std::size_t n,
                   std::string_view exclude_id = {}) const;

  RankedList top_n(const FingerprintVector &query, std::size_t n,
                   std::string_view exclude_id = {}) const;

private:
  int radius_ = kDefaultMorganRadius;
  std::size_t width_ = kDefaultFingerprintWidth;
  std::vector<std::string> ids_;
  std::vector<FingerprintVector> fps_;
};

}  // namespace icma::retrieval
