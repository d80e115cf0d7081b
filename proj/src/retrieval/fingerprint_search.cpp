#include "icma/retrieval/fingerprint_search.h"

#include <stdexcept>

#include "icma/chem/smiles.h"

namespace icma::retrieval {

namespace {

FingerprintVector fingerprint_of(std::string_view smiles, std::string_view id,
                                 int radius, std::size_t width) {
  try {
    return morgan_fingerprint(chem::parse_smiles(smiles), radius, width);
  } catch (const chem::SmilesError &e) {
    std::string what = "cannot parse SMILES";
    if (!id.empty()) what += " of '" + std::string(id) + "'";
    throw RetrievalError(RetrievalError::Kind::kParse, what + ": " + e.what());
  }
}

}  // namespace

FingerprintIndex FingerprintIndex::build(const std::vector<CorpusRecord> &records,
                                         int radius, std::size_t width) {
  FingerprintIndex index;
  index.radius_ = radius;
  index.width_ = width;
  index.ids_.reserve(records.size());
  index.fps_.reserve(records.size());
  for (const CorpusRecord &r: records) {
    index.ids_.push_back(r.id);
    index.fps_.push_back(fingerprint_of(r.smiles, r.id, radius, width));
  }
  return index;
}

RankedList FingerprintIndex::top_n(std::string_view query_smiles, std::size_t n,
                                   std::string_view exclude_id) const {
  return top_n(fingerprint_of(query_smiles, {}, radius_, width_), n, exclude_id);
}

RankedList FingerprintIndex::top_n(const FingerprintVector &query, std::size_t n,
                                   std::string_view exclude_id) const {
  if (n == 0) throw std::invalid_argument("top_n requires n >= 1");
  std::vector<double> scores(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    scores[i] = query.empty() && fps_[i].empty() ? 0.0 : dice(query, fps_[i]);
  }
  return retrieval::top_n(ids_, scores, n, exclude_id);
}

}  // namespace icma::retrieval
