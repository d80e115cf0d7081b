#pragma once

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "icma/retrieval/corpus.h"
#include "icma/retrieval/ranked_list.h"

namespace icma::retrieval {

/// Molecule-graph embeddings produced by an external encoder, one row per
/// record id. All rows share one dimensionality and are finite.
template <typename Scalar>
class EmbeddingStore {
public:
  using Matrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  EmbeddingStore() = default;
  EmbeddingStore(Eigen::Index dim, std::vector<std::string> ids, Matrix vectors);

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string> &ids() const { return ids_; }
  const Matrix &vectors() const { return vectors_; }

  std::optional<Eigen::Index> row_of(std::string_view id) const;

  /// Throws RetrievalError(kUnknownId).
  auto vector(std::string_view id) const {
    const auto row = row_of(id);
    if (!row) {
      throw RetrievalError(RetrievalError::Kind::kUnknownId,
                           "no embedding for id '" + std::string(id) + "'");
    }
    return vectors_.row(*row);
  }

  /// Store restricted to the given ids, in the order given. Unknown ids are
  /// skipped.
  EmbeddingStore subset(std::span<const std::string> keep) const;

private:
  Eigen::Index dim_ = 0;
  std::vector<std::string> ids_;
  Matrix vectors_;
  std::unordered_map<std::string, Eigen::Index> rows_;
};

/// Format: first line `dim=<k>`, then `id<TAB>v1,v2,...,vk` per record.
template <typename Scalar = double>
EmbeddingStore<Scalar> read_embeddings(std::istream &in);

template <typename Scalar = double>
EmbeddingStore<Scalar> load_embeddings(const std::filesystem::path &path);

/// Shortest round-trip decimal representation, so a reload is bit-exact.
template <typename Scalar>
void write_embeddings(std::ostream &out, const EmbeddingStore<Scalar> &store);

template <typename Scalar>
void save_embeddings(const std::filesystem::path &path,
                     const EmbeddingStore<Scalar> &store);

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA> &a,
                                            const Eigen::MatrixBase<DerivedB> &b) {
  const auto na = a.norm();
  const auto nb = b.norm();
  if (na == 0 || nb == 0) {
    throw RetrievalError(RetrievalError::Kind::kZeroVector,
                         "cosine similarity of a zero vector");
  }
  return a.dot(b) / (na * nb);
}

/// Cosine ranking of every stored vector against `query`.
template <typename Scalar, typename Derived>
RankedList cosine_topn(const EmbeddingStore<Scalar> &store,
                       const Eigen::MatrixBase<Derived> &query, std::size_t n,
                       std::string_view exclude_id = {}) {
  if (n == 0) throw std::invalid_argument("top_n requires n >= 1");
  if (query.size() != store.dim()) {
    throw RetrievalError(RetrievalError::Kind::kFormat,
                         "query dimensionality differs from the store");
  }
  const Scalar query_norm = query.norm();
  if (query_norm == 0) {
    throw RetrievalError(RetrievalError::Kind::kZeroVector, "query vector is zero");
  }
  const auto norms = store.vectors().rowwise().norm().eval();
  if (store.size() > 0 && norms.minCoeff() == 0) {
    throw RetrievalError(RetrievalError::Kind::kZeroVector,
                         "store contains a zero vector");
  }
  const auto dots =
      (store.vectors() * query.derived().reshaped().template cast<Scalar>()).eval();

  std::vector<double> scores(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    scores[i] = static_cast<double>(dots(r) / (norms(r) * query_norm));
  }
  return top_n(store.ids(), scores, n, exclude_id);
}

/// Ranks the store against one of its own records.
template <typename Scalar>
RankedList cosine_topn(const EmbeddingStore<Scalar> &store,
                       std::string_view query_id, std::size_t n,
                       bool exclude_self) {
  const auto query = store.vector(query_id);
  return cosine_topn(store, query, n, exclude_self ? query_id : std::string_view {});
}

extern template class EmbeddingStore<float>;
extern template class EmbeddingStore<double>;

}  // namespace icma::retrieval
