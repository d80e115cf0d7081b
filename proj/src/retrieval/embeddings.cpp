#include "icma/retrieval/embeddings.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace icma::retrieval {

template <typename Scalar>
EmbeddingStore<Scalar>::EmbeddingStore(Eigen::Index dim,
                                       std::vector<std::string> ids,
                                       Matrix vectors)
    : dim_(dim), ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (dim_ <= 0) {
    throw RetrievalError(RetrievalError::Kind::kFormat,
                         "embedding dimensionality must be positive");
  }
  if (vectors_.rows() != static_cast<Eigen::Index>(ids_.size())
      || (vectors_.rows() > 0 && vectors_.cols() != dim_)) {
    throw RetrievalError(RetrievalError::Kind::kFormat,
                         "embedding matrix does not match ids and dim");
  }
  if (!vectors_.allFinite()) {
    throw RetrievalError(RetrievalError::Kind::kNonFinite,
                         "embedding contains NaN or Inf");
  }
  rows_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!rows_.emplace(ids_[i], static_cast<Eigen::Index>(i)).second) {
      throw RetrievalError(RetrievalError::Kind::kFormat,
                           "duplicate embedding id '" + ids_[i] + "'");
    }
  }
}

template <typename Scalar>
std::optional<Eigen::Index>
EmbeddingStore<Scalar>::row_of(std::string_view id) const {
  auto it = rows_.find(std::string(id));
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

template <typename Scalar>
EmbeddingStore<Scalar>
EmbeddingStore<Scalar>::subset(std::span<const std::string> keep) const {
  std::vector<std::string> ids;
  std::vector<Eigen::Index> rows;
  for (const std::string &id: keep) {
    if (auto r = row_of(id)) {
      ids.push_back(id);
      rows.push_back(*r);
    }
  }
  Matrix sub(static_cast<Eigen::Index>(rows.size()), dim_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = vectors_.row(rows[i]);
  }
  return EmbeddingStore(dim_, std::move(ids), std::move(sub));
}

namespace {

[[noreturn]] void format_error(std::size_t line_no, const std::string &what) {
  throw RetrievalError(RetrievalError::Kind::kFormat,
                       "embedding line " + std::to_string(line_no) + ": " + what);
}

template <typename Scalar>
Scalar parse_component(std::string_view text, std::size_t line_no) {
  Scalar value {};
  const char *first = text.data();
  const char *last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc::result_out_of_range) {
    throw RetrievalError(RetrievalError::Kind::kNonFinite,
                         "embedding line " + std::to_string(line_no)
                             + ": component out of range");
  }
  if (ec != std::errc() || ptr != last || first == last) {
    format_error(line_no, "bad number '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw RetrievalError(RetrievalError::Kind::kNonFinite,
                         "embedding line " + std::to_string(line_no)
                             + ": NaN or Inf component");
  }
  return value;
}

}  // namespace

template <typename Scalar>
EmbeddingStore<Scalar> read_embeddings(std::istream &in) {
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = 0;
  std::vector<std::string> ids;
  std::vector<Scalar> values;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (line.rfind("dim=", 0) != 0) format_error(line_no, "header must be dim=<k>");
      long long k = 0;
      const char *first = line.data() + 4;
      const char *last = line.data() + line.size();
      if (first == last || std::from_chars(first, last, k).ptr != last || k <= 0) {
        format_error(line_no, "header must be dim=<k>");
      }
      dim = static_cast<Eigen::Index>(k);
      continue;
    }
    if (line.empty()) continue;

    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) format_error(line_no, "expected id<TAB>vector");
    ids.push_back(line.substr(0, tab));

    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    Eigen::Index count = 0;
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_component<Scalar>(rest.substr(0, comma), line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (count != dim) {
      format_error(line_no, "expected " + std::to_string(dim) + " components, found "
                                + std::to_string(count));
    }
  }
  if (in.bad()) {
    throw RetrievalError(RetrievalError::Kind::kIo, "read error on embedding stream");
  }
  if (line_no == 0) format_error(1, "missing dim=<k> header");

  using Matrix = typename EmbeddingStore<Scalar>::Matrix;
  const auto rows = static_cast<Eigen::Index>(ids.size());
  Matrix vectors = Eigen::Map<const Matrix>(values.data(), rows, dim);
  return EmbeddingStore<Scalar>(dim, std::move(ids), std::move(vectors));
}

template <typename Scalar>
EmbeddingStore<Scalar> load_embeddings(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RetrievalError(RetrievalError::Kind::kIo,
                         "cannot open embedding file " + path.string());
  }
  return read_embeddings<Scalar>(in);
}

template <typename Scalar>
void write_embeddings(std::ostream &out, const EmbeddingStore<Scalar> &store) {
  out << "dim=" << store.dim() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.ids()[i] << '\t';
    const auto row = store.vectors().row(static_cast<Eigen::Index>(i));
    for (Eigen::Index c = 0; c < row.size(); ++c) {
      if (c > 0) out << ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, row(c));
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

template <typename Scalar>
void save_embeddings(const std::filesystem::path &path,
                     const EmbeddingStore<Scalar> &store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw RetrievalError(RetrievalError::Kind::kIo,
                         "cannot write embedding file " + path.string());
  }
  write_embeddings(out, store);
  if (!out) {
    throw RetrievalError(RetrievalError::Kind::kIo, "write failed for " + path.string());
  }
}

template class EmbeddingStore<float>;
template class EmbeddingStore<double>;

template EmbeddingStore<float> read_embeddings<float>(std::istream &);
template EmbeddingStore<double> read_embeddings<double>(std::istream &);
template EmbeddingStore<float> load_embeddings<float>(const std::filesystem::path &);
template EmbeddingStore<double> load_embeddings<double>(const std::filesystem::path &);
template void write_embeddings<float>(std::ostream &, const EmbeddingStore<float> &);
template void write_embeddings<double>(std::ostream &, const EmbeddingStore<double> &);
template void save_embeddings<float>(const std::filesystem::path &,
                                     const EmbeddingStore<float> &);
template void save_embeddings<double>(const std::filesystem::path &,
                                      const EmbeddingStore<double> &);

}  // namespace icma::retrieval
