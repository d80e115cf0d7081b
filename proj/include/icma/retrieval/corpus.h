#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icma::retrieval {

enum class Split {
  kTrain,
  kValidation,
  kTest,
};

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

struct CorpusRecord {
  std::string id;
  std::string smiles;
  std::string caption;
  Split split = Split::kTrain;
};

class RetrievalError: public std::runtime_error {
public:
  enum class Kind {
    kEmptyCorpus,
    kFormat,
    kNonFinite,
    kUnknownId,
    kZeroVector,
    kParse,
    kIo,
  };

  RetrievalError(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) { }

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

struct QuarantinedRecord {
  CorpusRecord record;
  std::string reason;
};

/// Records whose SMILES parse. Rows with unparseable SMILES are kept aside
/// in `quarantined` rather than failing the load.
class Corpus {
public:
  Corpus() = default;
  /// Throws RetrievalError(kFormat) on duplicate ids.
  Corpus(std::vector<CorpusRecord> records,
         std::vector<QuarantinedRecord> quarantined = {});

  const std::vector<CorpusRecord> &records() const { return records_; }
  const std::vector<QuarantinedRecord> &quarantined() const {
    return quarantined_;
  }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const CorpusRecord *find(std::string_view id) const;

  /// Records of one split, in file order.
  std::vector<CorpusRecord> split(Split which) const;

  /// Concatenation; ids must stay unique.
  Corpus merged(const Corpus &other) const;

private:
  std::vector<CorpusRecord> records_;
  std::vector<QuarantinedRecord> quarantined_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads a tab-separated corpus with header `id<TAB>smiles<TAB>caption`
/// (the ChEBI-20 header `CID<TAB>SMILES<TAB>description` is accepted too).
Corpus read_corpus(std::istream &in, Split split);
Corpus load_corpus(const std::filesystem::path &path, Split split);

void write_corpus(std::ostream &out, const std::vector<CorpusRecord> &records);

}  // namespace icma::retrieval
