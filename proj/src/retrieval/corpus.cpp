#include "icma/retrieval/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <spdlog/spdlog.h>

#include "icma/chem/smiles.h"

namespace icma::retrieval {

std::string_view to_string(Split split) {
  switch (split) {
  case Split::kTrain:
    return "train";
  case Split::kValidation:
    return "validation";
  case Split::kTest:
    return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "validation") return Split::kValidation;
  if (text == "test") return Split::kTest;
  return std::nullopt;
}

Corpus::Corpus(std::vector<CorpusRecord> records,
               std::vector<QuarantinedRecord> quarantined)
    : records_(std::move(records)), quarantined_(std::move(quarantined)) {
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!by_id_.emplace(records_[i].id, i).second) {
      throw RetrievalError(RetrievalError::Kind::kFormat,
                           "duplicate record id '" + records_[i].id + "'");
    }
  }
}

const CorpusRecord *Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::vector<CorpusRecord> Corpus::split(Split which) const {
  std::vector<CorpusRecord> out;
  std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
               [&](const CorpusRecord &r) { return r.split == which; });
  return out;
}

Corpus Corpus::merged(const Corpus &other) const {
  std::vector<CorpusRecord> records = records_;
  records.insert(records.end(), other.records_.begin(), other.records_.end());
  std::vector<QuarantinedRecord> quarantined = quarantined_;
  quarantined.insert(quarantined.end(), other.quarantined_.begin(),
                     other.quarantined_.end());
  return Corpus(std::move(records), std::move(quarantined));
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  // The caption keeps any further tabs.
  for (int i = 0; i < 2; ++i) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) break;
    fields.push_back(line.substr(0, tab));
    line.remove_prefix(tab + 1);
  }
  fields.push_back(line);
  return fields;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Corpus read_corpus(std::istream &in, Split split) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<CorpusRecord> records;
  std::vector<QuarantinedRecord> quarantined;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (!header_seen) {
      header_seen = true;
      const bool ok = fields.size() == 3
                      && (lower(fields[0]) == "id" || lower(fields[0]) == "cid")
                      && lower(fields[1]) == "smiles"
                      && (lower(fields[2]) == "caption"
                          || lower(fields[2]) == "description");
      if (!ok) {
        throw RetrievalError(RetrievalError::Kind::kFormat,
                             "corpus header must be id<TAB>smiles<TAB>caption");
      }
      continue;
    }
    if (fields.size() != 3 || fields[0].empty()) {
      throw RetrievalError(RetrievalError::Kind::kFormat,
                           "line " + std::to_string(line_no)
                               + ": expected three tab-separated fields");
    }

    CorpusRecord record { std::string(fields[0]), std::string(fields[1]),
                          std::string(fields[2]), split };
    try {
      chem::parse_smiles(record.smiles);
      records.push_back(std::move(record));
    } catch (const chem::SmilesError &e) {
      spdlog::warn("quarantined record {} (line {}): {}", record.id, line_no,
                   e.what());
      quarantined.push_back({ std::move(record), e.what() });
    }
  }
  if (in.bad()) {
    throw RetrievalError(RetrievalError::Kind::kIo, "read error on corpus stream");
  }
  if (!header_seen) {
    throw RetrievalError(RetrievalError::Kind::kFormat, "corpus has no header");
  }
  return Corpus(std::move(records), std::move(quarantined));
}

Corpus load_corpus(const std::filesystem::path &path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RetrievalError(RetrievalError::Kind::kIo,
                         "cannot open corpus file " + path.string());
  }
  return read_corpus(in, split);
}

void write_corpus(std::ostream &out, const std::vector<CorpusRecord> &records) {
  out << "id\tsmiles\tcaption\n";
  for (const CorpusRecord &r: records) {
    out << r.id << '\t' << r.smiles << '\t' << r.caption << '\n';
  }
}

}  // namespace icma::retrieval
