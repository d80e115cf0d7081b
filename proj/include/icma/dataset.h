#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icma/fingerprints.h"
#include "icma/prompt.h"
#include "icma/rerank.h"
#include "icma/retrieval/bm25.h"
#include "icma/retrieval/corpus.h"
#include "icma/retrieval/embeddings.h"
#include "icma/retrieval/ranked_list.h"

namespace icma {

enum class Strategy {
  kBm25,
  kEmbedding,
  kFingerprint,
  kRandom,
};

std::string_view to_string(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view text);

/// Whether a strategy reads only the query side available at inference
/// time: captions for Cap2Mol, molecules for Mol2Cap.
bool strategy_fits_task(Strategy strategy, prompt::Task task);

/// Rough top-N retrieval from the training pool. Training queries never
/// retrieve themselves.
class Retriever {
public:
  virtual ~Retriever() = default;
  virtual retrieval::RankedList retrieve(const retrieval::CorpusRecord &query,
                                         std::size_t N) const = 0;
};

struct RetrieverOptions {
  retrieval::Bm25Params bm25;
  int radius = kDefaultMorganRadius;
  std::size_t width = kDefaultFingerprintWidth;
  std::uint64_t seed = 0;
  /// Required for Strategy::kEmbedding; must outlive the retriever.
  const retrieval::EmbeddingStore<double> *embeddings = nullptr;
};

std::unique_ptr<Retriever> make_retriever(Strategy strategy,
                                          const retrieval::Corpus &pool,
                                          const RetrieverOptions &options);

struct DatasetConfig {
  prompt::Task task = prompt::Task::kMol2Cap;
  Strategy strategy = Strategy::kEmbedding;
  RandomWalkConfig walk;
  std::optional<std::size_t> cutoff;
  prompt::UnitCounter counter = prompt::UnitCounter::kWords;
  std::size_t workers = 1;
  /// Training queries render their target; evaluation queries do not.
  bool include_query_target = true;
};

struct EmissionStats {
  std::size_t records = 0;
  std::size_t emitted = 0;
  std::size_t skipped = 0;
  std::size_t total_examples = 0;
  std::size_t truncated_records = 0;
  std::size_t truncated_examples = 0;
  std::size_t early_stops = 0;

  double mean_context_size() const {
    return emitted == 0 ? 0.0
                        : static_cast<double>(total_examples) / static_cast<double>(emitted);
  }
};

struct EmittedRecord {
  std::string id;
  prompt::PromptBundle bundle;
  SelectionOutcome outcome;
  std::size_t truncated_examples = 0;
};

/// One record's prompt: retrieve, walk, reverse, render, truncate.
EmittedRecord assemble_record(const retrieval::CorpusRecord &query,
                              const retrieval::Corpus &pool,
                              const Retriever &retriever, const DatasetConfig &cfg);

/// Writes one JSON object per query to `out`, in query order regardless of
/// the worker count. Records whose retrieval or assembly fails are logged,
/// counted as skipped and left out.
EmissionStats emit_dataset(const std::vector<retrieval::CorpusRecord> &queries,
                           const retrieval::Corpus &pool,
                           const Retriever &retriever, const DatasetConfig &cfg,
                           std::ostream &out);

std::string to_json_line(const EmittedRecord &record);

/// Rendered prompt and segments of one dataset line. Throws
/// prompt::PromptError(kBadSegments) on malformed input.
struct DatasetLine {
  std::string id;
  prompt::PromptBundle bundle;
};
DatasetLine parse_dataset_line(std::string_view line);

struct TokenLogprobs {
  std::string id;
  std::vector<prompt::TokenLogprob> tokens;
};
/// `{"id": ..., "tokens": [[start, end, logprob], ...]}`.
TokenLogprobs parse_logprob_line(std::string_view line);

}  // namespace icma
