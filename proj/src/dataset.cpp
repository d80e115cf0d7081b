#include "icma/dataset.h"

#include <algorithm>
#include <atomic>
#include <ostream>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "icma/random.h"
#include "icma/retrieval/fingerprint_search.h"
#include "json.hpp"

namespace icma {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
  case Strategy::kBm25:
    return "bm25";
  case Strategy::kEmbedding:
    return "embedding";
  case Strategy::kFingerprint:
    return "fingerprint";
  case Strategy::kRandom:
    return "random";
  }
  return "bm25";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  for (Strategy s: { Strategy::kBm25, Strategy::kEmbedding, Strategy::kFingerprint,
                     Strategy::kRandom }) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

bool strategy_fits_task(Strategy strategy, prompt::Task task) {
  switch (strategy) {
  case Strategy::kBm25:
    return task == prompt::Task::kCap2Mol;
  case Strategy::kEmbedding:
  case Strategy::kFingerprint:
    return task == prompt::Task::kMol2Cap;
  case Strategy::kRandom:
    return true;
  }
  return false;
}

namespace {

std::string_view excluded_id(const retrieval::CorpusRecord &query) {
  return query.split == retrieval::Split::kTrain ? std::string_view(query.id)
                                                 : std::string_view {};
}

class Bm25Retriever: public Retriever {
public:
  Bm25Retriever(const retrieval::Corpus &pool, retrieval::Bm25Params params)
      : index_(retrieval::Bm25Index::build(pool.records(), params)) { }

  retrieval::RankedList retrieve(const retrieval::CorpusRecord &query,
                                 std::size_t N) const override {
    return index_.top_n(query.caption, N, excluded_id(query));
  }

private:
  retrieval::Bm25Index index_;
};

class EmbeddingRetriever: public Retriever {
public:
  EmbeddingRetriever(const retrieval::Corpus &pool,
                     const retrieval::EmbeddingStore<double> &store)
      : store_(store) {
    std::vector<std::string> ids;
    ids.reserve(pool.size());
    for (const auto &r: pool.records()) ids.push_back(r.id);
    pool_ = store.subset(ids);
    if (pool_.size() < ids.size()) {
      spdlog::warn("{} training records have no embedding and cannot be retrieved",
                   ids.size() - pool_.size());
    }
  }

  retrieval::RankedList retrieve(const retrieval::CorpusRecord &query,
                                 std::size_t N) const override {
    return retrieval::cosine_topn(pool_, store_.vector(query.id), N,
                                  excluded_id(query));
  }

private:
  const retrieval::EmbeddingStore<double> &store_;
  retrieval::EmbeddingStore<double> pool_;
};

class FingerprintRetriever: public Retriever {
public:
  FingerprintRetriever(const retrieval::Corpus &pool, int radius, std::size_t width)
      : index_(retrieval::FingerprintIndex::build(pool.records(), radius, width)) { }

  retrieval::RankedList retrieve(const retrieval::CorpusRecord &query,
                                 std::size_t N) const override {
    return index_.top_n(query.smiles, N, excluded_id(query));
  }

private:
  retrieval::FingerprintIndex index_;
};

/// N distinct pool records drawn uniformly without replacement from the
/// query's own stream; the k-th draw scores (N - k) / N.
class RandomRetriever: public Retriever {
public:
  RandomRetriever(const retrieval::Corpus &pool, std::uint64_t seed)
      : seed_(~seed) {
    ids_.reserve(pool.size());
    for (const auto &r: pool.records()) ids_.push_back(r.id);
    members_.insert(ids_.begin(), ids_.end());
  }

  retrieval::RankedList retrieve(const retrieval::CorpusRecord &query,
                                 std::size_t N) const override {
    Xoshiro256 rng = record_stream(seed_, query.id);
    const std::string_view skip = excluded_id(query);
    const bool self_in_pool = !skip.empty() && members_.count(std::string(skip)) > 0;
    const std::size_t m = std::min(N, ids_.size() - (self_in_pool ? 1 : 0));

    std::vector<std::size_t> drawn;
    std::unordered_set<std::size_t> taken;
    const double size = static_cast<double>(ids_.size());
    while (drawn.size() < m) {
      const auto i = static_cast<std::size_t>(rng.uniform() * size);
      if (ids_[i] == skip || !taken.insert(i).second) continue;
      drawn.push_back(i);
    }
    retrieval::RankedList out;
    for (std::size_t k = 0; k < m; ++k) {
      out.entries.push_back({ ids_[drawn[k]],
                              static_cast<double>(m - k) / static_cast<double>(m) });
    }
    return out;
  }

private:
  std::vector<std::string> ids_;
  std::unordered_set<std::string> members_;
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<Retriever> make_retriever(Strategy strategy,
                                          const retrieval::Corpus &pool,
                                          const RetrieverOptions &options) {
  switch (strategy) {
  case Strategy::kBm25:
    return std::make_unique<Bm25Retriever>(pool, options.bm25);
  case Strategy::kEmbedding:
    if (options.embeddings == nullptr) {
      throw std::invalid_argument("embedding strategy needs an embedding store");
    }
    return std::make_unique<EmbeddingRetriever>(pool, *options.embeddings);
  case Strategy::kFingerprint:
    return std::make_unique<FingerprintRetriever>(pool, options.radius, options.width);
  case Strategy::kRandom:
    return std::make_unique<RandomRetriever>(pool, options.seed);
  }
  throw std::invalid_argument("unknown retrieval strategy");
}

EmittedRecord assemble_record(const retrieval::CorpusRecord &query,
                              const retrieval::Corpus &pool,
                              const Retriever &retriever, const DatasetConfig &cfg) {
  EmittedRecord out;
  out.id = query.id;
  const retrieval::RankedList rough = retriever.retrieve(query, cfg.walk.N);
  out.outcome = random_walk_select_padded(rough, cfg.walk, query.id);

  auto examples = sequence_reverse(out.outcome, [&](const SelectedExample &e) {
    return prompt::make_example(*pool.find(e.id), cfg.task, e.rank);
  });
  std::optional<std::string> target;
  if (cfg.include_query_target) {
    target = std::string(prompt::query_target_of(query, cfg.task));
  }
  out.bundle = prompt::render_prompt(cfg.task, std::move(examples),
                                     std::string(prompt::query_input_of(query, cfg.task)),
                                     std::move(target));
  if (cfg.cutoff) {
    auto truncated = prompt::truncate_to_cutoff(out.bundle, *cfg.cutoff, cfg.counter);
    out.bundle = std::move(truncated.bundle);
    out.truncated_examples = truncated.removed;
  }
  return out;
}

std::string to_json_line(const EmittedRecord &record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["task"] = prompt::to_string(record.bundle.task);
  j["rendered"] = record.bundle.rendered;
  nlohmann::ordered_json segments = nlohmann::ordered_json::array();
  for (const prompt::Segment &s: record.bundle.segments) {
    segments.push_back({ { "label", s.label() }, { "start", s.start }, { "end", s.end } });
  }
  j["segments"] = std::move(segments);
  std::vector<std::size_t> ranks;
  for (const SelectedExample &e: record.outcome.selected) ranks.push_back(e.rank);
  j["selected_ranks"] = ranks;
  j["early_stopped"] = record.outcome.early_stopped;
  j["truncated_examples"] = record.truncated_examples;
  std::vector<std::string> example_ids;
  for (const prompt::ContextExample &e: record.bundle.examples) {
    example_ids.push_back(e.source_id);
  }
  j["example_ids"] = example_ids;
  return j.dump();
}

EmissionStats emit_dataset(const std::vector<retrieval::CorpusRecord> &queries,
                           const retrieval::Corpus &pool,
                           const Retriever &retriever, const DatasetConfig &cfg,
                           std::ostream &out) {
  cfg.walk.validate();
  const std::size_t workers = std::max<std::size_t>(1, cfg.workers);
  constexpr std::size_t kChunk = 2048;

  struct Result {
    std::optional<std::string> line;
    std::size_t examples = 0;
    std::size_t truncated = 0;
    bool early_stopped = false;
  };

  EmissionStats stats;
  stats.records = queries.size();
  std::vector<Result> results;
  for (std::size_t begin = 0; begin < queries.size(); begin += kChunk) {
    const std::size_t end = std::min(queries.size(), begin + kChunk);
    results.assign(end - begin, Result {});
    std::atomic<std::size_t> next { begin };

    auto work = [&]() {
      for (std::size_t i = next++; i < end; i = next++) {
        const retrieval::CorpusRecord &query = queries[i];
        Result &res = results[i - begin];
        try {
          const EmittedRecord record = assemble_record(query, pool, retriever, cfg);
          res.line = to_json_line(record);
          res.examples = record.bundle.examples.size();
          res.truncated = record.truncated_examples;
          res.early_stopped = record.outcome.early_stopped;
        } catch (const std::exception &e) {
          spdlog::warn("skipped record {}: {}", query.id, e.what());
        }
      }
    };
    {
      std::vector<std::jthread> pool_threads;
      for (std::size_t w = 1; w < workers; ++w) pool_threads.emplace_back(work);
      work();
    }

    for (const Result &res: results) {
      if (!res.line) {
        ++stats.skipped;
        continue;
      }
      out << *res.line << '\n';
      ++stats.emitted;
      stats.total_examples += res.examples;
      if (res.truncated > 0) ++stats.truncated_records;
      stats.truncated_examples += res.truncated;
      if (res.early_stopped) ++stats.early_stops;
    }
  }
  return stats;
}

DatasetLine parse_dataset_line(std::string_view line) {
  DatasetLine out;
  try {
    const auto j = nlohmann::json::parse(line);
    out.id = j.at("id").get<std::string>();
    const auto task = prompt::parse_task(j.at("task").get<std::string>());
    if (!task) {
      throw prompt::PromptError(prompt::PromptError::Kind::kBadSegments,
                                "unknown task in dataset line");
    }
    out.bundle.task = *task;
    out.bundle.rendered = j.at("rendered").get<std::string>();
    for (const auto &s: j.at("segments")) {
      auto seg = prompt::Segment::from_label(s.at("label").get<std::string>(),
                                             s.at("start").get<std::size_t>(),
                                             s.at("end").get<std::size_t>());
      if (!seg) {
        throw prompt::PromptError(prompt::PromptError::Kind::kBadSegments,
                                  "unknown segment label in record " + out.id);
      }
      out.bundle.segments.push_back(*seg);
    }
  } catch (const nlohmann::json::exception &e) {
    throw prompt::PromptError(prompt::PromptError::Kind::kBadSegments,
                              std::string("malformed dataset line: ") + e.what());
  }
  prompt::check_tiling(out.bundle);
  return out;
}

TokenLogprobs parse_logprob_line(std::string_view line) {
  TokenLogprobs out;
  try {
    const auto j = nlohmann::json::parse(line);
    out.id = j.at("id").get<std::string>();
    for (const auto &t: j.at("tokens")) {
      if (!t.is_array() || t.size() != 3) {
        throw prompt::PromptError(prompt::PromptError::Kind::kSpanMismatch,
                                  "token entries must be [start, end, logprob]");
      }
      out.tokens.push_back({ t[0].get<std::size_t>(), t[1].get<std::size_t>(),
                             t[2].get<double>() });
    }
  } catch (const nlohmann::json::exception &e) {
    throw prompt::PromptError(prompt::PromptError::Kind::kSpanMismatch,
                              std::string("malformed logprob line: ") + e.what());
  }
  return out;
}

}  // namespace icma
