#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "icma/chem/smiles.h"
#include "icma/dataset.h"
#include "icma/metrics.h"
#include "icma/prompt.h"
#include "icma/rerank.h"
#include "icma/retrieval/bm25.h"
#include "icma/retrieval/corpus.h"
#include "icma/retrieval/embeddings.h"
#include "icma/retrieval/fingerprint_search.h"
#include "icma/version.h"

namespace {

using namespace icma;
using nlohmann::ordered_json;

enum Exit {
  kOk = 0,
  kIo = 1,
  kUsage = 2,
  kDataQuality = 3,
};

struct ExitError: std::runtime_error {
  ExitError(int code, const std::string &what)
      : std::runtime_error(what), code(code) { }
  int code;
};

struct Options {
  std::string task = "mol2cap";
  std::string strategy = "embedding";
  std::size_t N = 10;
  std::size_t n = 2;
  double p_max = 0.09;
  std::uint64_t seed = 0;
  std::optional<std::size_t> cutoff;
  std::string counter = "whitespace-words";
  double k1 = 1.5;
  double b = 0.75;
  int radius = kDefaultMorganRadius;
  std::size_t width = kDefaultFingerprintWidth;
  std::string corpus;
  std::string queries;
  std::string split;
  std::string embeddings;
  std::string index;
  std::string out;
  std::size_t workers = 1;

  std::string query;
  std::string query_id;
  bool exclude_self = false;

  std::string predictions;
  std::string dataset;
  std::string logprobs;
  std::string mode = "icma";
  std::size_t trials = 1000000;
};

void add_seed(CLI::App *cmd, Options &o, CLI::Option *&seed_opt) {
  seed_opt = cmd->add_option("--seed", o.seed,
                             "RNG seed (falls back to $ICMA_SEED, then 0)");
}

void apply_seed_fallback(const CLI::Option *seed_opt, Options &o) {
  if (seed_opt == nullptr || seed_opt->count() > 0) return;
  const char *env = std::getenv("ICMA_SEED");
  if (env == nullptr || *env == '\0') return;
  try {
    std::size_t used = 0;
    o.seed = std::stoull(env, &used, 0);
    if (env[used] != '\0') throw std::invalid_argument(env);
  } catch (const std::exception &) {
    throw ExitError(kUsage, std::string("ICMA_SEED is not an integer: ") + env);
  }
}

prompt::Task task_of(const Options &o) {
  auto task = prompt::parse_task(o.task);
  if (!task) throw ExitError(kUsage, "unknown task '" + o.task + "'");
  return *task;
}

Strategy strategy_of(const Options &o) {
  auto s = parse_strategy(o.strategy);
  if (!s) throw ExitError(kUsage, "unknown strategy '" + o.strategy + "'");
  return *s;
}

RandomWalkConfig walk_of(const Options &o) {
  RandomWalkConfig cfg { o.N, o.n, o.p_max, o.seed };
  try {
    cfg.validate();
  } catch (const std::invalid_argument &e) {
    throw ExitError(kUsage, e.what());
  }
  return cfg;
}

retrieval::Corpus load_checked(const std::string &path, retrieval::Split split) {
  if (path.empty()) throw ExitError(kUsage, "--corpus is required");
  retrieval::Corpus corpus = retrieval::load_corpus(path, split);
  if (corpus.empty()) {
    throw ExitError(kDataQuality,
                    path + ": no usable records ("
                        + std::to_string(corpus.quarantined().size()) + " quarantined)");
  }
  return corpus;
}

/// Writes to --out, or stdout when no path is given.
void write_output(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ExitError(kIo, "cannot write " + path);
}

std::string ranked_json(const retrieval::RankedList &list) {
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < list.size(); ++i) {
    arr.push_back({ { "rank", i + 1 }, { "id", list[i].id }, { "score", list[i].score } });
  }
  return arr.dump(2) + "\n";
}

int cmd_index(const Options &o) {
  if (o.out.empty()) throw ExitError(kUsage, "--out is required");
  const retrieval::Corpus corpus = load_checked(o.corpus, retrieval::Split::kTrain);
  retrieval::Bm25Index index;
  try {
    index = retrieval::Bm25Index::build(corpus.records(), { o.k1, o.b });
  } catch (const std::invalid_argument &e) {
    throw ExitError(kUsage, e.what());
  }
  index.save(o.out);
  spdlog::info("indexed {} documents, avgdl {:.3f}", index.num_docs(), index.avgdl());
  return kOk;
}

int cmd_retrieve(const Options &o) {
  const Strategy strategy = strategy_of(o);
  if (o.N == 0) throw ExitError(kUsage, "--N must be at least 1");
  if (o.query.empty() == o.query_id.empty()) {
    throw ExitError(kUsage, "give exactly one of --query or --query-id");
  }

  std::optional<retrieval::Corpus> corpus;
  const retrieval::CorpusRecord *record = nullptr;
  auto need_corpus = [&]() {
    if (!corpus) corpus = load_checked(o.corpus, retrieval::Split::kTrain);
    return &*corpus;
  };
  if (!o.query_id.empty() && strategy != Strategy::kEmbedding) {
    record = need_corpus()->find(o.query_id);
    if (record == nullptr) throw ExitError(kUsage, "unknown record id '" + o.query_id + "'");
  }
  const std::string exclude = o.exclude_self ? o.query_id : std::string();

  retrieval::RankedList list;
  switch (strategy) {
  case Strategy::kBm25: {
    const std::string query = record ? record->caption : o.query;
    if (!o.index.empty()) {
      list = retrieval::Bm25Index::load(o.index).top_n(query, o.N, exclude);
    } else {
      list = retrieval::Bm25Index::build(need_corpus()->records(), { o.k1, o.b })
                 .top_n(query, o.N, exclude);
    }
    break;
  }
  case Strategy::kFingerprint: {
    const auto index = retrieval::FingerprintIndex::build(need_corpus()->records(),
                                                          o.radius, o.width);
    list = index.top_n(record ? record->smiles : o.query, o.N, exclude);
    break;
  }
  case Strategy::kEmbedding: {
    if (o.embeddings.empty()) throw ExitError(kUsage, "--embeddings is required");
    if (o.query_id.empty()) throw ExitError(kUsage, "embedding retrieval needs --query-id");
    const auto store = retrieval::load_embeddings<double>(o.embeddings);
    list = retrieval::cosine_topn(store, std::string_view(o.query_id), o.N, o.exclude_self);
    break;
  }
  case Strategy::kRandom: {
    retrieval::CorpusRecord query { o.query_id.empty() ? o.query : o.query_id, "", "",
                                    o.exclude_self ? retrieval::Split::kTrain
                                                   : retrieval::Split::kTest };
    RetrieverOptions ro;
    ro.seed = o.seed;
    list = make_retriever(strategy, *need_corpus(), ro)->retrieve(query, o.N);
    break;
  }
  }
  write_output(o.out, ranked_json(list));
  return kOk;
}

int cmd_build_dataset(const Options &o) {
  const prompt::Task task = task_of(o);
  const Strategy strategy = strategy_of(o);
  if (!strategy_fits_task(strategy, task)) {
    throw ExitError(kUsage, "strategy " + o.strategy + " would read the target side of "
                                + o.task + " queries");
  }
  const RandomWalkConfig walk = walk_of(o);
  const prompt::UnitCounter counter = prompt::parse_counter(o.counter);
  if (o.out.empty()) throw ExitError(kUsage, "--out is required");
  if (o.workers == 0) throw ExitError(kUsage, "--workers must be at least 1");

  retrieval::Split query_split = o.queries.empty() ? retrieval::Split::kTrain
                                                   : retrieval::Split::kTest;
  if (!o.split.empty()) {
    auto s = retrieval::parse_split(o.split);
    if (!s) throw ExitError(kUsage, "unknown split '" + o.split + "'");
    query_split = *s;
  }
  if (o.queries.empty() && query_split != retrieval::Split::kTrain) {
    throw ExitError(kUsage, "evaluation splits need a separate --queries file");
  }

  const retrieval::Corpus pool = load_checked(o.corpus, retrieval::Split::kTrain);
  std::optional<retrieval::Corpus> query_corpus;
  if (!o.queries.empty()) query_corpus = load_checked(o.queries, query_split);
  const std::vector<retrieval::CorpusRecord> &queries =
      query_corpus ? query_corpus->records() : pool.records();

  std::optional<retrieval::EmbeddingStore<double>> store;
  RetrieverOptions ro;
  ro.bm25 = { o.k1, o.b };
  ro.radius = o.radius;
  ro.width = o.width;
  ro.seed = o.seed;
  if (strategy == Strategy::kEmbedding) {
    if (o.embeddings.empty()) throw ExitError(kUsage, "--embeddings is required");
    store = retrieval::load_embeddings<double>(o.embeddings);
    ro.embeddings = &*store;
  }
  const auto retriever = make_retriever(strategy, pool, ro);

  DatasetConfig cfg;
  cfg.task = task;
  cfg.strategy = strategy;
  cfg.walk = walk;
  cfg.cutoff = o.cutoff;
  cfg.counter = counter;
  cfg.workers = o.workers;
  cfg.include_query_target = query_split == retrieval::Split::kTrain;

  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw ExitError(kIo, "cannot write " + o.out);
  const EmissionStats stats = emit_dataset(queries, pool, *retriever, cfg, out);
  out.close();
  if (!out) throw ExitError(kIo, "write failed for " + o.out);

  const std::size_t quarantined = pool.quarantined().size()
                                  + (query_corpus ? query_corpus->quarantined().size() : 0);
  ordered_json j;
  j["version"] = kVersion;
  j["seed"] = o.seed;
  ordered_json config;
  config["task"] = o.task;
  config["strategy"] = o.strategy;
  config["N"] = o.N;
  config["n"] = o.n;
  config["p_max"] = o.p_max;
  config["seed"] = o.seed;
  config["cutoff"] = o.cutoff ? ordered_json(*o.cutoff) : ordered_json(nullptr);
  config["counter"] = prompt::to_string(counter);
  config["k1"] = o.k1;
  config["b"] = o.b;
  config["radius"] = o.radius;
  config["width"] = o.width;
  config["corpus"] = o.corpus;
  config["queries"] = o.queries;
  config["split"] = retrieval::to_string(query_split);
  config["embeddings"] = o.embeddings;
  j["config"] = std::move(config);
  j["records"] = stats.records;
  j["emitted"] = stats.emitted;
  j["skipped"] = stats.skipped;
  j["quarantined"] = quarantined;
  j["mean_context_size"] = stats.mean_context_size();
  j["truncated_records"] = stats.truncated_records;
  j["truncated_examples"] = stats.truncated_examples;
  j["early_stops"] = stats.early_stops;
  write_output(o.out + ".stats.json", j.dump(2) + "\n");

  spdlog::info("emitted {} of {} records ({} skipped)", stats.emitted, stats.records,
               stats.skipped);
  if (stats.emitted == 0) throw ExitError(kDataQuality, "no record could be emitted");
  return kOk;
}

int cmd_evaluate(const Options &o) {
  const prompt::Task task = task_of(o);
  if (o.predictions.empty()) throw ExitError(kUsage, "--predictions is required");
  std::ifstream in(o.predictions, std::ios::binary);
  if (!in) throw ExitError(kIo, "cannot open " + o.predictions);
  const auto pairs = metrics::read_predictions(in);
  if (pairs.empty()) throw ExitError(kDataQuality, o.predictions + ": no predictions");

  const metrics::MetricReport report = metrics::evaluate(pairs, task);
  const std::string table = metrics::report_table(report);
  if (!o.out.empty()) {
    const std::map<std::string, std::string> config { { "task", o.task },
                                                      { "predictions", o.predictions } };
    write_output(o.out + ".json", metrics::report_json(report, kVersion, config) + "\n");
    write_output(o.out + ".txt", table);
  }
  std::cout << table;
  return kOk;
}

int cmd_analyze_walk(const Options &o) {
  const RandomWalkConfig walk = walk_of(o);
  const long double analytic = early_stop_probability(walk);
  const WalkStatistics stats = simulate_walks(walk, o.trials, o.seed);

  ordered_json j;
  j["version"] = kVersion;
  j["N"] = walk.N;
  j["n"] = walk.n;
  j["p_max"] = walk.p_max;
  j["seed"] = o.seed;
  j["trials"] = o.trials;
  j["early_stop_probability"] = static_cast<double>(analytic);
  j["early_stops"] = stats.early_stops;
  j["early_stop_frequency"] =
      o.trials == 0 ? 0.0 : static_cast<double>(stats.early_stops) / static_cast<double>(o.trials);
  ordered_json ranks = ordered_json::array();
  for (std::size_t r = 1; r <= walk.N; ++r) {
    ranks.push_back({ { "rank", r },
                      { "skip_probability", skip_probability(r, walk) },
                      { "visits", stats.visits[r - 1] },
                      { "skips", stats.skips[r - 1] },
                      { "skip_frequency", stats.skip_frequency(r) } });
  }
  j["ranks"] = std::move(ranks);
  write_output(o.out, j.dump(2) + "\n");
  return kOk;
}

int cmd_loss(const Options &o) {
  auto mode = prompt::parse_loss_mode(o.mode);
  if (!mode) throw ExitError(kUsage, "unknown loss mode '" + o.mode + "'");
  if (o.dataset.empty() || o.logprobs.empty()) {
    throw ExitError(kUsage, "--dataset and --logprobs are required");
  }

  std::ifstream data(o.dataset, std::ios::binary);
  if (!data) throw ExitError(kIo, "cannot open " + o.dataset);
  std::map<std::string, prompt::PromptBundle> bundles;
  std::string line;
  while (std::getline(data, line)) {
    if (line.empty()) continue;
    DatasetLine parsed = parse_dataset_line(line);
    bundles[parsed.id] = std::move(parsed.bundle);
  }

  std::ifstream lp(o.logprobs, std::ios::binary);
  if (!lp) throw ExitError(kIo, "cannot open " + o.logprobs);
  std::ostringstream out;
  double sum = 0.0;
  std::size_t count = 0;
  while (std::getline(lp, line)) {
    if (line.empty()) continue;
    const TokenLogprobs tokens = parse_logprob_line(line);
    auto it = bundles.find(tokens.id);
    if (it == bundles.end()) {
      throw ExitError(kUsage, "logprobs for unknown record '" + tokens.id + "'");
    }
    const auto loss = prompt::compute_loss(it->second, { *mode }, tokens.tokens);
    ordered_json j;
    j["id"] = tokens.id;
    j["mode"] = prompt::to_string(*mode);
    j["query_target"] = loss.query_target;
    j["context_targets"] = loss.context_targets;
    j["loss"] = loss.total;
    out << j.dump() << '\n';
    sum += loss.total;
    ++count;
  }
  write_output(o.out, out.str());
  spdlog::info("{} records, total {} loss {:.6f}", count, prompt::to_string(*mode), sum);
  return kOk;
}

int exit_code_for(const retrieval::RetrievalError &e) {
  switch (e.kind()) {
  case retrieval::RetrievalError::Kind::kIo:
    return kIo;
  case retrieval::RetrievalError::Kind::kEmptyCorpus:
    return kDataQuality;
  default:
    return kUsage;
  }
}

}  // namespace

int main(int argc, char **argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("icma"));

  CLI::App app { "In-context molecule adaptation: context construction and evaluation",
                 "icma" };
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "TOML/INI file; flags given on the command line win");
  app.require_subcommand(1);
  Options o;

  auto *index = app.add_subcommand("index", "Build and save a BM25 index over captions");
  index->add_option("--corpus", o.corpus, "Training corpus (TSV)")->required();
  index->add_option("--out", o.out, "Index file")->required();
  index->add_option("--k1", o.k1, "BM25 k1")->capture_default_str();
  index->add_option("--b", o.b, "BM25 b")->capture_default_str();

  auto *retrieve = app.add_subcommand("retrieve", "Print a ranked list as JSON");
  retrieve->add_option("--strategy", o.strategy, "bm25|embedding|fingerprint|random")
      ->capture_default_str();
  retrieve->add_option("--N", o.N, "List length")->capture_default_str();
  retrieve->add_option("--corpus", o.corpus, "Training corpus (TSV)");
  retrieve->add_option("--index", o.index, "Saved BM25 index (bm25 only)");
  retrieve->add_option("--embeddings", o.embeddings, "Embedding file");
  retrieve->add_option("--query", o.query, "Caption (bm25) or SMILES (fingerprint)");
  retrieve->add_option("--query-id", o.query_id, "Use a stored record as the query");
  retrieve->add_flag("--exclude-self", o.exclude_self, "Drop --query-id from the list");
  retrieve->add_option("--k1", o.k1, "BM25 k1")->capture_default_str();
  retrieve->add_option("--b", o.b, "BM25 b")->capture_default_str();
  retrieve->add_option("--radius", o.radius, "Morgan radius")->capture_default_str();
  retrieve->add_option("--width", o.width, "Fingerprint width")->capture_default_str();
  retrieve->add_option("--out", o.out, "Output file (default stdout)");
  CLI::Option *retrieve_seed = nullptr;
  add_seed(retrieve, o, retrieve_seed);

  auto *build = app.add_subcommand("build-dataset", "Emit ICMA prompts as JSON lines");
  build->add_option("--corpus", o.corpus, "Training corpus (TSV), the retrieval pool")
      ->required();
  build->add_option("--queries", o.queries, "Query corpus (default: the training corpus)");
  build->add_option("--split", o.split, "Split of the query corpus");
  build->add_option("--task", o.task, "mol2cap|cap2mol")->capture_default_str();
  build->add_option("--strategy", o.strategy, "bm25|embedding|fingerprint|random")
      ->capture_default_str();
  build->add_option("--N", o.N, "Rough examples")->capture_default_str();
  build->add_option("--n", o.n, "Refined examples")->capture_default_str();
  build->add_option("--p-max", o.p_max, "Maximum skip probability")->capture_default_str();
  build->add_option("--cutoff", o.cutoff, "Cutoff length in counter units");
  build->add_option("--counter", o.counter, "bytes|whitespace-words|chars")
      ->capture_default_str();
  build->add_option("--k1", o.k1, "BM25 k1")->capture_default_str();
  build->add_option("--b", o.b, "BM25 b")->capture_default_str();
  build->add_option("--radius", o.radius, "Morgan radius")->capture_default_str();
  build->add_option("--width", o.width, "Fingerprint width")->capture_default_str();
  build->add_option("--embeddings", o.embeddings, "Embedding file");
  build->add_option("--out", o.out, "Dataset file; stats go to <out>.stats.json")
      ->required();
  build->add_option("--workers", o.workers, "Worker threads")->capture_default_str();
  CLI::Option *build_seed = nullptr;
  add_seed(build, o, build_seed);

  auto *evaluate = app.add_subcommand("evaluate", "Score a prediction file");
  evaluate->add_option("--predictions", o.predictions, "JSON lines with id/reference/hypothesis")
      ->required();
  evaluate->add_option("--task", o.task, "mol2cap|cap2mol")->capture_default_str();
  evaluate->add_option("--out", o.out, "Report prefix; writes <out>.json and <out>.txt");

  auto *analyze = app.add_subcommand("analyze-walk", "Early-stop and skip statistics");
  analyze->add_option("--N", o.N, "Rough examples")->capture_default_str();
  analyze->add_option("--n", o.n, "Refined examples")->capture_default_str();
  analyze->add_option("--p-max", o.p_max, "Maximum skip probability")->capture_default_str();
  analyze->add_option("--trials", o.trials, "Monte Carlo walks")->capture_default_str();
  analyze->add_option("--out", o.out, "Output file (default stdout)");
  CLI::Option *analyze_seed = nullptr;
  add_seed(analyze, o, analyze_seed);

  auto *loss = app.add_subcommand("loss", "Masked loss from external token logprobs");
  loss->add_option("--dataset", o.dataset, "Dataset emitted by build-dataset")->required();
  loss->add_option("--logprobs", o.logprobs, "JSON lines {id, tokens: [[start, end, logprob]]}")
      ->required();
  loss->add_option("--mode", o.mode, "sft|icma")->capture_default_str();
  loss->add_option("--out", o.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*index) return cmd_index(o);
    if (*retrieve) {
      apply_seed_fallback(retrieve_seed, o);
      return cmd_retrieve(o);
    }
    if (*build) {
      apply_seed_fallback(build_seed, o);
      return cmd_build_dataset(o);
    }
    if (*evaluate) return cmd_evaluate(o);
    if (*analyze) {
      apply_seed_fallback(analyze_seed, o);
      return cmd_analyze_walk(o);
    }
    if (*loss) return cmd_loss(o);
  } catch (const ExitError &e) {
    spdlog::error("{}", e.what());
    return e.code;
  } catch (const retrieval::RetrievalError &e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  } catch (const metrics::MetricError &e) {
    spdlog::error("{}", e.what());
    return e.kind() == metrics::MetricError::Kind::kEmptyInput ? kDataQuality : kUsage;
  } catch (const prompt::PromptError &e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const chem::SmilesError &e) {
    spdlog::error("query SMILES: {}", e.what());
    return kUsage;
  } catch (const std::invalid_argument &e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return kIo;
  }
  return kUsage;
}
