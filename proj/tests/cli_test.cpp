#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "icma/dataset.h"
#include "icma/metrics.h"
#include "icma/prompt.h"
#include "icma/rerank.h"
#include "icma/retrieval/bm25.h"
#include "icma/retrieval/corpus.h"
#include "json.hpp"

#include "oracles.h"

namespace icma {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code = -1;
  std::string out;
};

// Runs the icma binary through the shell; `env` is prepended verbatim.
Outcome icma(const std::string &args, const std::string &env = "") {
  const std::string cmd = env + " '" ICMA_CLI_PATH "' " + args + " 2>/dev/null";
  Outcome r;
  FILE *pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

class Cli: public ::testing::Test {
protected:
  void SetUp() override {
    const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path()
           / (std::string("icma_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    corpus_ = oracle::fixture("molecules.tsv").string();
  }

  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  // First `count` fixture records as a separate corpus file.
  std::string small_corpus(std::size_t count) const {
    std::ifstream in(corpus_);
    std::string text;
    std::string line;
    for (std::size_t i = 0; i <= count && std::getline(in, line); ++i) text += line + "\n";
    const std::string p = path("small.tsv");
    spit(p, text);
    return p;
  }

  fs::path dir_;
  std::string corpus_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(icma("").code, 2);
  EXPECT_EQ(icma("frobnicate").code, 2);
  EXPECT_EQ(icma("retrieve --strategy nearest --corpus " + corpus_ + " --query x").code, 2);
  EXPECT_EQ(icma("retrieve --strategy bm25 --corpus " + corpus_).code, 2);
  EXPECT_EQ(icma("index --corpus " + corpus_).code, 2);
  EXPECT_EQ(icma("analyze-walk --N 3 --n 4").code, 2);
  EXPECT_EQ(icma("build-dataset --corpus " + corpus_ + " --task cap2mol --strategy fingerprint"
                 " --out " + path("d.jsonl")).code,
            2);
  const Outcome version = icma("--version");
  EXPECT_EQ(version.code, 0);
  EXPECT_FALSE(version.out.empty());
}

TEST_F(Cli, IndexExitCodes) {
  EXPECT_EQ(icma("index --corpus " + corpus_ + " --out " + path("idx")).code, 0);
  EXPECT_TRUE(fs::exists(path("idx")));
  EXPECT_EQ(icma("index --corpus " + path("missing.tsv") + " --out " + path("idx2")).code, 1);
  spit(path("bad.tsv"), "name\tvalue\nx\ty\n");
  EXPECT_EQ(icma("index --corpus " + path("bad.tsv") + " --out " + path("idx3")).code, 2);
  spit(path("junk.tsv"), "id\tsmiles\tcaption\n1\tC1CC\tbroken ring\n");
  EXPECT_EQ(icma("index --corpus " + path("junk.tsv") + " --out " + path("idx4")).code, 3);
}

TEST_F(Cli, SavedIndexMatchesInMemoryBuild) {
  const std::string corpus = small_corpus(20);
  const std::string idx = path("idx");
  ASSERT_EQ(icma("index --corpus " + corpus + " --out " + idx + " --k1 1.2 --b 0.6").code, 0);

  const auto records = retrieval::load_corpus(corpus, retrieval::Split::kTrain).records();
  ASSERT_EQ(records.size(), 20u);
  std::vector<std::string> docs;
  for (const auto &r: records) docs.push_back(r.caption);
  const auto built = retrieval::Bm25Index::build(records, { 1.2, 0.6 });

  for (const std::string query: { "primary alcohol", "aromatic ring with a hydroxy group",
                                  "acid" }) {
    const std::string q = " --query '" + query + "' --N 20";
    const Outcome saved = icma("retrieve --strategy bm25 --index " + idx + q);
    const Outcome fresh =
        icma("retrieve --strategy bm25 --k1 1.2 --b 0.6 --corpus " + corpus + q);
    ASSERT_EQ(saved.code, 0);
    ASSERT_EQ(fresh.code, 0);
    EXPECT_EQ(saved.out, fresh.out);

    const auto expected = built.top_n(query, 20);
    const auto oracle = oracle::bm25_scores(docs, query, 1.2, 0.6);
    const json list = json::parse(saved.out);
    ASSERT_EQ(list.size(), expected.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_EQ(list[i].at("rank"), i + 1);
      EXPECT_EQ(list[i].at("id"), expected[i].id);
      const std::string id = list[i].at("id");
      std::size_t doc = 0;
      while (records[doc].id != id) ++doc;
      EXPECT_NEAR(list[i].at("score").get<double>(), oracle[doc], 1e-9);
    }
  }
}

TEST_F(Cli, RetrieveSelfQuery) {
  const auto records = oracle::fixture_records();
  const std::string id = records[3].id;
  for (const std::string strategy: { "bm25", "fingerprint" }) {
    const Outcome r = icma("retrieve --strategy " + strategy + " --corpus " + corpus_
                       + " --query-id " + id + " --N 5");
    ASSERT_EQ(r.code, 0) << strategy;
    const json list = json::parse(r.out);
    ASSERT_TRUE(list.is_array());
    EXPECT_LE(list.size(), 5u);
    ASSERT_FALSE(list.empty());
    EXPECT_EQ(list[0].at("id"), id) << strategy;
    EXPECT_EQ(list[0].at("rank"), 1);
    for (std::size_t i = 1; i < list.size(); ++i) {
      EXPECT_LE(list[i].at("score").get<double>(), list[0].at("score").get<double>());
    }

    const Outcome excluded = icma("retrieve --strategy " + strategy + " --corpus " + corpus_
                              + " --query-id " + id + " --N 5 --exclude-self");
    ASSERT_EQ(excluded.code, 0);
    for (const auto &e: json::parse(excluded.out)) EXPECT_NE(e.at("id"), id);
  }

  std::string emb = "dim=3\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    emb += records[i].id + "\t" + std::to_string(1.0 + static_cast<double>(i)) + ","
           + std::to_string(static_cast<double>(i % 7) - 3.0) + ","
           + std::to_string(static_cast<double>(i * i % 11) + 0.5) + "\n";
  }
  spit(path("emb.txt"), emb);
  const Outcome r = icma("retrieve --strategy embedding --embeddings " + path("emb.txt")
                     + " --query-id " + id + " --N 4");
  ASSERT_EQ(r.code, 0);
  const json list = json::parse(r.out);
  EXPECT_EQ(list.size(), 4u);
  EXPECT_EQ(list[0].at("id"), id);
  EXPECT_NEAR(list[0].at("score").get<double>(), 1.0, 1e-12);

  const Outcome many = icma("retrieve --strategy random --corpus " + corpus_ + " --query x --N 100");
  ASSERT_EQ(many.code, 0);
  EXPECT_EQ(json::parse(many.out).size(), records.size());
}

TEST_F(Cli, BuildDatasetAndStats) {
  const std::string out = path("d.jsonl");
  const Outcome r = icma("build-dataset --corpus " + corpus_
                     + " --task mol2cap --strategy fingerprint --N 6 --n 2 --seed 11"
                       " --out " + out);
  ASSERT_EQ(r.code, 0);
  const json stats = json::parse(slurp(out + ".stats.json"));
  const auto records = oracle::fixture_records();
  EXPECT_EQ(stats.at("records"), records.size());
  EXPECT_EQ(stats.at("emitted"), records.size());
  EXPECT_EQ(stats.at("seed"), 11);
  EXPECT_EQ(stats.at("config").at("strategy"), "fingerprint");
  EXPECT_EQ(stats.at("config").at("N"), 6);
  EXPECT_FALSE(stats.at("config").contains("workers"));

  std::istringstream lines(slurp(out));
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    const DatasetLine parsed = parse_dataset_line(line);
    EXPECT_EQ(parsed.id, records[count].id);
    const json raw = json::parse(line);
    ASSERT_EQ(raw.at("example_ids").size(), 2u);
    for (const auto &ex: raw.at("example_ids")) EXPECT_NE(ex, parsed.id);
    EXPECT_NE(parsed.bundle.rendered.find(records[count].caption), std::string::npos);
    ++count;
  }
  EXPECT_EQ(count, records.size());
}

TEST_F(Cli, BuildDatasetIsDeterministic) {
  const std::string args = "build-dataset --corpus " + corpus_
                           + " --task cap2mol --strategy random --N 8 --n 3 --p-max 0.3";
  ASSERT_EQ(icma(args + " --seed 5 --out " + path("a.jsonl")).code, 0);
  ASSERT_EQ(icma(args + " --seed 5 --workers 3 --out " + path("b.jsonl")).code, 0);
  ASSERT_EQ(icma(args + " --out " + path("c.jsonl"), "ICMA_SEED=5").code, 0);
  ASSERT_EQ(icma(args + " --seed 6 --out " + path("d.jsonl")).code, 0);
  spit(path("cfg.toml"), "[build-dataset]\nseed = 5\n");
  ASSERT_EQ(icma("--config " + path("cfg.toml") + " " + args + " --out " + path("e.jsonl")).code,
            0);

  const std::string a = slurp(path("a.jsonl"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b.jsonl")));
  EXPECT_EQ(a, slurp(path("c.jsonl")));
  EXPECT_EQ(a, slurp(path("e.jsonl")));
  EXPECT_NE(a, slurp(path("d.jsonl")));
  EXPECT_EQ(slurp(path("a.jsonl.stats.json")), slurp(path("b.jsonl.stats.json")));

  // An explicit flag wins over the environment.
  ASSERT_EQ(icma(args + " --seed 6 --out " + path("f.jsonl"), "ICMA_SEED=5").code, 0);
  EXPECT_EQ(slurp(path("f.jsonl")), slurp(path("d.jsonl")));
  EXPECT_EQ(icma(args + " --out " + path("g.jsonl"), "ICMA_SEED=abc").code, 2);
}

TEST_F(Cli, Evaluate) {
  const std::vector<metrics::EvalPair> pairs = {
    { "a", "CCO", "OCC" }, { "b", "c1ccccc1O", "c1ccccc1N" }, { "c", "CC(=O)O", "C1CC" }
  };
  std::string text;
  for (const auto &p: pairs) {
    text += json { { "id", p.id }, { "reference", p.reference }, { "hypothesis", p.hypothesis } }
                .dump()
            + "\n";
  }
  spit(path("pred.jsonl"), text);
  const Outcome r = icma("evaluate --task cap2mol --predictions " + path("pred.jsonl") + " --out "
                     + path("report"));
  ASSERT_EQ(r.code, 0);
  const auto report = metrics::evaluate(pairs, prompt::Task::kCap2Mol);
  EXPECT_EQ(r.out, metrics::report_table(report));
  EXPECT_EQ(slurp(path("report.txt")), r.out);
  const json j = json::parse(slurp(path("report.json")));
  EXPECT_NEAR(j.at("metrics").at("Morgan FTS").get<double>(), *report.morgan_fts, 1e-12);
  EXPECT_NEAR(j.at("metrics").at("EM").get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(j.at("counts").at("invalid"), 1);

  EXPECT_EQ(icma("evaluate --task cap2mol --predictions " + path("none.jsonl")).code, 1);
  spit(path("empty.jsonl"), "\n");
  EXPECT_EQ(icma("evaluate --task cap2mol --predictions " + path("empty.jsonl")).code, 3);
  spit(path("broken.jsonl"), "{\"id\": 1}\n");
  EXPECT_EQ(icma("evaluate --task cap2mol --predictions " + path("broken.jsonl")).code, 2);
  EXPECT_EQ(icma("evaluate --task text2text --predictions " + path("pred.jsonl")).code, 2);
}

TEST_F(Cli, AnalyzeWalk) {
  const Outcome r = icma("analyze-walk --N 10 --n 2 --p-max 0.09 --trials 20000 --seed 3");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  const auto [num, den] = oracle::early_stop_fraction(10, 2, 9, 100);
  EXPECT_NEAR(j.at("early_stop_probability").get<double>(),
              static_cast<double>(num) / static_cast<double>(den), 1e-16);
  EXPECT_EQ(j.at("early_stops"), 0);
  ASSERT_EQ(j.at("ranks").size(), 10u);
  const RandomWalkConfig cfg { 10, 2, 0.09, 3 };
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_DOUBLE_EQ(j.at("ranks")[k].at("skip_probability").get<double>(),
                     skip_probability(k + 1, cfg));
  }
  EXPECT_EQ(r.out, icma("analyze-walk --N 10 --n 2 --p-max 0.09 --trials 20000 --seed 3").out);
}

TEST_F(Cli, LossMatchesLibrary) {
  const std::string data = path("d.jsonl");
  ASSERT_EQ(icma("build-dataset --corpus " + corpus_
                 + " --task mol2cap --strategy fingerprint --N 4 --n 2 --seed 1 --out " + data)
                .code,
            0);

  // One token per byte with a position-dependent logprob.
  std::istringstream lines(slurp(data));
  std::string line;
  std::string logprobs;
  std::vector<DatasetLine> parsed;
  while (std::getline(lines, line)) {
    parsed.push_back(parse_dataset_line(line));
    json tokens = json::array();
    const std::string &text = parsed.back().bundle.rendered;
    for (std::size_t i = 0; i < text.size(); ++i) {
      tokens.push_back({ i, i + 1, -0.001 * static_cast<double>(i % 13) });
    }
    logprobs += json { { "id", parsed.back().id }, { "tokens", tokens } }.dump() + "\n";
  }
  spit(path("lp.jsonl"), logprobs);

  for (const auto mode: { prompt::LossMode::kSft, prompt::LossMode::kIcma }) {
    const Outcome r = icma("loss --dataset " + data + " --logprobs " + path("lp.jsonl") + " --mode "
                       + std::string(prompt::to_string(mode)));
    ASSERT_EQ(r.code, 0);
    std::istringstream out(r.out);
    std::size_t i = 0;
    while (std::getline(out, line)) {
      ASSERT_LT(i, parsed.size());
      const json j = json::parse(line);
      EXPECT_EQ(j.at("id"), parsed[i].id);
      std::vector<prompt::TokenLogprob> tokens;
      const std::string &text = parsed[i].bundle.rendered;
      for (std::size_t k = 0; k < text.size(); ++k) {
        tokens.push_back({ k, k + 1, -0.001 * static_cast<double>(k % 13) });
      }
      const auto expected = prompt::compute_loss(parsed[i].bundle, { mode }, tokens);
      EXPECT_NEAR(j.at("loss").get<double>(), expected.total, 1e-9);
      if (mode == prompt::LossMode::kSft) {
        EXPECT_DOUBLE_EQ(j.at("context_targets").get<double>(), 0.0);
      } else {
        EXPECT_GT(j.at("context_targets").get<double>(), 0.0);
      }
      ++i;
    }
    EXPECT_EQ(i, parsed.size());
  }

  spit(path("short.jsonl"), json { { "id", parsed[0].id }, { "tokens", { { 0, 1, -1.0 } } } }
                                    .dump()
                                + "\n");
  EXPECT_EQ(icma("loss --dataset " + data + " --logprobs " + path("short.jsonl")).code, 2);
  EXPECT_EQ(icma("loss --dataset " + data + " --logprobs " + path("lp.jsonl") + " --mode rl")
                .code,
            2);
  EXPECT_EQ(icma("loss --dataset " + path("none") + " --logprobs " + path("lp.jsonl")).code, 1);
}

}  // namespace
}  // namespace icma
