#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icma/fingerprints.h"
#include "icma/prompt.h"

namespace icma::metrics {

using prompt::Task;

struct EvalPair {
  std::string id;
  std::string reference;
  std::string hypothesis;
};

class MetricError: public std::runtime_error {
public:
  enum class Kind {
    kEmptyInput,
    kFormat,
    kDuplicateId,
  };

  MetricError(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) { }

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

std::vector<std::string> word_tokens(std::string_view text);
/// One token per UTF-8 code point.
std::vector<std::string> char_tokens(std::string_view text);
/// Words for Mol2Cap, characters for Cap2Mol.
std::vector<std::string> bleu_tokens(std::string_view text, Task task);

inline constexpr int kMaxBleuOrder = 4;
inline constexpr double kBleuFloor = 0.1;

/// Clipped n-gram matches and hypothesis n-gram totals per order, plus
/// lengths. Corpus BLEU sums these over pairs.
struct BleuStats {
  std::array<std::size_t, kMaxBleuOrder> matches {};
  std::array<std::size_t, kMaxBleuOrder> totals {};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats &operator+=(const BleuStats &o);
};

BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref);

/// Uniform weights over orders 1..max_n that have hypothesis n-grams; an
/// order with no match uses precision kBleuFloor / total. Brevity penalty
/// exp(1 - r/c) when c < r.
double bleu_from_stats(const BleuStats &stats, int max_n);

/// Corpus-level BLEU. Throws MetricError(kEmptyInput).
double bleu(std::span<const EvalPair> pairs, int max_n, Task task);

enum class RougeVariant {
  kRouge1,
  kRouge2,
  kRougeL,
};

/// F1 of one pair on word tokens. Two texts without n-grams score 1.
double rouge_f1(std::string_view reference, std::string_view hypothesis,
                RougeVariant variant);
/// Mean per-pair F1. Throws MetricError(kEmptyInput).
double rouge(std::span<const EvalPair> pairs, RougeVariant variant);

/// Exact-match unigram alignment, F_mean = 10PR / (R + 9P) times
/// 1 - 0.5 (chunks / matches)^3.
double meteor_lite_score(std::string_view reference, std::string_view hypothesis);
double meteor_lite(std::span<const EvalPair> pairs);

/// Unit-cost edit distance over UTF-8 code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Both sides parse and have the same canonical SMILES.
bool canonical_match(std::string_view reference, std::string_view hypothesis);
double exact_match(std::span<const EvalPair> pairs);

/// Tanimoto of one pair; 0 when either side fails to parse. Two empty
/// fingerprints score 1 iff the molecules are canonically equal.
double fts_score(std::string_view reference, std::string_view hypothesis,
                 FingerprintKind kind);
double fts(std::span<const EvalPair> pairs, FingerprintKind kind);

double validity_rate(std::span<const EvalPair> pairs);

struct PairScores {
  std::string id;
  BleuStats bleu;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
  std::size_t levenshtein = 0;
  // Chemistry columns, Cap2Mol only.
  std::optional<bool> exact;
  std::optional<double> morgan_fts;
  std::optional<double> path_fts;
  std::optional<bool> valid;
};

struct MetricReport {
  Task task = Task::kMol2Cap;
  std::size_t total = 0;
  std::size_t invalid = 0;
  double bleu2 = 0.0;
  double bleu4 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
  double levenshtein = 0.0;  // mean
  std::optional<double> exact_match;
  std::optional<double> morgan_fts;
  std::optional<double> path_fts;
  std::optional<double> validity;
  std::vector<PairScores> pairs;
};

/// Throws MetricError(kEmptyInput) or (kDuplicateId).
MetricReport evaluate(std::span<const EvalPair> pairs, Task task);

/// Corpus aggregates recomputed from the per-pair values alone.
MetricReport aggregate(std::vector<PairScores> pairs, Task task);

/// One JSON object per line: {"id", "reference", "hypothesis"}.
std::vector<EvalPair> read_predictions(std::istream &in);

/// `config` is echoed verbatim under "config".
std::string report_json(const MetricReport &report, std::string_view version,
                        const std::map<std::string, std::string> &config = {});
/// Aligned plain-text table in the column order of the result tables.
std::string report_table(const MetricReport &report);

}  // namespace icma::metrics
