#include "icma/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "icma/chem/smiles.h"
#include "json.hpp"

namespace icma::metrics {

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> char_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (char c: text) {
    if ((static_cast<unsigned char>(c) & 0xC0) == 0x80 && !out.empty()) {
      out.back() += c;
    } else {
      out.emplace_back(1, c);
    }
  }
  return out;
}

std::vector<std::string> bleu_tokens(std::string_view text, Task task) {
  return task == Task::kMol2Cap ? word_tokens(text) : char_tokens(text);
}

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

std::size_t clipped_overlap(const NgramCounts &hyp, const NgramCounts &ref) {
  std::size_t overlap = 0;
  for (const auto &[gram, count]: hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

std::size_t total(const NgramCounts &counts) {
  std::size_t t = 0;
  for (const auto &entry: counts) t += entry.second;
  return t;
}

void require_pairs(std::span<const EvalPair> pairs) {
  if (pairs.empty()) {
    throw MetricError(MetricError::Kind::kEmptyInput, "no prediction pairs");
  }
}

double f1(double overlap, double hyp_total, double ref_total) {
  if (overlap == 0.0) return 0.0;
  const double p = overlap / hyp_total;
  const double r = overlap / ref_total;
  return 2.0 * p * r / (p + r);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::uint32_t> code_points(std::string_view s) {
  std::vector<std::uint32_t> out;
  for (const std::string &c: char_tokens(s)) {
    std::uint32_t v = 0;
    for (char byte: c) v = (v << 8) | static_cast<unsigned char>(byte);
    out.push_back(v);
  }
  return out;
}

template <typename T>
double mean_of(const std::vector<PairScores> &pairs, T PairScores::*field) {
  double sum = 0.0;
  for (const PairScores &p: pairs) sum += static_cast<double>(p.*field);
  return sum / static_cast<double>(pairs.size());
}

template <typename T>
double mean_of_optional(const std::vector<PairScores> &pairs,
                        std::optional<T> PairScores::*field) {
  double sum = 0.0;
  for (const PairScores &p: pairs) sum += static_cast<double>((p.*field).value_or(T {}));
  return sum / static_cast<double>(pairs.size());
}

}  // namespace

BleuStats &BleuStats::operator+=(const BleuStats &o) {
  for (int k = 0; k < kMaxBleuOrder; ++k) {
    matches[k] += o.matches[k];
    totals[k] += o.totals[k];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref) {
  BleuStats stats;
  stats.hyp_len = hyp.size();
  stats.ref_len = ref.size();
  for (int k = 0; k < kMaxBleuOrder; ++k) {
    const auto h = ngrams(hyp, static_cast<std::size_t>(k + 1));
    const auto r = ngrams(ref, static_cast<std::size_t>(k + 1));
    stats.matches[k] = clipped_overlap(h, r);
    stats.totals[k] = total(h);
  }
  return stats;
}

double bleu_from_stats(const BleuStats &stats, int max_n) {
  if (max_n < 1 || max_n > kMaxBleuOrder) {
    throw std::invalid_argument("BLEU order must be in 1..4");
  }
  if (stats.hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int k = 0; k < max_n; ++k) {
    if (stats.totals[k] == 0) continue;
    const double matched = stats.matches[k] > 0 ? static_cast<double>(stats.matches[k])
                                                : kBleuFloor;
    log_sum += std::log(matched / static_cast<double>(stats.totals[k]));
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double c = static_cast<double>(stats.hyp_len);
  const double r = static_cast<double>(stats.ref_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / orders);
}

double bleu(std::span<const EvalPair> pairs, int max_n, Task task) {
  require_pairs(pairs);
  BleuStats sum;
  for (const EvalPair &p: pairs) {
    sum += bleu_stats(bleu_tokens(p.hypothesis, task), bleu_tokens(p.reference, task));
  }
  return bleu_from_stats(sum, max_n);
}

double rouge_f1(std::string_view reference, std::string_view hypothesis,
                RougeVariant variant) {
  const auto ref = word_tokens(reference);
  const auto hyp = word_tokens(hypothesis);
  if (variant == RougeVariant::kRougeL) {
    if (ref.empty() && hyp.empty()) return 1.0;
    if (ref.empty() || hyp.empty()) return 0.0;
    return f1(static_cast<double>(lcs_length(hyp, ref)), static_cast<double>(hyp.size()),
              static_cast<double>(ref.size()));
  }
  const std::size_t n = variant == RougeVariant::kRouge1 ? 1 : 2;
  const auto h = ngrams(hyp, n);
  const auto r = ngrams(ref, n);
  const std::size_t ht = total(h);
  const std::size_t rt = total(r);
  if (ht == 0 && rt == 0) return 1.0;
  if (ht == 0 || rt == 0) return 0.0;
  return f1(static_cast<double>(clipped_overlap(h, r)), static_cast<double>(ht),
            static_cast<double>(rt));
}

double rouge(std::span<const EvalPair> pairs, RougeVariant variant) {
  require_pairs(pairs);
  double sum = 0.0;
  for (const EvalPair &p: pairs) sum += rouge_f1(p.reference, p.hypothesis, variant);
  return sum / static_cast<double>(pairs.size());
}

double meteor_lite_score(std::string_view reference, std::string_view hypothesis) {
  const auto ref = word_tokens(reference);
  const auto hyp = word_tokens(hypothesis);
  if (ref.empty() || hyp.empty()) return 0.0;

  // Greedy alignment: continue the current chunk when the next reference
  // position matches, otherwise take the leftmost free occurrence.
  std::vector<bool> used(ref.size(), false);
  std::vector<std::ptrdiff_t> align(hyp.size(), -1);
  std::ptrdiff_t last = -2;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    std::ptrdiff_t pick = -1;
    const auto next = static_cast<std::size_t>(last + 1);
    if (last >= 0 && next < ref.size() && !used[next] && ref[next] == hyp[i]) {
      pick = last + 1;
    } else {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!used[j] && ref[j] == hyp[i]) {
          pick = static_cast<std::ptrdiff_t>(j);
          break;
        }
      }
    }
    if (pick >= 0) {
      used[static_cast<std::size_t>(pick)] = true;
      align[i] = pick;
      last = pick;
    } else {
      last = -2;
    }
  }

  std::size_t matches = 0;
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (align[i] < 0) continue;
    ++matches;
    if (i == 0 || align[i - 1] < 0 || align[i - 1] + 1 != align[i]) ++chunks;
  }
  if (matches == 0) return 0.0;

  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(hyp.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

double meteor_lite(std::span<const EvalPair> pairs) {
  require_pairs(pairs);
  double sum = 0.0;
  for (const EvalPair &p: pairs) sum += meteor_lite_score(p.reference, p.hypothesis);
  return sum / static_cast<double>(pairs.size());
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto x = code_points(a);
  const auto y = code_points(b);
  std::vector<std::size_t> row(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({ row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] != y[j - 1]) });
      diag = up;
    }
  }
  return row[y.size()];
}

bool canonical_match(std::string_view reference, std::string_view hypothesis) {
  try {
    return chem::canonicalize(chem::parse_smiles(reference))
           == chem::canonicalize(chem::parse_smiles(hypothesis));
  } catch (const chem::SmilesError &) {
    return false;
  }
}

double exact_match(std::span<const EvalPair> pairs) {
  require_pairs(pairs);
  std::size_t hits = 0;
  for (const EvalPair &p: pairs) hits += canonical_match(p.reference, p.hypothesis);
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

double fts_score(std::string_view reference, std::string_view hypothesis,
                 FingerprintKind kind) {
  try {
    const chem::Molecule ref = chem::parse_smiles(reference);
    const chem::Molecule hyp = chem::parse_smiles(hypothesis);
    auto fp = [kind](const chem::Molecule &m) {
      return kind == FingerprintKind::kMorgan ? morgan_fingerprint(m) : path_fingerprint(m);
    };
    const FingerprintVector a = fp(ref);
    const FingerprintVector b = fp(hyp);
    if (a.empty() && b.empty()) {
      return chem::canonicalize(ref) == chem::canonicalize(hyp) ? 1.0 : 0.0;
    }
    return tanimoto(a, b);
  } catch (const chem::SmilesError &) {
    return 0.0;
  }
}

double fts(std::span<const EvalPair> pairs, FingerprintKind kind) {
  require_pairs(pairs);
  double sum = 0.0;
  for (const EvalPair &p: pairs) sum += fts_score(p.reference, p.hypothesis, kind);
  return sum / static_cast<double>(pairs.size());
}

double validity_rate(std::span<const EvalPair> pairs) {
  require_pairs(pairs);
  std::size_t valid = 0;
  for (const EvalPair &p: pairs) valid += chem::is_valid(p.hypothesis);
  return static_cast<double>(valid) / static_cast<double>(pairs.size());
}

MetricReport evaluate(std::span<const EvalPair> pairs, Task task) {
  require_pairs(pairs);
  std::unordered_set<std::string_view> seen;
  for (const EvalPair &p: pairs) {
    if (!seen.insert(p.id).second) {
      throw MetricError(MetricError::Kind::kDuplicateId,
                        "duplicate prediction id '" + p.id + "'");
    }
  }

  std::vector<PairScores> scores;
  scores.reserve(pairs.size());
  for (const EvalPair &p: pairs) {
    PairScores s;
    s.id = p.id;
    s.bleu = bleu_stats(bleu_tokens(p.hypothesis, task), bleu_tokens(p.reference, task));
    s.rouge1 = rouge_f1(p.reference, p.hypothesis, RougeVariant::kRouge1);
    s.rouge2 = rouge_f1(p.reference, p.hypothesis, RougeVariant::kRouge2);
    s.rouge_l = rouge_f1(p.reference, p.hypothesis, RougeVariant::kRougeL);
    s.meteor = meteor_lite_score(p.reference, p.hypothesis);
    s.levenshtein = levenshtein(p.reference, p.hypothesis);
    if (task == Task::kCap2Mol) {
      s.exact = canonical_match(p.reference, p.hypothesis);
      s.morgan_fts = fts_score(p.reference, p.hypothesis, FingerprintKind::kMorgan);
      s.path_fts = fts_score(p.reference, p.hypothesis, FingerprintKind::kPath);
      s.valid = chem::is_valid(p.hypothesis);
    }
    scores.push_back(std::move(s));
  }
  return aggregate(std::move(scores), task);
}

MetricReport aggregate(std::vector<PairScores> pairs, Task task) {
  if (pairs.empty()) {
    throw MetricError(MetricError::Kind::kEmptyInput, "no prediction pairs");
  }
  MetricReport report;
  report.task = task;
  report.total = pairs.size();
  BleuStats sum;
  for (const PairScores &p: pairs) sum += p.bleu;
  report.bleu2 = bleu_from_stats(sum, 2);
  report.bleu4 = bleu_from_stats(sum, 4);
  report.rouge1 = mean_of(pairs, &PairScores::rouge1);
  report.rouge2 = mean_of(pairs, &PairScores::rouge2);
  report.rouge_l = mean_of(pairs, &PairScores::rouge_l);
  report.meteor = mean_of(pairs, &PairScores::meteor);
  report.levenshtein = mean_of(pairs, &PairScores::levenshtein);
  if (task == Task::kCap2Mol) {
    report.exact_match = mean_of_optional(pairs, &PairScores::exact);
    report.morgan_fts = mean_of_optional(pairs, &PairScores::morgan_fts);
    report.path_fts = mean_of_optional(pairs, &PairScores::path_fts);
    report.validity = mean_of_optional(pairs, &PairScores::valid);
    report.invalid = static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(),
                      [](const PairScores &p) { return !p.valid.value_or(false); }));
  }
  report.pairs = std::move(pairs);
  return report;
}

std::vector<EvalPair> read_predictions(std::istream &in) {
  std::vector<EvalPair> pairs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    EvalPair p;
    try {
      const auto j = nlohmann::json::parse(line);
      p.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      p.reference = j.at("reference").get<std::string>();
      p.hypothesis = j.at("hypothesis").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
      throw MetricError(MetricError::Kind::kFormat,
                        "prediction line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(p.id).second) {
      throw MetricError(MetricError::Kind::kDuplicateId,
                        "duplicate prediction id '" + p.id + "'");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::string report_json(const MetricReport &report, std::string_view version,
                        const std::map<std::string, std::string> &config) {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["task"] = prompt::to_string(report.task);
  j["config"] = config;
  j["counts"] = { { "total", report.total }, { "invalid", report.invalid } };

  nlohmann::ordered_json m;
  m["BLEU-2"] = report.bleu2;
  m["BLEU-4"] = report.bleu4;
  m["ROUGE-1"] = report.rouge1;
  m["ROUGE-2"] = report.rouge2;
  m["ROUGE-L"] = report.rouge_l;
  m["METEOR-lite"] = report.meteor;
  m["Levenshtein (mean)"] = report.levenshtein;
  if (report.exact_match) m["EM"] = *report.exact_match;
  if (report.path_fts) m["path FTS"] = *report.path_fts;
  if (report.morgan_fts) m["Morgan FTS"] = *report.morgan_fts;
  if (report.validity) m["Validity"] = *report.validity;
  j["metrics"] = std::move(m);

  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const PairScores &p: report.pairs) {
    nlohmann::ordered_json e;
    e["id"] = p.id;
    e["bleu"] = { { "matches", p.bleu.matches }, { "totals", p.bleu.totals },
                  { "hyp_len", p.bleu.hyp_len }, { "ref_len", p.bleu.ref_len } };
    e["rouge1"] = p.rouge1;
    e["rouge2"] = p.rouge2;
    e["rougeL"] = p.rouge_l;
    e["meteor_lite"] = p.meteor;
    e["levenshtein"] = p.levenshtein;
    if (p.exact) e["exact"] = *p.exact;
    if (p.path_fts) e["path_fts"] = *p.path_fts;
    if (p.morgan_fts) e["morgan_fts"] = *p.morgan_fts;
    if (p.valid) e["valid"] = *p.valid;
    pairs.push_back(std::move(e));
  }
  j["pairs"] = std::move(pairs);
  return j.dump(2);
}

std::string report_table(const MetricReport &report) {
  std::vector<std::pair<std::string, std::string>> cols;
  auto fixed = [](double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
  };
  if (report.task == Task::kMol2Cap) {
    cols = { { "BLEU-2", fixed(report.bleu2, 3) },     { "BLEU-4", fixed(report.bleu4, 3) },
             { "ROUGE-1", fixed(report.rouge1, 3) },   { "ROUGE-2", fixed(report.rouge2, 3) },
             { "ROUGE-L", fixed(report.rouge_l, 3) }, { "METEOR-lite", fixed(report.meteor, 3) } };
  } else {
    cols = { { "BLEU", fixed(report.bleu4, 3) },
             { "EM", fixed(report.exact_match.value_or(0.0), 3) },
             { "Levenshtein (mean)", fixed(report.levenshtein, 2) },
             { "path FTS", fixed(report.path_fts.value_or(0.0), 3) },
             { "Morgan FTS", fixed(report.morgan_fts.value_or(0.0), 3) },
             { "Validity", fixed(report.validity.value_or(0.0), 3) } };
  }

  std::ostringstream header;
  std::ostringstream values;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto width = static_cast<int>(std::max(cols[i].first.size(), cols[i].second.size()));
    if (i > 0) {
      header << "  ";
      values << "  ";
    }
    header << std::setw(width) << cols[i].first;
    values << std::setw(width) << cols[i].second;
  }
  return header.str() + "\n" + values.str() + "\n";
}

}  // namespace icma::metrics
