#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "icma/retrieval/corpus.h"

namespace icma::prompt {

enum class Task {
  kMol2Cap,
  kCap2Mol,
};

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view text);

class PromptError: public std::runtime_error {
public:
  enum class Kind {
    kEmptyText,
    kUnknownCounter,
    kCutoffTooSmall,
    kSpanMismatch,
    kBadSegments,
  };

  PromptError(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) { }

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

struct ContextExample {
  std::string source_id;
  std::string input_text;
  std::string target_text;
  std::size_t rank = 0;
};

/// Mol2Cap reads SMILES and writes the caption; Cap2Mol the reverse.
ContextExample make_example(const retrieval::CorpusRecord &record, Task task,
                            std::size_t rank);
std::string_view query_input_of(const retrieval::CorpusRecord &record, Task task);
std::string_view query_target_of(const retrieval::CorpusRecord &record, Task task);

enum class SegmentKind {
  kTemplate,
  kContextInput,
  kContextTarget,
  kQueryInput,
  kQueryTarget,
};

/// Byte range [start, end) of the rendered prompt. `example` is the 1-based
/// position of the context example for context segments, 0 otherwise.
struct Segment {
  SegmentKind kind = SegmentKind::kTemplate;
  std::size_t example = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  /// "template", "context_input_<i>", "context_target_<i>", "query_input",
  /// "query_target".
  std::string label() const;
  static std::optional<Segment> from_label(std::string_view label,
                                           std::size_t start, std::size_t end);

  friend bool operator==(const Segment &, const Segment &) = default;
};

struct PromptBundle {
  Task task = Task::kMol2Cap;
  std::vector<ContextExample> examples;
  std::string query_input;
  std::optional<std::string> query_target;
  std::string rendered;
  std::vector<Segment> segments;
};

/// Renders the context templates. `examples` must already be in emission
/// order (see sequence_reverse). Consecutive template text is one segment.
///
/// Throws PromptError(kEmptyText) if any input or target text is empty.
PromptBundle render_prompt(Task task, std::vector<ContextExample> examples,
                           std::string query_input,
                           std::optional<std::string> query_target = std::nullopt);

/// Throws PromptError(kBadSegments) unless the segments are non-empty,
/// ordered and cover the rendered text exactly.
void check_tiling(const PromptBundle &bundle);

enum class UnitCounter {
  kBytes,
  kWords,  // maximal runs of non-whitespace
  kChars,  // UTF-8 code points
};

std::string_view to_string(UnitCounter counter);
/// Accepts "bytes", "whitespace-words" (or "words") and "chars".
/// Throws PromptError(kUnknownCounter).
UnitCounter parse_counter(std::string_view name);

std::size_t count_units(std::string_view text, UnitCounter counter);

struct Truncation {
  PromptBundle bundle;
  std::size_t removed = 0;
};

/// Drops whole examples from the front (farthest from the query) until the
/// rendered prompt fits. Throws PromptError(kCutoffTooSmall) when even the
/// example-free prompt is over the cutoff.
Truncation truncate_to_cutoff(const PromptBundle &bundle, std::size_t cutoff,
                              UnitCounter counter);

enum class LossMode {
  kSft,
  kIcma,
};

std::string_view to_string(LossMode mode);
std::optional<LossMode> parse_loss_mode(std::string_view text);

/// sft: query target only. icma: query target and every context target.
struct LossMaskSpec {
  LossMode mode = LossMode::kIcma;

  bool active(const Segment &segment) const;
};

struct TokenLogprob {
  std::size_t start = 0;
  std::size_t end = 0;
  double logprob = 0.0;
};

struct LossBreakdown {
  double query_target = 0.0;
  double context_targets = 0.0;
  double total = 0.0;  // query_target (+ context_targets under icma)
};

/// Negative log-likelihood over the tokens whose span midpoint falls in an
/// active segment. A token belongs to segment s iff
/// 2 s.start <= start + end < 2 s.end.
///
/// Throws PromptError(kSpanMismatch) unless the token spans tile the
/// rendered text.
LossBreakdown compute_loss(const PromptBundle &bundle, const LossMaskSpec &mask,
                           std::span<const TokenLogprob> tokens);

}  // namespace icma::prompt
