#include "icma/prompt.h"

#include <charconv>

namespace icma::prompt {

std::string_view to_string(Task task) {
  return task == Task::kMol2Cap ? "mol2cap" : "cap2mol";
}

std::optional<Task> parse_task(std::string_view text) {
  if (text == "mol2cap") return Task::kMol2Cap;
  if (text == "cap2mol") return Task::kCap2Mol;
  return std::nullopt;
}

std::string_view query_input_of(const retrieval::CorpusRecord &record, Task task) {
  return task == Task::kMol2Cap ? record.smiles : record.caption;
}

std::string_view query_target_of(const retrieval::CorpusRecord &record, Task task) {
  return task == Task::kMol2Cap ? record.caption : record.smiles;
}

ContextExample make_example(const retrieval::CorpusRecord &record, Task task,
                            std::size_t rank) {
  return { record.id, std::string(query_input_of(record, task)),
           std::string(query_target_of(record, task)), rank };
}

std::string Segment::label() const {
  switch (kind) {
  case SegmentKind::kTemplate:
    return "template";
  case SegmentKind::kContextInput:
    return "context_input_" + std::to_string(example);
  case SegmentKind::kContextTarget:
    return "context_target_" + std::to_string(example);
  case SegmentKind::kQueryInput:
    return "query_input";
  case SegmentKind::kQueryTarget:
    return "query_target";
  }
  return "template";
}

std::optional<Segment> Segment::from_label(std::string_view label,
                                           std::size_t start, std::size_t end) {
  Segment seg { SegmentKind::kTemplate, 0, start, end };
  if (label == "template") return seg;
  if (label == "query_input") {
    seg.kind = SegmentKind::kQueryInput;
    return seg;
  }
  if (label == "query_target") {
    seg.kind = SegmentKind::kQueryTarget;
    return seg;
  }

  std::string_view rest;
  if (label.rfind("context_input_", 0) == 0) {
    seg.kind = SegmentKind::kContextInput;
    rest = label.substr(14);
  } else if (label.rfind("context_target_", 0) == 0) {
    seg.kind = SegmentKind::kContextTarget;
    rest = label.substr(15);
  } else {
    return std::nullopt;
  }
  const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(),
                                         seg.example);
  if (ec != std::errc() || ptr != rest.data() + rest.size() || seg.example == 0) {
    return std::nullopt;
  }
  return seg;
}

namespace {

struct Templates {
  std::string_view example_prefix;
  std::string_view example_target;
  std::string_view final_prefix;
  std::string_view final_target;
};

constexpr Templates kMol2Cap {
  "Generate a caption for the molecule: ",
  "\nCaption: ",
  "Based on the above examples, analyse the similarities and differences "
  "between the examples and finally generate a caption for the molecule: ",
  ". \nCaption: ",
};

constexpr Templates kCap2Mol {
  "Generate a molecule for the caption: ",
  "\nMolecule: ",
  "Based on the above examples, analyse the similarities and differences "
  "between the examples and finally generate a molecule for the caption: ",
  ". \nMolecule: ",
};

constexpr std::string_view kExampleSeparator = "\n\n";

class Renderer {
public:
  explicit Renderer(PromptBundle &bundle): b_(bundle) { }

  void text(std::string_view s) { append(SegmentKind::kTemplate, 0, s); }

  void slot(SegmentKind kind, std::size_t example, std::string_view s) {
    if (s.empty()) {
      throw PromptError(PromptError::Kind::kEmptyText,
                        "prompt slot " + Segment { kind, example }.label() + " is empty");
    }
    append(kind, example, s);
  }

private:
  void append(SegmentKind kind, std::size_t example, std::string_view s) {
    if (s.empty()) return;
    const std::size_t start = b_.rendered.size();
    b_.rendered += s;
    if (kind == SegmentKind::kTemplate && !b_.segments.empty()
        && b_.segments.back().kind == SegmentKind::kTemplate) {
      b_.segments.back().end = b_.rendered.size();
      return;
    }
    b_.segments.push_back({ kind, example, start, b_.rendered.size() });
  }

  PromptBundle &b_;
};

void rerender(PromptBundle &bundle) {
  const Templates &t = bundle.task == Task::kMol2Cap ? kMol2Cap : kCap2Mol;
  bundle.rendered.clear();
  bundle.segments.clear();

  Renderer r(bundle);
  for (std::size_t i = 0; i < bundle.examples.size(); ++i) {
    const ContextExample &ex = bundle.examples[i];
    r.text(t.example_prefix);
    r.slot(SegmentKind::kContextInput, i + 1, ex.input_text);
    r.text(t.example_target);
    r.slot(SegmentKind::kContextTarget, i + 1, ex.target_text);
    r.text(kExampleSeparator);
  }
  r.text(t.final_prefix);
  r.slot(SegmentKind::kQueryInput, 0, bundle.query_input);
  r.text(t.final_target);
  if (bundle.query_target) {
    r.slot(SegmentKind::kQueryTarget, 0, *bundle.query_target);
  }
}

}  // namespace

PromptBundle render_prompt(Task task, std::vector<ContextExample> examples,
                           std::string query_input,
                           std::optional<std::string> query_target) {
  PromptBundle bundle;
  bundle.task = task;
  bundle.examples = std::move(examples);
  bundle.query_input = std::move(query_input);
  bundle.query_target = std::move(query_target);
  rerender(bundle);
  return bundle;
}

void check_tiling(const PromptBundle &bundle) {
  std::size_t pos = 0;
  for (const Segment &s: bundle.segments) {
    if (s.start != pos || s.end <= s.start) {
      throw PromptError(PromptError::Kind::kBadSegments,
                        "segment " + s.label() + " does not continue the tiling");
    }
    pos = s.end;
  }
  if (pos != bundle.rendered.size()) {
    throw PromptError(PromptError::Kind::kBadSegments,
                      "segments do not cover the rendered prompt");
  }
}

std::string_view to_string(UnitCounter counter) {
  switch (counter) {
  case UnitCounter::kBytes:
    return "bytes";
  case UnitCounter::kWords:
    return "whitespace-words";
  case UnitCounter::kChars:
    return "chars";
  }
  return "bytes";
}

UnitCounter parse_counter(std::string_view name) {
  if (name == "bytes") return UnitCounter::kBytes;
  if (name == "whitespace-words" || name == "words") return UnitCounter::kWords;
  if (name == "chars") return UnitCounter::kChars;
  throw PromptError(PromptError::Kind::kUnknownCounter,
                    "unknown unit counter '" + std::string(name) + "'");
}

std::size_t count_units(std::string_view text, UnitCounter counter) {
  switch (counter) {
  case UnitCounter::kBytes:
    return text.size();
  case UnitCounter::kWords: {
    std::size_t words = 0;
    bool in_word = false;
    for (char c: text) {
      const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r'
                         || c == '\f' || c == '\v';
      if (!space && !in_word) ++words;
      in_word = !space;
    }
    return words;
  }
  case UnitCounter::kChars: {
    std::size_t chars = 0;
    for (char c: text) {
      if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++chars;
    }
    return chars;
  }
  }
  return 0;
}

Truncation truncate_to_cutoff(const PromptBundle &bundle, std::size_t cutoff,
                              UnitCounter counter) {
  Truncation out { bundle, 0 };
  while (count_units(out.bundle.rendered, counter) > cutoff) {
    if (out.bundle.examples.empty()) {
      throw PromptError(PromptError::Kind::kCutoffTooSmall,
                        "prompt without examples has "
                            + std::to_string(count_units(out.bundle.rendered, counter))
                            + " units, cutoff is " + std::to_string(cutoff));
    }
    out.bundle.examples.erase(out.bundle.examples.begin());
    ++out.removed;
    rerender(out.bundle);
  }
  return out;
}

std::string_view to_string(LossMode mode) {
  return mode == LossMode::kSft ? "sft" : "icma";
}

std::optional<LossMode> parse_loss_mode(std::string_view text) {
  if (text == "sft") return LossMode::kSft;
  if (text == "icma") return LossMode::kIcma;
  return std::nullopt;
}

bool LossMaskSpec::active(const Segment &segment) const {
  if (segment.kind == SegmentKind::kQueryTarget) return true;
  return mode == LossMode::kIcma && segment.kind == SegmentKind::kContextTarget;
}

LossBreakdown compute_loss(const PromptBundle &bundle, const LossMaskSpec &mask,
                           std::span<const TokenLogprob> tokens) {
  std::size_t pos = 0;
  for (const TokenLogprob &t: tokens) {
    if (t.start != pos || t.end <= t.start) {
      throw PromptError(PromptError::Kind::kSpanMismatch,
                        "token span [" + std::to_string(t.start) + ", "
                            + std::to_string(t.end) + ") breaks the tiling at byte "
                            + std::to_string(pos));
    }
    pos = t.end;
  }
  if (pos != bundle.rendered.size()) {
    throw PromptError(PromptError::Kind::kSpanMismatch,
                      "token spans cover " + std::to_string(pos) + " of "
                          + std::to_string(bundle.rendered.size()) + " bytes");
  }

  LossBreakdown loss;
  auto seg = bundle.segments.begin();
  for (const TokenLogprob &t: tokens) {
    const std::size_t mid2 = t.start + t.end;
    while (seg != bundle.segments.end() && 2 * seg->end <= mid2) ++seg;
    if (seg == bundle.segments.end() || 2 * seg->start > mid2) continue;
    if (!mask.active(*seg)) continue;
    if (seg->kind == SegmentKind::kQueryTarget) {
      loss.query_target -= t.logprob;
    } else {
      loss.context_targets -= t.logprob;
    }
  }
  loss.total = mask.mode == LossMode::kIcma
                   ? loss.query_target + loss.context_targets
                   : loss.query_target;
  return loss;
}

}  // namespace icma::prompt
