#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace icma::retrieval {

struct RankedEntry {
  std::string id;
  double score = 0.0;

  friend bool operator==(const RankedEntry &, const RankedEntry &) = default;
};

/// Total order used by every ranking: score descending, then id ascending.
inline bool ranks_before(const RankedEntry &l, const RankedEntry &r) {
  if (l.score != r.score) return l.score > r.score;
  return l.id < r.id;
}

struct RankedList {
  std::vector<RankedEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  const RankedEntry &operator[](std::size_t i) const { return entries[i]; }
};

/// Keeps the first n entries under ranks_before.
RankedList top_n(std::vector<RankedEntry> scored, std::size_t n);

/// Same order over parallel id/score arrays, skipping `exclude_id`. Only the
/// surviving ids are copied.
RankedList top_n(std::span<const std::string> ids, std::span<const double> scores,
                 std::size_t n, std::string_view exclude_id = {});

}  // namespace icma::retrieval
