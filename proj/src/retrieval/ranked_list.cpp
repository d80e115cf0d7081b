#include "icma/retrieval/ranked_list.h"

#include <algorithm>
#include <stdexcept>

namespace icma::retrieval {

RankedList top_n(std::vector<RankedEntry> scored, std::size_t n) {
  n = std::min(n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                    scored.end(), ranks_before);
  scored.resize(n);
  return RankedList { std::move(scored) };
}

RankedList top_n(std::span<const std::string> ids, std::span<const double> scores,
                 std::size_t n, std::string_view exclude_id) {
  if (ids.size() != scores.size()) {
    throw std::invalid_argument("ids and scores differ in length");
  }
  std::vector<std::size_t> order;
  order.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (exclude_id.empty() || ids[i] != exclude_id) order.push_back(i);
  }
  n = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t l, std::size_t r) {
                      if (scores[l] != scores[r]) return scores[l] > scores[r];
                      return ids[l] < ids[r];
                    });
  RankedList out;
  out.entries.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.entries.push_back({ ids[order[k]], scores[order[k]] });
  return out;
}

}  // namespace icma::retrieval
