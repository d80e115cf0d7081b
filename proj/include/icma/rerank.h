#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "icma/random.h"
#include "icma/retrieval/ranked_list.h"

namespace icma {

struct RandomWalkConfig {
  std::size_t N = 10;
  std::size_t n = 2;
  double p_max = 0.09;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless 1 <= n <= N and 0 <= p_max < 1.
  void validate() const;
};

class RerankError: public std::runtime_error {
public:
  enum class Kind {
    kShortList,
  };

  RerankError(Kind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) { }

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

/// p(j) = p_max (N - j) / (N - 1) for 1-based rank j; zero when N == 1.
double skip_probability(std::size_t j, std::size_t N, double p_max);

inline double skip_probability(std::size_t j, const RandomWalkConfig &cfg) {
  return skip_probability(j, cfg.N, cfg.p_max);
}

struct SelectedExample {
  std::size_t rank;  // 1-based position in the rough list
  std::string id;

  friend bool operator==(const SelectedExample &,
                         const SelectedExample &) = default;
};

struct SelectionOutcome {
  std::vector<SelectedExample> selected;
  bool early_stopped = false;
  std::size_t draws = 0;
};

/// Walks the rough list from rank 1, skipping rank j with probability p(j)
/// and otherwise selecting it, until n examples are selected or rank N has
/// been visited. One uniform draw is consumed per visited rank.
///
/// Throws RerankError(kShortList) when the list is shorter than N.
SelectionOutcome random_walk_select(const retrieval::RankedList &rough,
                                    const RandomWalkConfig &cfg, Xoshiro256 &rng);

/// Same walk using the per-record stream record_stream(cfg.seed, record_id).
SelectionOutcome random_walk_select(const retrieval::RankedList &rough,
                                    const RandomWalkConfig &cfg,
                                    std::string_view record_id);

/// Tolerates short lists by walking over the available length, with N in
/// p(j) replaced by that length. An empty list yields an empty selection.
SelectionOutcome random_walk_select_padded(const retrieval::RankedList &rough,
                                           const RandomWalkConfig &cfg,
                                           std::string_view record_id);

/// Exact probability that the walk ends with fewer than n selections,
/// by dynamic programming over (rank, selected count).
long double early_stop_probability(const RandomWalkConfig &cfg);

struct WalkStatistics {
  std::size_t trials = 0;
  std::vector<std::size_t> visits;  // per rank, index 0 is rank 1
  std::vector<std::size_t> skips;
  std::size_t early_stops = 0;

  double skip_frequency(std::size_t j) const {
    return visits[j - 1] == 0
               ? 0.0
               : static_cast<double>(skips[j - 1]) / static_cast<double>(visits[j - 1]);
  }
};

/// Monte Carlo over `trials` walks of a synthetic rough list of length N,
/// all drawn from one generator seeded with `seed`.
WalkStatistics simulate_walks(const RandomWalkConfig &cfg, std::size_t trials,
                              std::uint64_t seed);

/// Selection order reversed: least similar first, rank 1 last.
std::vector<SelectedExample> sequence_reverse(const SelectionOutcome &outcome);

template <typename Resolver>
auto sequence_reverse(const SelectionOutcome &outcome, Resolver &&resolve) {
  using Result = std::invoke_result_t<Resolver &, const SelectedExample &>;
  std::vector<Result> out;
  out.reserve(outcome.selected.size());
  for (auto it = outcome.selected.rbegin(); it != outcome.selected.rend(); ++it) {
    out.push_back(resolve(*it));
  }
  return out;
}

}  // namespace icma
