#include "icma/rerank.h"

#include <algorithm>

namespace icma {

void RandomWalkConfig::validate() const {
  if (n < 1 || n > N) {
    throw std::invalid_argument("random walk requires 1 <= n <= N");
  }
  if (!(p_max >= 0.0 && p_max < 1.0)) {
    throw std::invalid_argument("random walk requires 0 <= p_max < 1");
  }
}

double skip_probability(std::size_t j, std::size_t N, double p_max) {
  if (j < 1 || j > N) throw std::out_of_range("rank outside 1..N");
  if (N == 1) return 0.0;
  return p_max * static_cast<double>(N - j) / static_cast<double>(N - 1);
}

namespace {

SelectionOutcome walk(const retrieval::RankedList &rough, std::size_t N,
                      std::size_t n, double p_max, Xoshiro256 &rng) {
  SelectionOutcome out;
  for (std::size_t j = 1; j <= N && out.selected.size() < n; ++j) {
    const double u = rng.uniform();
    ++out.draws;
    if (u < skip_probability(j, N, p_max)) continue;
    out.selected.push_back({ j, rough[j - 1].id });
  }
  out.early_stopped = out.selected.size() < n;
  return out;
}

}  // namespace

SelectionOutcome random_walk_select(const retrieval::RankedList &rough,
                                    const RandomWalkConfig &cfg, Xoshiro256 &rng) {
  cfg.validate();
  if (rough.size() < cfg.N) {
    throw RerankError(RerankError::Kind::kShortList,
                      "rough list has " + std::to_string(rough.size())
                          + " entries, walk needs " + std::to_string(cfg.N));
  }
  return walk(rough, cfg.N, cfg.n, cfg.p_max, rng);
}

SelectionOutcome random_walk_select(const retrieval::RankedList &rough,
                                    const RandomWalkConfig &cfg,
                                    std::string_view record_id) {
  Xoshiro256 rng = record_stream(cfg.seed, record_id);
  return random_walk_select(rough, cfg, rng);
}

SelectionOutcome random_walk_select_padded(const retrieval::RankedList &rough,
                                           const RandomWalkConfig &cfg,
                                           std::string_view record_id) {
  cfg.validate();
  const std::size_t N = std::min(cfg.N, rough.size());
  if (N == 0) return {};
  Xoshiro256 rng = record_stream(cfg.seed, record_id);
  return walk(rough, N, cfg.n, cfg.p_max, rng);
}

long double early_stop_probability(const RandomWalkConfig &cfg) {
  cfg.validate();
  // prob[s]: walk still running after the ranks seen so far with s selected.
  std::vector<long double> prob(cfg.n, 0.0L);
  prob[0] = 1.0L;
  for (std::size_t j = 1; j <= cfg.N; ++j) {
    long double p = cfg.N == 1 ? 0.0L
                               : static_cast<long double>(cfg.p_max)
                                     * static_cast<long double>(cfg.N - j)
                                     / static_cast<long double>(cfg.N - 1);
    std::vector<long double> next(cfg.n, 0.0L);
    for (std::size_t s = 0; s < cfg.n; ++s) {
      next[s] += prob[s] * p;
      if (s + 1 < cfg.n) next[s + 1] += prob[s] * (1.0L - p);
    }
    prob.swap(next);
  }
  long double total = 0.0L;
  for (long double v: prob) total += v;
  return total;
}

WalkStatistics simulate_walks(const RandomWalkConfig &cfg, std::size_t trials,
                              std::uint64_t seed) {
  cfg.validate();
  retrieval::RankedList rough;
  for (std::size_t j = 1; j <= cfg.N; ++j) {
    rough.entries.push_back({ std::to_string(j), 0.0 });
  }

  WalkStatistics stats;
  stats.trials = trials;
  stats.visits.assign(cfg.N, 0);
  stats.skips.assign(cfg.N, 0);
  Xoshiro256 rng = Xoshiro256::from_seed(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const SelectionOutcome out = walk(rough, cfg.N, cfg.n, cfg.p_max, rng);
    std::size_t next = 0;
    for (std::size_t j = 1; j <= out.draws; ++j) {
      ++stats.visits[j - 1];
      if (next < out.selected.size() && out.selected[next].rank == j) {
        ++next;
      } else {
        ++stats.skips[j - 1];
      }
    }
    if (out.early_stopped) ++stats.early_stops;
  }
  return stats;
}

std::vector<SelectedExample> sequence_reverse(const SelectionOutcome &outcome) {
  return sequence_reverse(outcome, [](const SelectedExample &e) { return e; });
}

}  // namespace icma
