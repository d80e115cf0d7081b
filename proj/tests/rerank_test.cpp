#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "icma/random.h"
#include "icma/rerank.h"

#include "oracles.h"

namespace icma {
namespace {

using retrieval::RankedList;

RankedList rough_list(std::size_t N) {
  RankedList list;
  for (std::size_t j = 1; j <= N; ++j) {
    list.entries.push_back({ "r" + std::to_string(j), 1.0 / static_cast<double>(j) });
  }
  return list;
}

std::vector<std::size_t> ranks(const SelectionOutcome &out) {
  std::vector<std::size_t> r;
  for (const auto &e: out.selected) r.push_back(e.rank);
  return r;
}

// Test-only comparison strategy: split the N ranks into n contiguous buckets
// and take one rank uniformly from each.
std::vector<std::size_t> bucket_sample(std::size_t N, std::size_t n, Xoshiro256 &rng) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t lo = b * N / n + 1;
    const std::size_t hi = (b + 1) * N / n;
    std::uniform_int_distribution<std::size_t> pick(lo, hi);
    out.push_back(pick(rng));
  }
  return out;
}

TEST(Random, ReferenceOutputs) {
  std::uint64_t state = 1234567;
  EXPECT_EQ(splitmix64_next(state), 6457827717110365317ULL);
  EXPECT_EQ(splitmix64_next(state), 3203168211198807973ULL);

  Xoshiro256 rng({ 1, 2, 3, 4 });
  EXPECT_EQ(rng(), 11520ULL);
  EXPECT_EQ(rng(), 0ULL);
  EXPECT_EQ(rng(), 1509978240ULL);
}

TEST(Random, UniformRange) {
  Xoshiro256 rng = Xoshiro256::from_seed(8);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(Random, RecordStreamsDiffer) {
  Xoshiro256 a = record_stream(1, "CID1");
  Xoshiro256 b = record_stream(1, "CID2");
  Xoshiro256 c = record_stream(2, "CID1");
  Xoshiro256 again = record_stream(1, "CID1");
  const auto first = a();
  EXPECT_NE(first, b());
  EXPECT_NE(first, c());
  EXPECT_EQ(first, again());
}

TEST(SkipProbability, Examples) {
  EXPECT_DOUBLE_EQ(skip_probability(1, 10, 0.09), 0.09);
  EXPECT_EQ(skip_probability(10, 10, 0.09), 0.0);
  EXPECT_DOUBLE_EQ(skip_probability(5, 10, 0.09), 0.05);
  for (std::size_t j = 1; j <= 10; ++j) {
    EXPECT_NEAR(skip_probability(j, 10, 0.09), static_cast<double>(10 - j) / 100, 1e-17);
  }
  EXPECT_EQ(skip_probability(1, 1, 0.5), 0.0);
  EXPECT_THROW(skip_probability(0, 10, 0.09), std::out_of_range);
  EXPECT_THROW(skip_probability(11, 10, 0.09), std::out_of_range);
}

TEST(RandomWalk, ConfigValidation) {
  EXPECT_NO_THROW((RandomWalkConfig { 10, 2, 0.09 }.validate()));
  EXPECT_THROW((RandomWalkConfig { 10, 0, 0.09 }.validate()), std::invalid_argument);
  EXPECT_THROW((RandomWalkConfig { 2, 3, 0.09 }.validate()), std::invalid_argument);
  EXPECT_THROW((RandomWalkConfig { 10, 2, 1.0 }.validate()), std::invalid_argument);
  EXPECT_THROW((RandomWalkConfig { 10, 2, -0.1 }.validate()), std::invalid_argument);
}

TEST(RandomWalk, ZeroSkipTakesTop) {
  for (std::size_t n = 1; n <= 10; ++n) {
    const RandomWalkConfig cfg { 10, n, 0.0, 3 };
    const auto out = random_walk_select(rough_list(10), cfg, "q");
    std::vector<std::size_t> expected;
    for (std::size_t j = 1; j <= n; ++j) expected.push_back(j);
    EXPECT_EQ(ranks(out), expected);
    EXPECT_FALSE(out.early_stopped);
    EXPECT_EQ(out.draws, n);
    EXPECT_EQ(out.selected.front().id, "r1");
  }
}

TEST(RandomWalk, Invariants) {
  const auto rough = rough_list(10);
  for (double p_max: { 0.09, 0.5, 0.95 }) {
    for (std::size_t n = 1; n <= 10; ++n) {
      const RandomWalkConfig cfg { 10, n, p_max, 17 };
      for (int k = 0; k < 200; ++k) {
        const auto out = random_walk_select(rough, cfg, "rec" + std::to_string(k));
        ASSERT_FALSE(out.selected.empty());
        for (std::size_t i = 1; i < out.selected.size(); ++i) {
          ASSERT_LT(out.selected[i - 1].rank, out.selected[i].rank);
        }
        for (const auto &e: out.selected) ASSERT_EQ(e.id, rough[e.rank - 1].id);
        if (out.early_stopped) {
          ASSERT_LT(out.selected.size(), n);
          ASSERT_EQ(out.selected.back().rank, 10);
          ASSERT_EQ(out.draws, 10);
        } else {
          ASSERT_EQ(out.selected.size(), n);
          ASSERT_EQ(out.draws, out.selected.back().rank);
        }
      }
    }
  }
}

TEST(RandomWalk, SeedDeterminism) {
  const auto rough = rough_list(10);
  const RandomWalkConfig cfg { 10, 3, 0.5, 42 };
  for (int k = 0; k < 50; ++k) {
    const std::string id = "CID" + std::to_string(k);
    const auto a = random_walk_select(rough, cfg, id);
    const auto b = random_walk_select(rough, cfg, id);
    EXPECT_EQ(a.selected, b.selected);
    EXPECT_EQ(a.draws, b.draws);
    Xoshiro256 rng = record_stream(cfg.seed, id);
    EXPECT_EQ(random_walk_select(rough, cfg, rng).selected, a.selected);
  }
}

TEST(RandomWalk, ShortList) {
  const RandomWalkConfig cfg { 10, 2, 0.09, 0 };
  try {
    random_walk_select(rough_list(9), cfg, "q");
    ADD_FAILURE() << "no error";
  } catch (const RerankError &e) {
    EXPECT_EQ(e.kind(), RerankError::Kind::kShortList);
  }
  const auto padded = random_walk_select_padded(rough_list(3), { 10, 2, 0.9, 0 }, "q");
  EXPECT_FALSE(padded.selected.empty());
  EXPECT_LE(padded.selected.back().rank, 3);
  EXPECT_TRUE(random_walk_select_padded(RankedList {}, cfg, "q").selected.empty());
  // A single candidate is never skipped.
  for (int k = 0; k < 100; ++k) {
    const auto one = random_walk_select_padded(rough_list(1), { 10, 2, 0.99, 0 },
                                               std::to_string(k));
    EXPECT_EQ(ranks(one), (std::vector<std::size_t> { 1 }));
  }
}

TEST(RandomWalk, MonteCarloMatchesSkipProbability) {
  const RandomWalkConfig cfg { 10, 2, 0.09, 0 };
  const auto stats = simulate_walks(cfg, 1'000'000, 20240611);
  EXPECT_EQ(stats.early_stops, 0);
  EXPECT_EQ(stats.visits[0], 1'000'000);
  for (std::size_t j = 1; j <= 10; ++j) {
    const double p = skip_probability(j, cfg);
    const auto visits = static_cast<double>(stats.visits[j - 1]);
    if (visits == 0) continue;
    const double sigma = std::sqrt(visits * p * (1 - p));
    EXPECT_LE(std::abs(static_cast<double>(stats.skips[j - 1]) - visits * p), 3 * sigma + 1e-9)
        << "rank " << j;
  }
}

TEST(EarlyStop, TenRanksTwoExamples) {
  const RandomWalkConfig cfg { 10, 2, 0.09, 0 };
  const long double dp = early_stop_probability(cfg);
  EXPECT_LE(std::abs(static_cast<double>(dp) - 3.6288e-13), 1e-16);

  // Exact rational value equals 9! / 100^9.
  const auto [num, den] = oracle::early_stop_fraction(10, 2, 9, 100);
  __int128 hundred_pow9 = 1;
  for (int i = 0; i < 9; ++i) hundred_pow9 *= 100;
  EXPECT_TRUE(num * hundred_pow9 == den * 362880);
  EXPECT_NEAR(static_cast<double>(dp / (static_cast<long double>(num) / den)), 1.0, 1e-15);
}

TEST(EarlyStop, MatchesExactFractions) {
  for (int N = 2; N <= 12; ++N) {
    for (int n = 1; n <= N; ++n) {
      for (int p_num: { 0, 9, 50, 90 }) {
        const auto [num, den] = oracle::early_stop_fraction(N, n, p_num, 100);
        const RandomWalkConfig cfg { static_cast<std::size_t>(N), static_cast<std::size_t>(n),
                                     p_num / 100.0, 0 };
        const long double exact = static_cast<long double>(num) / static_cast<long double>(den);
        EXPECT_NEAR(static_cast<double>(early_stop_probability(cfg)), static_cast<double>(exact),
                    1e-15 * static_cast<double>(exact) + 1e-300)
            << N << " " << n << " " << p_num;
      }
    }
  }
}

TEST(EarlyStop, TrivialCases) {
  for (std::size_t n = 1; n <= 10; ++n) {
    EXPECT_EQ(early_stop_probability({ 10, n, 0.0, 0 }), 0.0L);
  }
  for (double p: { 0.09, 0.5, 0.99 }) {
    EXPECT_EQ(early_stop_probability({ 10, 1, p, 0 }), 0.0L);
  }
}

TEST(EarlyStop, MatchesMonteCarlo) {
  const RandomWalkConfig cfg { 4, 4, 0.9, 0 };
  const double p = static_cast<double>(early_stop_probability(cfg));
  EXPECT_NEAR(p, 1 - 0.1 * 0.4 * 0.7, 1e-15);
  const std::size_t trials = 200'000;
  const auto stats = simulate_walks(cfg, trials, 5);
  const double sigma = std::sqrt(static_cast<double>(trials) * p * (1 - p));
  EXPECT_LE(std::abs(static_cast<double>(stats.early_stops) - static_cast<double>(trials) * p),
            3 * sigma);
}

TEST(SequenceReverse, Examples) {
  SelectionOutcome out;
  out.selected = { { 1, "a" }, { 3, "c" } };
  EXPECT_EQ(sequence_reverse(out),
            (std::vector<SelectedExample> { { 3, "c" }, { 1, "a" } }));
  out.selected = { { 2, "b" } };
  EXPECT_EQ(sequence_reverse(out), out.selected);
  out.selected = { { 1, "a" }, { 2, "b" } };
  const auto names = sequence_reverse(out, [](const SelectedExample &e) { return e.id + "!"; });
  EXPECT_EQ(names, (std::vector<std::string> { "b!", "a!" }));
}

TEST(SequenceReverse, Involution) {
  const auto rough = rough_list(10);
  for (int k = 0; k < 500; ++k) {
    const RandomWalkConfig cfg { 10, static_cast<std::size_t>(k % 10 + 1), 0.5, 9 };
    const auto out = random_walk_select(rough, cfg, std::to_string(k));
    const auto reversed = sequence_reverse(out);
    ASSERT_EQ(reversed.size(), out.selected.size());
    EXPECT_EQ(reversed.back(), out.selected.front());
    SelectionOutcome back;
    back.selected = reversed;
    EXPECT_EQ(sequence_reverse(back), out.selected);
  }
}

TEST(Baseline, RandomWalkFavoursTopRanks) {
  const RandomWalkConfig cfg { 10, 2, 0.09, 0 };
  const auto rough = rough_list(10);
  Xoshiro256 walk_rng = Xoshiro256::from_seed(1);
  Xoshiro256 bucket_rng = Xoshiro256::from_seed(1);
  double walk_sum = 0;
  double bucket_sum = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    for (std::size_t r: ranks(random_walk_select(rough, cfg, walk_rng))) {
      walk_sum += static_cast<double>(r);
    }
    const auto buckets = bucket_sample(10, 2, bucket_rng);
    ASSERT_LT(buckets[0], buckets[1]);
    for (std::size_t r: buckets) bucket_sum += static_cast<double>(r);
  }
  const double walk_mean = walk_sum / (2 * trials);
  const double bucket_mean = bucket_sum / (2 * trials);
  EXPECT_LT(walk_mean, 2.0);
  EXPECT_NEAR(bucket_mean, 5.5, 0.1);
}

}  // namespace
}  // namespace icma
