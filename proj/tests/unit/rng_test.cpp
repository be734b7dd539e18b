/*
 * Copyright 2026 The bdmtl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bdmtl/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

namespace bdmtl {
namespace {

TEST(RngTest, StreamsAreReproducible) {
  Rng a = make_stream(42, 3, 17, StreamPurpose::kTrainBatch);
  Rng b = make_stream(42, 3, 17, StreamPurpose::kTrainBatch);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(RngTest, StreamKeysAreIndependent) {
  std::set<std::uint64_t> first;
  for (std::uint64_t seed : {0u, 1u}) {
    for (std::uint64_t agent : {0u, 1u}) {
      for (std::uint64_t round : {0u, 1u}) {
        for (auto p : {StreamPurpose::kTrainBatch, StreamPurpose::kEvalBatch}) {
          for (std::uint64_t lane : {0u, 1u}) {
            first.insert(make_stream(seed, agent, round, p, lane).next());
          }
        }
      }
    }
  }
  EXPECT_EQ(first.size(), 32u);
}

TEST(RngTest, UniformStaysInRange) {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform(15.0, 16.0);
    ASSERT_GE(v, 15.0);
    ASSERT_LE(v, 16.0);
  }
}

TEST(RngTest, IndexCoversRangeUniformly) {
  Rng rng(9);
  std::vector<int> counts(7, 0);
  constexpr int kDraws = 70000;
  for (int i = 0; i < kDraws; ++i) {
    const std::size_t k = rng.index(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  // Binomial sd is about 91; allow 5 sd.
  for (int c : counts) EXPECT_NEAR(c, kDraws / 7, 460);
}

TEST(RngTest, NormalMomentsMatch) {
  Rng rng(11);
  constexpr int kDraws = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / kDraws;
  const double var = sq / kDraws - mean * mean;
  EXPECT_NEAR(mean, 0.0, 3.0 / std::sqrt(kDraws));
  EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(2.0 / kDraws));
}

TEST(RngTest, SatisfiesUniformRandomBitGenerator) {
  static_assert(Rng::min() == 0);
  Rng rng(1);
  const auto x = rng();
  (void)x;
  SUCCEED();
}

}  // namespace
}  // namespace bdmtl
