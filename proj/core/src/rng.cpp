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

#include <cmath>
#include <initializer_list>
#include <numbers>

namespace bdmtl {

namespace {
__extension__ using Uint128 = unsigned __int128;
}  // namespace

std::size_t Rng::index(std::size_t n) {
  const std::uint64_t range = n;
  Uint128 m = static_cast<Uint128>(next()) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      m = static_cast<Uint128>(next()) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

Rng make_stream(std::uint64_t master_seed, std::uint64_t agent,
                std::uint64_t round, StreamPurpose purpose,
                std::uint64_t lane) {
  std::uint64_t state = master_seed;
  std::uint64_t key = splitmix64(state);
  for (std::uint64_t word :
       {agent, round, static_cast<std::uint64_t>(purpose), lane}) {
    state = key ^ (word * 0xd1b54a32d192ed03ULL);
    key = splitmix64(state);
  }
  return Rng(key);
}

}  // namespace bdmtl
