/* Copyright 2026 The charnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CHARNMT_NUMCORE_RNG_H_
#define CHARNMT_NUMCORE_RNG_H_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace charnmt::numcore {

// Seeded generator with named sub-streams. Stream(seed, "decoder.layer1.ffn")
// depends only on the seed and the label, so adding a layer leaves the draws
// of every other layer untouched.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  static Rng Stream(std::uint64_t seed, std::string_view label);

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n); n > 0.
  std::uint64_t Below(std::uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename Item>
  void Shuffle(std::vector<Item>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::string Serialize() const;
  void Deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t Fnv1a64(std::string_view text);

}  // namespace charnmt::numcore

#endif  // CHARNMT_NUMCORE_RNG_H_
