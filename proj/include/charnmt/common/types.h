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

#ifndef CHARNMT_COMMON_TYPES_H_
#define CHARNMT_COMMON_TYPES_H_

#include <cstdint>
#include <vector>

namespace charnmt {

using TokenId = std::int32_t;
using IdSequence = std::vector<TokenId>;

// Reserved vocabulary ids.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kNumSpecials = 4;

// Train enables dropout; Eval is deterministic.
enum class Mode { kTrain, kEval };

}  // namespace charnmt

#endif  // CHARNMT_COMMON_TYPES_H_
