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

#ifndef CHARNMT_CLI_SYNTH_H_
#define CHARNMT_CLI_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace charnmt::cli {

enum class SynthTask { kCopy, kReverse, kLexicon };

SynthTask ParseSynthTask(const std::string& name);

struct SynthOptions {
  SynthTask task = SynthTask::kCopy;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  // Length bounds in code points (both sides for kLexicon).
  std::size_t min_len = 3;
  std::size_t max_len = 8;
};

struct ParallelText {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
};

// kCopy / kReverse: kana strings, target equal to or reversing the source.
// kLexicon: clauses of a toy SOV source language written in kana without
// spaces, translated word by word through a seeded lexicon into an SVO
// Latin-script target with adjectives after their nouns. Pairs are distinct.
// The lexicon depends only on `seed`, so corpora drawn with the same seed and
// different `count` share it and the smaller one is a prefix of the larger.
ParallelText Synthesize(const SynthOptions& options);

}  // namespace charnmt::cli

#endif  // CHARNMT_CLI_SYNTH_H_
