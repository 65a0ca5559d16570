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

#ifndef CHARNMT_TRAINING_CONFIG_H_
#define CHARNMT_TRAINING_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>

#include "charnmt/recurrent/recurrent.h"
#include "charnmt/transformer/transformer.h"

namespace charnmt::training {

enum class Architecture { kTransformer, kRecurrent };
enum class Batching { kByTokens, kBySentences };
// kNoam: base * d^-0.5 * min(step^-0.5, step * warmup^-1.5).
// kHalveOnStall: lr halves after every epoch whose validation perplexity
// does not improve on the best so far. kConstant: lr as given.
enum class Schedule { kNoam, kHalveOnStall, kConstant };
enum class Selection { kPerplexity, kAccuracy };

std::string ArchitectureName(Architecture a);
Architecture ParseArchitecture(const std::string& name);

struct TrainConfig {
  Architecture architecture = Architecture::kTransformer;
  Batching batching = Batching::kByTokens;
  std::size_t batch_limit = 4096;  // target tokens or sentence pairs
  std::size_t epochs = 50;
  double lr = 1.0;
  Schedule schedule = Schedule::kNoam;
  std::size_t warmup = 8000;
  Selection selection = Selection::kPerplexity;
  std::uint64_t seed = 1;
  double label_smoothing = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double grad_clip = 0.0;  // 0 disables
  std::size_t max_length = 1024;

  void Validate() const;
  std::map<std::string, std::string> ToEntries() const;
};

TrainConfig DefaultTrainConfig(Architecture architecture);

// Training options plus both architectures' hyperparameters. Config files
// use bare keys for TrainConfig ("epochs=15") and "transformer." /
// "recurrent." prefixes for model keys.
struct ExperimentConfig {
  TrainConfig train;
  transformer::TransformerConfig transformer;
  recurrent::LstmConfig recurrent;

  std::map<std::string, std::string> ToEntries() const;
  // Unset train keys take the architecture's defaults.
  static ExperimentConfig FromEntries(const std::map<std::string, std::string>& entries);
  static ExperimentConfig Load(std::istream& in, const std::string& origin);
};

}  // namespace charnmt::training

#endif  // CHARNMT_TRAINING_CONFIG_H_
