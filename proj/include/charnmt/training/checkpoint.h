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

#ifndef CHARNMT_TRAINING_CHECKPOINT_H_
#define CHARNMT_TRAINING_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "charnmt/training/trainer.h"

namespace charnmt::training {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::map<std::string, std::string> config;  // experiment config snapshot
  std::size_t epoch = 0;
  double val_perplexity = 0.0;
  double val_accuracy = 0.0;
  std::string rng_state;
};

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  CheckpointMeta meta;
};

// Layout: "CMT1", u32 version, u64 payload size, payload, u32 CRC-32 of all
// preceding bytes. Payload: u32 header line count, length-prefixed UTF-8
// "key=value" lines, u32 tensor count, then per tensor a length-prefixed
// name, u64 element count and little-endian float32 values.
std::vector<unsigned char> SerializeCheckpoint(const Model& model, const CheckpointMeta& meta);
LoadedCheckpoint DeserializeCheckpoint(const std::vector<unsigned char>& bytes);

void SaveCheckpoint(const std::string& path, const Model& model, const CheckpointMeta& meta);
LoadedCheckpoint LoadCheckpoint(const std::string& path);

}  // namespace charnmt::training

#endif  // CHARNMT_TRAINING_CHECKPOINT_H_
