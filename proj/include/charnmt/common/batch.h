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

#ifndef CHARNMT_COMMON_BATCH_H_
#define CHARNMT_COMMON_BATCH_H_

#include <cstddef>
#include <vector>

#include "charnmt/common/types.h"

namespace charnmt {

// Row-major [batch × len] id matrix, right-padded with kPadId.
struct PaddedIds {
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<TokenId> ids;

  TokenId at(std::size_t b, std::size_t i) const { return ids[b * len + i]; }
  // True at PAD cells.
  std::vector<bool> PadMask() const;
  std::size_t NonPadCount() const;
  std::size_t Length(std::size_t b) const;

  static PaddedIds FromSequences(const std::vector<IdSequence>& rows);
};

// One training batch. tgt_in is BOS + target, tgt_out is target + EOS.
struct Batch {
  PaddedIds src;
  PaddedIds tgt_in;
  PaddedIds tgt_out;
  std::vector<std::size_t> indices;  // positions in the source corpus

  std::size_t size() const { return src.batch; }
};

struct SentencePair {
  IdSequence src;
  IdSequence tgt;
};

// Builds a batch from raw (specials-free) pairs.
Batch MakeBatch(const std::vector<SentencePair>& pairs, const std::vector<std::size_t>& indices);

}  // namespace charnmt

#endif  // CHARNMT_COMMON_BATCH_H_
