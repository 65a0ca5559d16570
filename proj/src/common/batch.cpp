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

#include "charnmt/common/batch.h"

#include <algorithm>

#include "charnmt/common/error.h"

namespace charnmt {

std::vector<bool> PaddedIds::PadMask() const {
  std::vector<bool> mask(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) mask[i] = ids[i] == kPadId;
  return mask;
}

std::size_t PaddedIds::NonPadCount() const {
  return static_cast<std::size_t>(std::count_if(ids.begin(), ids.end(), [](TokenId t) { return t != kPadId; }));
}

std::size_t PaddedIds::Length(std::size_t b) const {
  std::size_t n = 0;
  while (n < len && at(b, n) != kPadId) ++n;
  return n;
}

PaddedIds PaddedIds::FromSequences(const std::vector<IdSequence>& rows) {
  PaddedIds out;
  out.batch = rows.size();
  for (const auto& r : rows) out.len = std::max(out.len, r.size());
  out.ids.assign(out.batch * out.len, kPadId);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (std::size_t i = 0; i < rows[b].size(); ++i) {
      if (rows[b][i] == kPadId) throw DataError("sequence " + std::to_string(b) + " contains PAD");
      out.ids[b * out.len + i] = rows[b][i];
    }
  }
  return out;
}

Batch MakeBatch(const std::vector<SentencePair>& pairs, const std::vector<std::size_t>& indices) {
  if (pairs.empty()) throw DataError("cannot build an empty batch");
  std::vector<IdSequence> src, tin, tout;
  for (const auto& p : pairs) {
    if (p.src.empty()) throw DataError("empty source sequence in batch");
    src.push_back(p.src);
    IdSequence in{kBosId};
    in.insert(in.end(), p.tgt.begin(), p.tgt.end());
    IdSequence out(p.tgt);
    out.push_back(kEosId);
    tin.push_back(std::move(in));
    tout.push_back(std::move(out));
  }
  Batch batch{PaddedIds::FromSequences(src), PaddedIds::FromSequences(tin), PaddedIds::FromSequences(tout), indices};
  return batch;
}

}  // namespace charnmt
