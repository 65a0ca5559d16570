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

#ifndef CHARNMT_CLI_CORPUS_H_
#define CHARNMT_CLI_CORPUS_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "charnmt/tokenize/bpe.h"
#include "charnmt/tokenize/segment.h"

namespace charnmt::cli {

// Lines without their terminators; a trailing newline does not add an empty
// line, and "\r\n" endings are accepted. Invalid UTF-8 is a DataError.
std::vector<std::string> ReadLines(const std::string& path);
void WriteLines(const std::string& path, const std::vector<std::string>& lines);

// Model units of a line. kCharJa splits code points (whitespace kept),
// kMorphemeVi and kWord split on whitespace, kBpe needs `bpe`.
tokenize::TokenSequence SegmentLine(std::string_view line, tokenize::SegmentationMode mode,
                                    const tokenize::BpeModel* bpe = nullptr);

// Length histogram: units -> number of lines.
using Histogram = std::map<std::size_t, std::size_t>;

struct CorpusStats {
  std::size_t input = 0;
  std::size_t retained = 0;
  std::size_t duplicates = 0;
  std::size_t over_length = 0;
  std::size_t empty = 0;
  // Keyed by mode name, over the retained pairs.
  std::map<std::string, Histogram> src_lengths;
  std::map<std::string, Histogram> tgt_lengths;
};

struct FilterResult {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  CorpusStats stats;
};

// Drops pairs with an empty side, exact duplicate pairs (keeping the first)
// and pairs where either side has more than `max_tokens` units in its mode.
// Order is preserved. Mismatched line counts are a DataError.
FilterResult FilterCorpus(const std::vector<std::string>& src, const std::vector<std::string>& tgt,
                          std::size_t max_tokens, tokenize::SegmentationMode src_mode,
                          tokenize::SegmentationMode tgt_mode);

std::string FormatStats(const CorpusStats& stats);

// FNV-1a over the file bytes, as 16 hex digits.
std::string FileDigest(const std::string& path);

}  // namespace charnmt::cli

#endif  // CHARNMT_CLI_CORPUS_H_
