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

#include "charnmt/cli/corpus.h"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "charnmt/common/error.h"
#include "charnmt/numcore/rng.h"
#include "charnmt/tokenize/unicode.h"

namespace charnmt::cli {

using tokenize::SegmentationMode;

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      tokenize::ValidateUtf8(line);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(number) + ": " + e.what());
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

void WriteLines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

tokenize::TokenSequence SegmentLine(std::string_view line, SegmentationMode mode, const tokenize::BpeModel* bpe) {
  switch (mode) {
    case SegmentationMode::kCharJa:
      return tokenize::CharSegment(line, tokenize::Language::kJapanese);
    case SegmentationMode::kMorphemeVi:
      return tokenize::CharSegment(line, tokenize::Language::kVietnamese);
    case SegmentationMode::kWord:
      return tokenize::WordSegment(line);
    case SegmentationMode::kBpe:
      if (bpe == nullptr) throw ParameterError("bpe segmentation needs a BPE model");
      return bpe->Apply(tokenize::WordSegment(line));
  }
  throw ParameterError("unknown segmentation mode");
}

FilterResult FilterCorpus(const std::vector<std::string>& src, const std::vector<std::string>& tgt,
                          std::size_t max_tokens, SegmentationMode src_mode, SegmentationMode tgt_mode) {
  if (src.size() != tgt.size()) {
    throw DataError("source has " + std::to_string(src.size()) + " lines but target has " +
                    std::to_string(tgt.size()));
  }
  if (src_mode == SegmentationMode::kBpe || tgt_mode == SegmentationMode::kBpe) {
    throw ParameterError("filter counts units in char-ja, morpheme-vi or word mode");
  }
  FilterResult r;
  r.stats.input = src.size();
  std::set<std::pair<std::string, std::string>> seen;
  const SegmentationMode histogram_modes[] = {SegmentationMode::kCharJa, SegmentationMode::kWord};
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto s = SegmentLine(src[i], src_mode);
    const auto t = SegmentLine(tgt[i], tgt_mode);
    if (tokenize::WordSegment(src[i]).units.empty() || tokenize::WordSegment(tgt[i]).units.empty()) {
      ++r.stats.empty;
      continue;
    }
    if (s.units.size() > max_tokens || t.units.size() > max_tokens) {
      ++r.stats.over_length;
      continue;
    }
    if (!seen.emplace(src[i], tgt[i]).second) {
      ++r.stats.duplicates;
      continue;
    }
    r.src.push_back(src[i]);
    r.tgt.push_back(tgt[i]);
    for (auto m : histogram_modes) {
      const std::string name(tokenize::ModeName(m));
      ++r.stats.src_lengths[name][SegmentLine(src[i], m).units.size()];
      ++r.stats.tgt_lengths[name][SegmentLine(tgt[i], m).units.size()];
    }
  }
  r.stats.retained = r.src.size();
  return r;
}

std::string FormatStats(const CorpusStats& s) {
  std::ostringstream out;
  out << "input\t" << s.input << "\nretained\t" << s.retained << "\nduplicates\t" << s.duplicates
      << "\nover_length\t" << s.over_length << "\nempty\t" << s.empty << '\n';
  auto dump = [&](const char* side, const std::map<std::string, Histogram>& h) {
    for (const auto& [mode, hist] : h) {
      out << side << '.' << mode << '\t';
      bool first = true;
      for (const auto& [len, count] : hist) {
        out << (first ? "" : " ") << len << ':' << count;
        first = false;
      }
      out << '\n';
    }
  };
  dump("src", s.src_lengths);
  dump("tgt", s.tgt_lengths);
  return out.str();
}

std::string FileDigest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(numcore::Fnv1a64(bytes)));
  return buf;
}

}  // namespace charnmt::cli
