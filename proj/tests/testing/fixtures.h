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

#ifndef CHARNMT_TESTS_TESTING_FIXTURES_H_
#define CHARNMT_TESTS_TESTING_FIXTURES_H_

#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "charnmt/numcore/rng.h"
#include "charnmt/tokenize/bpe.h"
#include "charnmt/tokenize/segment.h"

namespace charnmt::testing {

using Units = std::vector<std::string>;

// Kanji words and their Vietnamese counterparts, split into units.
struct SegmentFixture {
  const char* text;
  tokenize::Language language;
  Units units;
};

inline const std::vector<SegmentFixture>& SegmentFixtures() {
  using tokenize::Language;
  static const std::vector<SegmentFixture> f = {
      {"校長", Language::kJapanese, {"校", "長"}},
      {"村民", Language::kJapanese, {"村", "民"}},
      {"同時", Language::kJapanese, {"同", "時"}},
      {"日本人", Language::kJapanese, {"日", "本", "人"}},
      {"遊歴", Language::kJapanese, {"遊", "歴"}},
      {"hiệu trưởng", Language::kVietnamese, {"hiệu", "trưởng"}},
      {"dân làng", Language::kVietnamese, {"dân", "làng"}},
      {"đồng thời", Language::kVietnamese, {"đồng", "thời"}},
      {"người Nhật", Language::kVietnamese, {"người", "Nhật"}},
      {"người Nhật Bản", Language::kVietnamese, {"người", "Nhật", "Bản"}},
      {"du lịch", Language::kVietnamese, {"du", "lịch"}},
  };
  return f;
}

inline std::string EncodeUtf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

// Mix of ASCII, combining marks, Vietnamese letters, kana, CJK, astral
// symbols and assorted whitespace. Never emits '\n' or surrogates.
inline std::string RandomUnicodeLine(numcore::Rng& rng) {
  static const std::vector<std::pair<char32_t, char32_t>> kRanges = {
      {0x20, 0x7E},     {0x300, 0x36F},     {0xC0, 0x1B0},    {0x1EA0, 0x1EF9}, {0x3041, 0x30FF},
      {0x4E00, 0x9FFF}, {0x1F600, 0x1F64F}, {0xAC00, 0xD7A3}, {0x2000, 0x200A}, {0x3000, 0x3000},
  };
  std::string line;
  const std::size_t len = rng.Below(40);
  for (std::size_t i = 0; i < len; ++i) {
    const auto& [lo, hi] = kRanges[rng.Below(kRanges.size())];
    line += EncodeUtf8(static_cast<char32_t>(lo + rng.Below(hi - lo + 1)));
  }
  return line;
}

// Hand-traced BPE runs. Learning: word counts and a merge budget give the
// exact merge list. Applying: a merge list splits a word exactly so.
struct BpeLearnFixture {
  std::vector<std::pair<std::string, int>> counts;
  std::size_t merges;
  std::vector<tokenize::SymbolPair> expected;
};

struct BpeApplyFixture {
  std::vector<tokenize::SymbolPair> merges;
  std::string word;
  Units expected;
};

inline const std::vector<BpeLearnFixture>& BpeLearnFixtures() {
  static const std::vector<BpeLearnFixture> f = {
      {{{"aaab", 5}}, 1, {{"a", "a"}}},
      // (l,o) 7, then (lo,w</w>) 5 beats (lo,w) 2, then the 2-way tie
      // goes to (e,s).
      {{{"low", 5}, {"lowest", 2}}, 3, {{"l", "o"}, {"lo", "w</w>"}, {"e", "s"}}},
      {{{"x", 7}}, 100, {}},
      {{{"aaab", 5}}, 0, {}},
      {{{"abc", 1}}, 10, {}},
      // All pairs tie at 2; the smallest wins.
      {{{"cd", 2}, {"ab", 2}}, 1, {{"a", "b</w>"}}},
  };
  return f;
}

inline const std::vector<BpeApplyFixture>& BpeApplyFixtures() {
  static const std::vector<BpeApplyFixture> f = {
      {{}, "abc", {"a", "b", "c</w>"}},
      {{{"a", "a"}}, "aaab", {"aa", "a", "b</w>"}},
      {{{"b", "c</w>"}, {"a", "b"}}, "abc", {"a", "bc</w>"}},
      {{{"l", "o"}, {"lo", "w</w>"}, {"lo", "w"}}, "lowest", {"low", "e", "s", "t</w>"}},
      {{{"l", "o"}, {"lo", "w</w>"}, {"lo", "w"}}, "low", {"low</w>"}},
  };
  return f;
}

inline Units SplitWords(const std::string& s) {
  std::istringstream in(s);
  Units out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::vector<Units> SplitLines(const std::vector<const char*>& lines) {
  std::vector<Units> out;
  for (const char* l : lines) out.push_back(SplitWords(l));
  return out;
}

// Corpus BLEU oracles: pooled clipped n-gram counts up to 4, no smoothing.
struct BleuFixture {
  std::vector<const char*> hyp, ref;
  double bleu;
};

inline const std::vector<BleuFixture>& BleuFixtures() {
  static const std::vector<BleuFixture> f = {
      {{"the cat sat on the mat today"}, {"the cat sat on the mat"}, 80.9107},
      {{"the cat is on the mat"}, {"the cat sat on the mat"}, 0.0},
      {{"a b c d e f", "g h i j"}, {"a b c d e x", "g h i j k l"}, 68.5763},
      {{"it is a guide to action which ensures that the military always obeys the commands of the party"},
       {"it is a guide to action that ensures that the military will forever heed party commands"},
       42.0860},
      {{"x y z w v", "p q r s t u"}, {"x y z w v", "p q r s t u"}, 100.0},
      {{"one two three four five six seven eight"}, {"one two three four nine six seven eight ten"}, 44.1248},
      {{"a a a a b b b b"}, {"a a b b a a b b"}, 46.7138},
      {{"w1 w2 w3 w4", "w1 w2 w3 w4"}, {"w1 w2 w3 w4 w5", "w0 w1 w2 w3 w4"}, 77.8801},
      {{"the quick brown fox jumps over the lazy dog"}, {"the quick brown fox jumped over the lazy dog"}, 59.6949},
      {{"a b c d", "e f g h i j k"}, {"a b c d", "e f g h i j z"}, 86.2779},
      {{"the the the the the the the"}, {"the cat is on the mat"}, 0.0},
  };
  return f;
}

// Sentence RIBES oracles with alpha 0.25, beta 0.10.
struct RibesFixture {
  const char* hyp;
  const char* ref;
  double score;
};

inline const std::vector<RibesFixture>& RibesFixtures() {
  static const std::vector<RibesFixture> f = {
      {"a c b d", "a b c d", 0.8333333333},
      {"d c b a", "a b c d", 0.0},
      {"a b c d e", "a b c d e", 1.0},
      {"b a c d e f", "a b c d e f", 0.9333333333},
      {"a b x c", "a b c d e", 0.9076281433},
      {"e d a b c", "a b c d e", 0.3},
      {"a b c", "a b c d e f", 0.9048374180},
      {"f a b c d e", "a b c d e f", 0.6666666667},
      {"a z b y c", "a b c", 0.8801117368},
      {"c a b", "a b c", 0.3333333333},
      {"p q", "q p r", 0.0},
      {"the cat sat", "cat the sat on mat", 0.6236713234},
      {"a a b", "b a a", 0.3333333333},
  };
  return f;
}

}  // namespace charnmt::testing

#endif  // CHARNMT_TESTS_TESTING_FIXTURES_H_
