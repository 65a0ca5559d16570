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

#include "charnmt/cli/synth.h"

#include <algorithm>
#include <set>

#include "charnmt/common/error.h"
#include "charnmt/numcore/rng.h"
#include "charnmt/tokenize/unicode.h"

namespace charnmt::cli {
namespace {

using numcore::Rng;

const std::vector<std::string>& Kana() {
  static const std::vector<std::string> kana = {
      "あ", "い", "う", "え", "お", "か", "き", "く", "け", "こ", "さ", "し", "す", "せ", "そ",
      "た", "ち", "つ", "て", "と", "な", "に", "ぬ", "ね", "の", "は", "ひ", "ふ", "へ", "ほ",
      "ま", "み", "む", "め", "も", "や", "ゆ", "よ", "ら", "り", "る", "れ", "ろ", "わ", "ん"};
  return kana;
}

std::string RandomKana(Rng& rng, std::size_t len) {
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += Kana()[rng.Below(Kana().size())];
  return s;
}

std::string RandomLatin(Rng& rng, std::size_t len) {
  static const std::string consonants = "bcdghklmnpqrstvx";
  static const std::string vowels = "aeiouy";
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    const std::string& pool = i % 2 == 0 ? consonants : vowels;
    s += pool[rng.Below(pool.size())];
  }
  return s;
}

struct Entry {
  std::string src;
  std::string tgt;
};

// Distinct words per side across all classes.
struct Lexicon {
  std::vector<Entry> nouns, adjectives, verbs;
};

Lexicon MakeLexicon(std::uint64_t seed) {
  Rng rng = Rng::Stream(seed, "synth.lexicon");
  std::set<std::string> used_src = {"が", "を"}, used_tgt = {"va"};
  auto fill = [&](std::vector<Entry>& out, std::size_t n) {
    while (out.size() < n) {
      Entry e{RandomKana(rng, 2 + rng.Below(3)), RandomLatin(rng, 2 + rng.Below(3))};
      if (used_src.contains(e.src) || used_tgt.contains(e.tgt)) continue;
      used_src.insert(e.src);
      used_tgt.insert(e.tgt);
      out.push_back(e);
    }
  };
  Lexicon lex;
  fill(lex.nouns, 24);
  fill(lex.adjectives, 8);
  fill(lex.verbs, 10);
  return lex;
}

struct Phrase {
  std::string src;
  std::vector<std::string> tgt;
};

Phrase NounPhrase(const Lexicon& lex, Rng& rng) {
  const Entry& noun = lex.nouns[rng.Below(lex.nouns.size())];
  if (rng.Bernoulli(0.5)) {
    const Entry& adj = lex.adjectives[rng.Below(lex.adjectives.size())];
    return {adj.src + noun.src, {noun.tgt, adj.tgt}};
  }
  return {noun.src, {noun.tgt}};
}

// Source: S が O を V. Target: S V O.
Phrase Clause(const Lexicon& lex, Rng& rng) {
  const Phrase subject = NounPhrase(lex, rng);
  const Phrase object = NounPhrase(lex, rng);
  const Entry& verb = lex.verbs[rng.Below(lex.verbs.size())];
  Phrase c;
  c.src = subject.src + "が" + object.src + "を" + verb.src;
  c.tgt = subject.tgt;
  c.tgt.push_back(verb.tgt);
  c.tgt.insert(c.tgt.end(), object.tgt.begin(), object.tgt.end());
  return c;
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

ParallelText LexiconTask(const SynthOptions& o) {
  const Lexicon lex = MakeLexicon(o.seed);
  Rng rng = Rng::Stream(o.seed, "synth.sentences");
  ParallelText out;
  std::set<std::string> seen;
  std::size_t attempts = 0;
  while (out.src.size() < o.count) {
    if (++attempts > 1000 * (o.count + 10)) {
      throw DataError("cannot draw " + std::to_string(o.count) + " distinct lexicon pairs within length bounds");
    }
    const std::size_t goal = o.min_len + rng.Below(o.max_len - o.min_len + 1);
    std::string src;
    std::vector<std::string> tgt;
    while (tokenize::CountCodePoints(Join(tgt)) < goal) {
      const Phrase c = Clause(lex, rng);
      if (!src.empty()) {
        src += "、";
        tgt.push_back("va");
      }
      src += c.src;
      tgt.insert(tgt.end(), c.tgt.begin(), c.tgt.end());
    }
    src += "。";
    const std::string t = Join(tgt);
    const std::size_t ls = tokenize::CountCodePoints(src), lt = tokenize::CountCodePoints(t);
    if (ls < o.min_len || ls > o.max_len || lt < o.min_len || lt > o.max_len) continue;
    if (!seen.insert(src).second) continue;
    out.src.push_back(src);
    out.tgt.push_back(t);
  }
  return out;
}

ParallelText CopyTask(const SynthOptions& o, bool reverse) {
  Rng rng = Rng::Stream(o.seed, reverse ? "synth.reverse" : "synth.copy");
  ParallelText out;
  std::set<std::string> seen;
  std::size_t attempts = 0;
  while (out.src.size() < o.count) {
    if (++attempts > 1000 * (o.count + 10)) {
      throw DataError("cannot draw " + std::to_string(o.count) + " distinct sequences of the requested lengths");
    }
    const std::size_t len = o.min_len + rng.Below(o.max_len - o.min_len + 1);
    std::vector<std::string> units;
    for (std::size_t i = 0; i < len; ++i) units.push_back(Kana()[rng.Below(Kana().size())]);
    std::string src;
    for (const auto& u : units) src += u;
    if (!seen.insert(src).second) continue;
    if (reverse) std::reverse(units.begin(), units.end());
    std::string tgt;
    for (const auto& u : units) tgt += u;
    out.src.push_back(src);
    out.tgt.push_back(tgt);
  }
  return out;
}

}  // namespace

SynthTask ParseSynthTask(const std::string& name) {
  if (name == "copy") return SynthTask::kCopy;
  if (name == "reverse") return SynthTask::kReverse;
  if (name == "lexicon") return SynthTask::kLexicon;
  throw ParameterError("unknown synthetic task '" + name + "' (expected copy, reverse or lexicon)");
}

ParallelText Synthesize(const SynthOptions& o) {
  if (o.min_len == 0 || o.min_len > o.max_len) throw ParameterError("synthetic length bounds need 0 < min <= max");
  switch (o.task) {
    case SynthTask::kCopy:
      return CopyTask(o, false);
    case SynthTask::kReverse:
      return CopyTask(o, true);
    case SynthTask::kLexicon:
      return LexiconTask(o);
  }
  throw ParameterError("unknown synthetic task");
}

}  // namespace charnmt::cli
