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

#ifndef CHARNMT_CLI_PIPELINE_H_
#define CHARNMT_CLI_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "charnmt/common/config_entries.h"
#include "charnmt/decode/decode.h"
#include "charnmt/tokenize/segment.h"
#include "charnmt/tokenize/vocab.h"
#include "charnmt/training/config.h"

namespace charnmt::cli {

// Bad command line or recipe name; exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Version string baked in at configure time (git describe when available).
std::string ToolkitVersion();

enum class Direction { kJaVi, kViJa };
Direction ParseDirection(const std::string& name);
std::string DirectionName(Direction d);

struct Recipe {
  std::string name;
  tokenize::SegmentationMode src_mode;
  tokenize::SegmentationMode tgt_mode;
  training::Architecture architecture;
};

const std::vector<std::string>& RecipeNames();
// Word recipes use whitespace words on both sides. Char recipes split
// Japanese into code points and Vietnamese into syllables. Unknown names
// throw UsageError listing the valid ones.
Recipe LookupRecipe(const std::string& name, Direction direction);

// Config file keys: "recipe", "direction", "data.{train,valid,test}.{src,tgt}",
// "output_dir", "filter.max_tokens", "filter.train", "filter.eval",
// "vocab.max_size", "vocab.min_freq", "decode.beam_size" (1 = greedy),
// "decode.max_len_factor", "decode.alpha", "eval.units"; all other keys go to
// ExperimentConfig. The recipe fixes the architecture. Empty and duplicate
// pairs are always dropped; filter.train / filter.eval apply the length limit
// to the training and the validation+test splits.
struct RecipeConfig {
  std::string recipe;
  Direction direction = Direction::kJaVi;
  std::string train_src, train_tgt, valid_src, valid_tgt, test_src, test_tgt;
  std::string output_dir = "run";
  std::size_t max_tokens = 100;
  bool filter_train = false;
  bool filter_eval = true;
  std::size_t vocab_max_size = 0;  // 0: unlimited
  std::size_t vocab_min_freq = 1;
  decode::BeamConfig beam;  // beam_size 1 decodes greedily
  // Units for BLEU and RIBES; empty picks char-ja for a Japanese target and
  // word otherwise.
  std::string eval_units;
  training::ExperimentConfig experiment;

  Recipe recipe_info() const { return LookupRecipe(recipe, direction); }
  tokenize::SegmentationMode EvalMode() const;
  Entries ToEntries() const;
  static RecipeConfig FromEntries(const Entries& entries);
  static RecipeConfig Load(std::istream& in, const std::string& origin);
};

// Segments, encodes (unknown units -> UNK) and decodes each line. With
// `jsonl`, one {"line","hypothesis","logprob","score","finished"} object per
// line is written.
std::vector<std::string> Translate(const decode::Model& model, const tokenize::Vocabulary& src_vocab,
                                   const tokenize::Vocabulary& tgt_vocab, const std::vector<std::string>& lines,
                                   tokenize::SegmentationMode src_mode, tokenize::SegmentationMode tgt_mode,
                                   const decode::BeamConfig& beam, std::ostream* jsonl = nullptr);

struct RunSummary {
  double bleu = 0.0;
  double ribes = 0.0;
  std::string output_dir;
  std::size_t best_epoch = 0;
};

// tokenize -> vocab -> train -> decode -> evaluate under output_dir:
// src.vocab, tgt.vocab, filter.txt, train.csv, checkpoints/, test.hyp,
// scores.txt ("BLEU\t..", "RIBES\t..") and manifest.json. A failing stage
// rethrows with the stage named, keeping the error type, after writing
// stages.txt and whatever logs exist.
RunSummary RunRecipe(const RecipeConfig& config, std::ostream* progress = nullptr);

// "BLEU\t12.3456\nRIBES\t0.6789\n"
std::string FormatScores(double bleu, double ribes);

struct ReportRow {
  std::string system;
  double bleu = 0.0;
  double ribes = 0.0;
};

ReportRow ReadManifest(const std::string& path);

struct Report {
  std::string text;
  std::string csv;
};

// Rows in input order. Deltas are against the column maximum; rows holding
// the maximum show "-".
Report MakeReport(const std::vector<ReportRow>& rows);

}  // namespace charnmt::cli

#endif  // CHARNMT_CLI_PIPELINE_H_
