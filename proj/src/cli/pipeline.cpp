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

#include "charnmt/cli/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "charnmt/cli/corpus.h"
#include "charnmt/common/error.h"
#include "charnmt/evalmetrics/metrics.h"
#include "charnmt/numcore/rng.h"
#include "charnmt/training/checkpoint.h"
#include "charnmt/training/trainer.h"
#include "json.hpp"

#ifndef CHARNMT_VERSION
#define CHARNMT_VERSION "0.1.0"
#endif

namespace charnmt::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using tokenize::SegmentationMode;

const std::set<std::string> kRecipeKeys = {
    "recipe",         "direction",        "data.train.src",    "data.train.tgt",  "data.valid.src",
    "data.valid.tgt", "data.test.src",    "data.test.tgt",     "output_dir",      "filter.max_tokens",
    "filter.train",   "filter.eval",      "vocab.max_size",    "vocab.min_freq",  "decode.beam_size",
    "decode.max_len_factor", "decode.alpha", "eval.units"};

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Records stage outcomes in stages.txt as they happen.
class StageLog {
 public:
  explicit StageLog(std::string path) : path_(std::move(path)) {}

  void Run(const std::string& stage, const std::function<void()>& body, std::ostream* progress) {
    if (progress) *progress << "[" << stage << "]\n" << std::flush;
    try {
      body();
    } catch (const UsageError& e) {
      Fail(stage, e.what());
      throw UsageError(Prefix(stage, e));
    } catch (const ParameterError& e) {
      Fail(stage, e.what());
      throw ParameterError(Prefix(stage, e));
    } catch (const TrainingError& e) {
      Fail(stage, e.what());
      throw TrainingError(Prefix(stage, e));
    } catch (const CapacityError& e) {
      Fail(stage, e.what());
      throw CapacityError(Prefix(stage, e));
    } catch (const DataError& e) {
      Fail(stage, e.what());
      throw DataError(Prefix(stage, e));
    } catch (const std::exception& e) {
      Fail(stage, e.what());
      throw std::runtime_error(Prefix(stage, e));
    }
    lines_.push_back(stage + "\tok");
    Flush();
  }

 private:
  static std::string Prefix(const std::string& stage, const std::exception& e) {
    return "stage '" + stage + "' failed: " + e.what();
  }
  void Fail(const std::string& stage, const std::string& what) {
    lines_.push_back(stage + "\tfailed\t" + what);
    Flush();
  }
  void Flush() {
    std::ofstream out(path_, std::ios::trunc);
    for (const auto& l : lines_) out << l << '\n';
  }

  std::string path_;
  std::vector<std::string> lines_;
};

ordered_json StatsJson(const CorpusStats& s) {
  return {{"input", s.input},
          {"retained", s.retained},
          {"duplicates", s.duplicates},
          {"over_length", s.over_length},
          {"empty", s.empty}};
}

std::vector<tokenize::TokenSequence> SegmentAll(const std::vector<std::string>& lines, SegmentationMode mode) {
  std::vector<tokenize::TokenSequence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(SegmentLine(l, mode));
  return out;
}

std::vector<SentencePair> EncodePairs(const std::vector<tokenize::TokenSequence>& src,
                                      const std::vector<tokenize::TokenSequence>& tgt,
                                      const tokenize::Vocabulary& sv, const tokenize::Vocabulary& tv) {
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    out.push_back({tokenize::Encode(sv, src[i], false), tokenize::Encode(tv, tgt[i], false)});
  }
  return out;
}

}  // namespace

std::string ToolkitVersion() { return CHARNMT_VERSION; }

Direction ParseDirection(const std::string& name) {
  if (name == "ja-vi") return Direction::kJaVi;
  if (name == "vi-ja") return Direction::kViJa;
  throw UsageError("unknown direction '" + name + "' (expected ja-vi or vi-ja)");
}

std::string DirectionName(Direction d) { return d == Direction::kJaVi ? "ja-vi" : "vi-ja"; }

const std::vector<std::string>& RecipeNames() {
  static const std::vector<std::string> names = {"word2word-recurrent", "word2word-transformer",
                                                 "char2char-recurrent", "char2char-transformer"};
  return names;
}

Recipe LookupRecipe(const std::string& name, Direction direction) {
  const auto& names = RecipeNames();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown recipe '" + name + "'; valid recipes: " + list);
  }
  Recipe r;
  r.name = name;
  r.architecture = name.ends_with("transformer") ? training::Architecture::kTransformer
                                                 : training::Architecture::kRecurrent;
  if (name.starts_with("word2word")) {
    r.src_mode = r.tgt_mode = SegmentationMode::kWord;
  } else {
    const bool ja_first = direction == Direction::kJaVi;
    r.src_mode = ja_first ? SegmentationMode::kCharJa : SegmentationMode::kMorphemeVi;
    r.tgt_mode = ja_first ? SegmentationMode::kMorphemeVi : SegmentationMode::kCharJa;
  }
  return r;
}

SegmentationMode RecipeConfig::EvalMode() const {
  if (!eval_units.empty()) return tokenize::ParseMode(eval_units);
  return direction == Direction::kViJa ? SegmentationMode::kCharJa : SegmentationMode::kWord;
}

Entries RecipeConfig::ToEntries() const {
  Entries e = experiment.ToEntries();
  e["recipe"] = recipe;
  e["direction"] = DirectionName(direction);
  e["data.train.src"] = train_src;
  e["data.train.tgt"] = train_tgt;
  e["data.valid.src"] = valid_src;
  e["data.valid.tgt"] = valid_tgt;
  e["data.test.src"] = test_src;
  e["data.test.tgt"] = test_tgt;
  e["output_dir"] = output_dir;
  e["filter.max_tokens"] = std::to_string(max_tokens);
  e["filter.train"] = filter_train ? "true" : "false";
  e["filter.eval"] = filter_eval ? "true" : "false";
  e["vocab.max_size"] = std::to_string(vocab_max_size);
  e["vocab.min_freq"] = std::to_string(vocab_min_freq);
  e["decode.beam_size"] = std::to_string(beam.beam_size);
  e["decode.max_len_factor"] = FormatReal(beam.max_len_factor);
  e["decode.alpha"] = FormatReal(beam.length_norm_alpha);
  e["eval.units"] = eval_units;
  return e;
}

RecipeConfig RecipeConfig::FromEntries(const Entries& entries) {
  RecipeConfig c;
  Entries rest;
  for (const auto& [k, v] : entries) {
    if (!kRecipeKeys.contains(k)) rest[k] = v;
  }
  c.recipe = ReadString(entries, "recipe", "");
  if (c.recipe.empty()) throw UsageError("config has no 'recipe' key");
  c.direction = ParseDirection(ReadString(entries, "direction", "ja-vi"));
  const Recipe r = c.recipe_info();
  const std::string arch = training::ArchitectureName(r.architecture);
  if (auto it = rest.find("architecture"); it != rest.end() && it->second != arch) {
    throw DataError("recipe '" + c.recipe + "' trains a " + arch + " but the config sets architecture=" + it->second);
  }
  rest["architecture"] = arch;
  c.experiment = training::ExperimentConfig::FromEntries(rest);
  c.train_src = ReadString(entries, "data.train.src", "");
  c.train_tgt = ReadString(entries, "data.train.tgt", "");
  c.valid_src = ReadString(entries, "data.valid.src", "");
  c.valid_tgt = ReadString(entries, "data.valid.tgt", "");
  c.test_src = ReadString(entries, "data.test.src", "");
  c.test_tgt = ReadString(entries, "data.test.tgt", "");
  c.output_dir = ReadString(entries, "output_dir", c.output_dir);
  c.max_tokens = ReadSize(entries, "filter.max_tokens", c.max_tokens);
  c.filter_train = ReadBool(entries, "filter.train", c.filter_train);
  c.filter_eval = ReadBool(entries, "filter.eval", c.filter_eval);
  c.vocab_max_size = ReadSize(entries, "vocab.max_size", c.vocab_max_size);
  c.vocab_min_freq = ReadSize(entries, "vocab.min_freq", c.vocab_min_freq);
  c.beam.beam_size = ReadSize(entries, "decode.beam_size", c.beam.beam_size);
  c.beam.max_len_factor = ReadReal(entries, "decode.max_len_factor", c.beam.max_len_factor);
  c.beam.length_norm_alpha = ReadReal(entries, "decode.alpha", c.beam.length_norm_alpha);
  c.eval_units = ReadString(entries, "eval.units", "");
  c.beam.Validate();
  if (c.max_tokens == 0) throw ParameterError("filter.max_tokens must be positive");
  if (!c.eval_units.empty()) c.EvalMode();
  return c;
}

RecipeConfig RecipeConfig::Load(std::istream& in, const std::string& origin) {
  return FromEntries(ParseEntries(in, origin));
}

std::vector<std::string> Translate(const decode::Model& model, const tokenize::Vocabulary& src_vocab,
                                   const tokenize::Vocabulary& tgt_vocab, const std::vector<std::string>& lines,
                                   SegmentationMode src_mode, SegmentationMode tgt_mode,
                                   const decode::BeamConfig& beam, std::ostream* jsonl) {
  beam.Validate();
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const IdSequence src = tokenize::Encode(src_vocab, SegmentLine(lines[i], src_mode), false);
    decode::Hypothesis best;
    if (!src.empty()) {
      const std::size_t max_len = decode::MaxDecodeLength(src.size(), beam.max_len_factor);
      if (beam.beam_size == 1) {
        best = decode::GreedyDecode(model, src, max_len, beam.length_norm_alpha).hypothesis;
      } else {
        best = decode::BeamSearch(model, src, beam).front();
      }
    }
    out.push_back(tokenize::Decode(tgt_vocab, best.ids, tgt_mode));
    if (jsonl) {
      ordered_json j = {{"line", i + 1},
                        {"hypothesis", out.back()},
                        {"logprob", best.logprob},
                        {"score", best.score},
                        {"finished", best.finished}};
      *jsonl << j.dump() << '\n';
    }
  }
  return out;
}

std::string FormatScores(double bleu, double ribes) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "BLEU\t%.4f\nRIBES\t%.4f\n", bleu, ribes);
  return buf;
}

RunSummary RunRecipe(const RecipeConfig& config, std::ostream* progress) {
  const Recipe recipe = config.recipe_info();
  const fs::path dir(config.output_dir);
  fs::create_directories(dir / "checkpoints");
  StageLog stages((dir / "stages.txt").string());

  struct Split {
    std::string name, src_path, tgt_path;
    bool length_filter;
    FilterResult data;
    std::vector<tokenize::TokenSequence> src_units, tgt_units;
  };
  std::vector<Split> splits = {{"train", config.train_src, config.train_tgt, config.filter_train, {}, {}, {}},
                               {"valid", config.valid_src, config.valid_tgt, config.filter_eval, {}, {}, {}},
                               {"test", config.test_src, config.test_tgt, config.filter_eval, {}, {}, {}}};
  ordered_json inputs = ordered_json::object();

  stages.Run("tokenize", [&] {
    std::ofstream stats_out(dir / "filter.txt", std::ios::trunc);
    for (auto& s : splits) {
      if (s.src_path.empty() || s.tgt_path.empty()) throw DataError("no " + s.name + " files configured");
      const auto src = ReadLines(s.src_path);
      const auto tgt = ReadLines(s.tgt_path);
      const std::size_t limit = s.length_filter ? config.max_tokens : std::numeric_limits<std::size_t>::max();
      try {
        s.data = FilterCorpus(src, tgt, limit, recipe.src_mode, recipe.tgt_mode);
      } catch (const DataError& e) {
        throw DataError(s.name + " corpus: " + e.what());
      }
      if (s.data.src.empty()) throw DataError(s.name + " corpus is empty after filtering");
      s.src_units = SegmentAll(s.data.src, recipe.src_mode);
      s.tgt_units = SegmentAll(s.data.tgt, recipe.tgt_mode);
      stats_out << "# " << s.name << '\n' << FormatStats(s.data.stats);
      inputs[s.name + ".src"] = {{"path", s.src_path}, {"digest", FileDigest(s.src_path)}};
      inputs[s.name + ".tgt"] = {{"path", s.tgt_path}, {"digest", FileDigest(s.tgt_path)}};
    }
  }, progress);

  tokenize::Vocabulary src_vocab, tgt_vocab;
  stages.Run("vocab", [&] {
    const auto max_size = config.vocab_max_size ? std::optional<std::size_t>(config.vocab_max_size) : std::nullopt;
    src_vocab = tokenize::BuildVocab(splits[0].src_units, max_size, config.vocab_min_freq);
    tgt_vocab = tokenize::BuildVocab(splits[0].tgt_units, max_size, config.vocab_min_freq);
    std::ofstream sv(dir / "src.vocab", std::ios::trunc), tv(dir / "tgt.vocab", std::ios::trunc);
    src_vocab.Save(sv);
    tgt_vocab.Save(tv);
  }, progress);

  std::unique_ptr<training::Model> model;
  training::TrainResult trained;
  stages.Run("train", [&] {
    const auto train = EncodePairs(splits[0].src_units, splits[0].tgt_units, src_vocab, tgt_vocab);
    const auto valid = EncodePairs(splits[1].src_units, splits[1].tgt_units, src_vocab, tgt_vocab);
    model = training::CreateModel(config.experiment, src_vocab.size(), tgt_vocab.size());
    std::ofstream log(dir / "train.csv", std::ios::trunc);
    training::TrainOptions options;
    options.log = &log;
    options.checkpoint_dir = (dir / "checkpoints").string();
    options.on_epoch = [&](const training::EpochRecord& r) {
      if (progress) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "epoch %zu loss %.4f val_ppl %.4f val_acc %.4f\n", r.epoch, r.mean_loss,
                      r.validation.perplexity, r.validation.accuracy);
        *progress << buf << std::flush;
      }
      return true;
    };
    training::Trainer trainer(*model, config.experiment.train);
    trained = trainer.Fit(train, valid, options);
    if (trained.best_epoch > 0) {
      model = training::LoadCheckpoint((dir / "checkpoints" / "best.ckpt").string()).model;
    }
  }, progress);

  std::vector<std::string> hyps;
  stages.Run("decode", [&] {
    std::ofstream jsonl(dir / "test.scores.jsonl", std::ios::trunc);
    hyps = Translate(*model, src_vocab, tgt_vocab, splits[2].data.src, recipe.src_mode, recipe.tgt_mode, config.beam,
                     &jsonl);
    WriteLines((dir / "test.hyp").string(), hyps);
  }, progress);

  RunSummary summary;
  summary.output_dir = dir.string();
  summary.best_epoch = trained.best_epoch;
  stages.Run("evaluate", [&] {
    const SegmentationMode mode = config.EvalMode();
    std::vector<evalmetrics::Tokens> h, r;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      h.push_back(evalmetrics::EvalUnits(hyps[i], mode));
      r.push_back(evalmetrics::EvalUnits(splits[2].data.tgt[i], mode));
    }
    summary.bleu = evalmetrics::CorpusBleu(h, r).bleu;
    summary.ribes = evalmetrics::CorpusRibes(h, r).ribes;
    std::ofstream scores(dir / "scores.txt", std::ios::binary | std::ios::trunc);
    scores << FormatScores(summary.bleu, summary.ribes);
  }, progress);

  stages.Run("manifest", [&] {
    const Entries entries = config.ToEntries();
    std::string canonical;
    // The output location does not affect results, so it stays out of the hash.
    for (const auto& [k, v] : entries) {
      if (k != "output_dir") canonical += k + "=" + v + "\n";
    }
    ordered_json filter = {{"max_tokens", config.max_tokens},
                           {"train_length_filter", config.filter_train},
                           {"eval_length_filter", config.filter_eval},
                           {"src_count_mode", tokenize::ModeName(recipe.src_mode)},
                           {"tgt_count_mode", tokenize::ModeName(recipe.tgt_mode)}};
    for (const auto& s : splits) filter[s.name] = StatsJson(s.data.stats);
    ordered_json m = {
        {"toolkit_version", ToolkitVersion()},
        {"recipe", recipe.name},
        {"direction", DirectionName(config.direction)},
        {"seed", config.experiment.train.seed},
        {"config_hash", Hex(numcore::Fnv1a64(canonical))},
        {"config", entries},
        {"inputs", inputs},
        {"filter", filter},
        {"eval_units", tokenize::ModeName(config.EvalMode())},
        {"best_epoch", trained.best_epoch},
        {"steps", trained.steps},
        {"scores", {{"BLEU", summary.bleu}, {"RIBES", summary.ribes}}},
        {"outputs",
         {{"test.hyp", FileDigest((dir / "test.hyp").string())}, {"scores.txt", FileDigest((dir / "scores.txt").string())}}}};
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << m.dump(2) << '\n';
  }, progress);
  return summary;
}

ReportRow ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest '" + path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    ReportRow row;
    row.system = j.at("recipe").get<std::string>() + " (" + j.at("direction").get<std::string>() + ")";
    row.bleu = j.at("scores").at("BLEU").get<double>();
    row.ribes = j.at("scores").at("RIBES").get<double>();
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest '" + path + "': " + e.what());
  }
}

Report MakeReport(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw UsageError("report needs at least one manifest");
  double best_bleu = rows[0].bleu, best_ribes = rows[0].ribes;
  for (const auto& r : rows) {
    best_bleu = std::max(best_bleu, r.bleu);
    best_ribes = std::max(best_ribes, r.ribes);
  }
  auto fmt = [](const char* f, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf);
  };
  struct Cells {
    std::string system, bleu, dbleu, ribes, dribes;
  };
  std::vector<Cells> cells = {{"System", "BLEU", "dBLEU", "RIBES", "dRIBES"}};
  for (const auto& r : rows) {
    // Deltas come from the rounded cells so both outputs carry the same text.
    const std::string b = fmt("%.2f", r.bleu), rb = fmt("%.3f", r.ribes);
    const std::string bb = fmt("%.2f", best_bleu), br = fmt("%.3f", best_ribes);
    cells.push_back({r.system, b, b == bb ? "-" : fmt("%.2f", std::stod(b) - std::stod(bb)), rb,
                     rb == br ? "-" : fmt("%.3f", std::stod(rb) - std::stod(br))});
  }
  std::size_t w[5] = {0, 0, 0, 0, 0};
  for (const auto& c : cells) {
    const std::string* v[5] = {&c.system, &c.bleu, &c.dbleu, &c.ribes, &c.dribes};
    for (int i = 0; i < 5; ++i) w[i] = std::max(w[i], v[i]->size());
  }
  Report rep;
  for (const auto& c : cells) {
    const std::string* v[5] = {&c.system, &c.bleu, &c.dbleu, &c.ribes, &c.dribes};
    std::string line;
    for (int i = 0; i < 5; ++i) {
      std::string cell = *v[i];
      const std::string pad(w[i] - cell.size(), ' ');
      cell = i == 0 ? cell + pad : pad + cell;
      line += (i ? "  " : "") + cell;
      rep.csv += (i ? "," : "") + *v[i];
    }
    rep.text += line + '\n';
    rep.csv += '\n';
  }
  return rep;
}

}  // namespace charnmt::cli
