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

// charnmt: command-line front end for the toolkit.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "charnmt/cli/corpus.h"
#include "charnmt/cli/pipeline.h"
#include "charnmt/cli/synth.h"
#include "charnmt/common/config_entries.h"
#include "charnmt/common/error.h"
#include "charnmt/evalmetrics/metrics.h"
#include "charnmt/tokenize/bpe.h"
#include "charnmt/tokenize/unicode.h"
#include "charnmt/tokenize/vocab.h"
#include "charnmt/training/checkpoint.h"
#include "charnmt/training/trainer.h"

extern "C" void openblas_set_num_threads(int num_threads);

namespace {

using namespace charnmt;
using tokenize::SegmentationMode;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

// Whitespace units are printed as U+2581 so every unit stays one field.
constexpr const char* kSpaceMark = "\xE2\x96\x81";

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  int threads = 1;
};

Entries ConfigEntries(const Globals& g) {
  Entries e;
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) throw DataError("cannot read config '" + g.config + "'");
    e = ParseEntries(in, g.config);
  }
  if (g.seed) e["seed"] = std::to_string(*g.seed);
  return e;
}

tokenize::BpeModel LoadBpe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read BPE model '" + path + "'");
  return tokenize::BpeModel::Load(in);
}

tokenize::Vocabulary LoadVocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary '" + path + "'");
  return tokenize::Vocabulary::Load(in);
}

std::string FormatUnits(const tokenize::TokenSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.units.size(); ++i) {
    if (i) out += ' ';
    const std::string& u = seq.units[i];
    out += tokenize::IsWhitespace(u) ? kSpaceMark : u;
  }
  return out;
}

std::vector<tokenize::TokenSequence> SegmentFile(const std::string& path, SegmentationMode mode,
                                                 const std::string& bpe_path) {
  std::optional<tokenize::BpeModel> bpe;
  if (mode == SegmentationMode::kBpe) {
    if (bpe_path.empty()) throw cli::UsageError("--mode bpe needs --bpe MODEL");
    bpe = LoadBpe(bpe_path);
  }
  std::vector<tokenize::TokenSequence> out;
  for (const auto& line : cli::ReadLines(path)) out.push_back(cli::SegmentLine(line, mode, bpe ? &*bpe : nullptr));
  return out;
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

const std::map<std::string, SegmentationMode> kModeMap = {{"char-ja", SegmentationMode::kCharJa},
                                                         {"morpheme-vi", SegmentationMode::kMorphemeVi},
                                                         {"word", SegmentationMode::kWord},
                                                         {"bpe", SegmentationMode::kBpe}};

struct TokenizeArgs {
  std::string input, output, bpe;
  SegmentationMode mode = SegmentationMode::kWord;
};

void Tokenize(const TokenizeArgs& a) {
  std::string text;
  for (const auto& seq : SegmentFile(a.input, a.mode, a.bpe)) text += FormatUnits(seq) + '\n';
  WriteText(a.output, text);
}

struct LearnBpeArgs {
  std::string input, output;
  std::size_t merges = tokenize::kDefaultBpeMerges;
};

void LearnBpe(const LearnBpeArgs& a) {
  const auto model = tokenize::LearnBpe(SegmentFile(a.input, SegmentationMode::kWord, ""), a.merges);
  std::ofstream out(a.output, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + a.output + "'");
  model.Save(out);
  std::cerr << "learned " << model.merges().size() << " merges\n";
}

struct BuildVocabArgs {
  std::string input, output, bpe;
  SegmentationMode mode = SegmentationMode::kWord;
  std::size_t max_size = 0;
  std::size_t min_freq = 1;
};

void BuildVocab(const BuildVocabArgs& a) {
  const auto vocab = tokenize::BuildVocab(SegmentFile(a.input, a.mode, a.bpe),
                                          a.max_size ? std::optional<std::size_t>(a.max_size) : std::nullopt,
                                          a.min_freq);
  std::ofstream out(a.output, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + a.output + "'");
  vocab.Save(out);
  std::cerr << "vocabulary size " << vocab.size() << '\n';
}

struct FilterArgs {
  std::string src, tgt, out_src, out_tgt, stats;
  SegmentationMode src_mode = SegmentationMode::kWord, tgt_mode = SegmentationMode::kWord;
  std::size_t max_tokens = 100;
};

void Filter(const FilterArgs& a) {
  const auto r = cli::FilterCorpus(cli::ReadLines(a.src), cli::ReadLines(a.tgt), a.max_tokens, a.src_mode, a.tgt_mode);
  cli::WriteLines(a.out_src, r.src);
  cli::WriteLines(a.out_tgt, r.tgt);
  if (a.stats.empty()) {
    std::cerr << cli::FormatStats(r.stats);
  } else {
    WriteText(a.stats, cli::FormatStats(r.stats));
  }
}

struct TrainArgs {
  std::string train_src, train_tgt, valid_src, valid_tgt, src_vocab, tgt_vocab, src_bpe, tgt_bpe, out_dir, arch;
  SegmentationMode src_mode = SegmentationMode::kWord, tgt_mode = SegmentationMode::kWord;
};

void Train(const TrainArgs& a, const Globals& g) {
  Entries e = ConfigEntries(g);
  if (!a.arch.empty()) e["architecture"] = a.arch;
  const auto config = training::ExperimentConfig::FromEntries(e);
  const auto sv = LoadVocab(a.src_vocab), tv = LoadVocab(a.tgt_vocab);
  auto pairs = [&](const std::string& s, const std::string& t) {
    const auto ss = SegmentFile(s, a.src_mode, a.src_bpe), ts = SegmentFile(t, a.tgt_mode, a.tgt_bpe);
    if (ss.size() != ts.size()) {
      throw DataError(s + " has " + std::to_string(ss.size()) + " lines but " + t + " has " +
                      std::to_string(ts.size()));
    }
    std::vector<SentencePair> out;
    for (std::size_t i = 0; i < ss.size(); ++i) {
      out.push_back({tokenize::Encode(sv, ss[i], false), tokenize::Encode(tv, ts[i], false)});
    }
    return out;
  };
  const auto train = pairs(a.train_src, a.train_tgt);
  const auto valid = pairs(a.valid_src, a.valid_tgt);
  std::filesystem::create_directories(a.out_dir);
  std::ofstream log(a.out_dir + "/train.csv", std::ios::trunc);
  auto model = training::CreateModel(config, sv.size(), tv.size());
  training::TrainOptions options;
  options.log = &log;
  options.checkpoint_dir = a.out_dir;
  options.on_epoch = [](const training::EpochRecord& r) {
    std::fprintf(stderr, "epoch %zu loss %.4f val_ppl %.4f val_acc %.4f\n", r.epoch, r.mean_loss,
                 r.validation.perplexity, r.validation.accuracy);
    return true;
  };
  training::Trainer trainer(*model, config.train);
  const auto result = trainer.Fit(train, valid, options);
  std::cerr << "best epoch " << result.best_epoch << " (" << a.out_dir << "/best.ckpt)\n";
}

struct TranslateArgs {
  std::string checkpoint, src_vocab, tgt_vocab, input, output, scores;
  SegmentationMode src_mode = SegmentationMode::kWord, tgt_mode = SegmentationMode::kWord;
  decode::BeamConfig beam;
};

void Translate(const TranslateArgs& a) {
  if (a.src_mode == SegmentationMode::kBpe || a.tgt_mode == SegmentationMode::kBpe) {
    throw cli::UsageError("translate works on char-ja, morpheme-vi or word units");
  }
  const auto loaded = training::LoadCheckpoint(a.checkpoint);
  const auto sv = LoadVocab(a.src_vocab), tv = LoadVocab(a.tgt_vocab);
  std::optional<std::ofstream> jsonl;
  if (!a.scores.empty()) jsonl.emplace(a.scores, std::ios::trunc);
  const auto hyps = cli::Translate(*loaded.model, sv, tv, cli::ReadLines(a.input), a.src_mode, a.tgt_mode, a.beam,
                                   jsonl ? &*jsonl : nullptr);
  std::string text;
  for (const auto& h : hyps) text += h + '\n';
  WriteText(a.output, text);
}

struct EvaluateArgs {
  std::string hyp, ref, output;
  SegmentationMode units = SegmentationMode::kWord;
};

void Evaluate(const EvaluateArgs& a) {
  std::vector<evalmetrics::Tokens> h, r;
  for (const auto& l : cli::ReadLines(a.hyp)) h.push_back(evalmetrics::EvalUnits(l, a.units));
  for (const auto& l : cli::ReadLines(a.ref)) r.push_back(evalmetrics::EvalUnits(l, a.units));
  WriteText(a.output, cli::FormatScores(evalmetrics::CorpusBleu(h, r).bleu, evalmetrics::CorpusRibes(h, r).ribes));
}

struct ReportArgs {
  std::vector<std::string> manifests;
  std::string csv;
};

void Report(const ReportArgs& a) {
  std::vector<cli::ReportRow> rows;
  for (const auto& m : a.manifests) rows.push_back(cli::ReadManifest(m));
  const auto rep = cli::MakeReport(rows);
  std::cout << rep.text;
  if (!a.csv.empty()) WriteText(a.csv, rep.csv);
}

struct RecipeArgs {
  std::string recipe, direction, out_dir;
};

void RunRecipe(const RecipeArgs& a, const Globals& g) {
  Entries e = ConfigEntries(g);
  if (!a.recipe.empty()) e["recipe"] = a.recipe;
  if (!a.direction.empty()) e["direction"] = a.direction;
  if (!a.out_dir.empty()) e["output_dir"] = a.out_dir;
  const auto summary = cli::RunRecipe(cli::RecipeConfig::FromEntries(e), &std::cerr);
  std::cout << cli::FormatScores(summary.bleu, summary.ribes);
}

struct SynthArgs {
  std::string task = "copy", out_src, out_tgt;
  std::size_t count = 1000;
  std::optional<std::size_t> min_len, max_len;
};

void Synth(const SynthArgs& a, const Globals& g) {
  cli::SynthOptions o;
  o.task = cli::ParseSynthTask(a.task);
  o.count = a.count;
  if (o.task == cli::SynthTask::kLexicon) {
    o.min_len = 60;
    o.max_len = 120;
  }
  if (a.min_len) o.min_len = *a.min_len;
  if (a.max_len) o.max_len = *a.max_len;
  if (g.seed) o.seed = *g.seed;
  const auto text = cli::Synthesize(o);
  cli::WriteLines(a.out_src, text.src);
  cli::WriteLines(a.out_tgt, text.tgt);
}

CLI::Option* AddMode(CLI::App* c, const std::string& name, SegmentationMode& mode, const std::string& help) {
  return c->add_option(name, mode, help)->transform(CLI::CheckedTransformer(kModeMap, CLI::ignore_case).description(""))->type_name("MODE");
}

int Run(int argc, char** argv) {
  CLI::App app{"Character-level neural machine translation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::ToolkitVersion());
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (overrides the config)");
  app.add_option("--config", g.config, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--threads", g.threads, "BLAS threads")->check(CLI::PositiveNumber);
  const std::string modes = "char-ja, morpheme-vi, word or bpe";

  TokenizeArgs tok;
  auto* tok_cmd = app.add_subcommand("tokenize", "Segment lines into space-separated units");
  tok_cmd->add_option("-i,--input", tok.input)->required()->check(CLI::ExistingFile);
  tok_cmd->add_option("-o,--output", tok.output, "Output file (default stdout)");
  AddMode(tok_cmd, "-m,--mode", tok.mode, modes)->required();
  tok_cmd->add_option("--bpe", tok.bpe, "BPE model for --mode bpe");

  LearnBpeArgs lb;
  auto* lb_cmd = app.add_subcommand("learn-bpe", "Learn BPE merges from whitespace-tokenized text");
  lb_cmd->add_option("-i,--input", lb.input)->required()->check(CLI::ExistingFile);
  lb_cmd->add_option("-o,--output", lb.output)->required();
  lb_cmd->add_option("-n,--merges", lb.merges, "Number of merge operations");

  TokenizeArgs ab;
  ab.mode = SegmentationMode::kBpe;
  auto* ab_cmd = app.add_subcommand("apply-bpe", "Split words into BPE subwords");
  ab_cmd->add_option("-i,--input", ab.input)->required()->check(CLI::ExistingFile);
  ab_cmd->add_option("-o,--output", ab.output, "Output file (default stdout)");
  ab_cmd->add_option("--bpe", ab.bpe, "BPE model")->required()->check(CLI::ExistingFile);

  BuildVocabArgs bv;
  auto* bv_cmd = app.add_subcommand("build-vocab", "Build a frequency-ranked vocabulary");
  bv_cmd->add_option("-i,--input", bv.input)->required()->check(CLI::ExistingFile);
  bv_cmd->add_option("-o,--output", bv.output)->required();
  AddMode(bv_cmd, "-m,--mode", bv.mode, modes)->required();
  bv_cmd->add_option("--bpe", bv.bpe, "BPE model for --mode bpe");
  bv_cmd->add_option("--max-size", bv.max_size, "Maximum size including specials (0: unlimited)");
  bv_cmd->add_option("--min-freq", bv.min_freq, "Minimum token count");

  FilterArgs fl;
  auto* fl_cmd = app.add_subcommand("filter", "Drop empty, duplicate and over-length pairs");
  fl_cmd->add_option("--src", fl.src)->required()->check(CLI::ExistingFile);
  fl_cmd->add_option("--tgt", fl.tgt)->required()->check(CLI::ExistingFile);
  fl_cmd->add_option("--out-src", fl.out_src)->required();
  fl_cmd->add_option("--out-tgt", fl.out_tgt)->required();
  AddMode(fl_cmd, "--src-mode", fl.src_mode, "Unit mode for counting source tokens");
  AddMode(fl_cmd, "--tgt-mode", fl.tgt_mode, "Unit mode for counting target tokens");
  fl_cmd->add_option("--max-tokens", fl.max_tokens)->check(CLI::PositiveNumber);
  fl_cmd->add_option("--stats", fl.stats, "Statistics file (default stderr)");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train a model; --config supplies training keys");
  tr_cmd->add_option("--train-src", tr.train_src)->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--train-tgt", tr.train_tgt)->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--valid-src", tr.valid_src)->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--valid-tgt", tr.valid_tgt)->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--src-vocab", tr.src_vocab)->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--tgt-vocab", tr.tgt_vocab)->required()->check(CLI::ExistingFile);
  AddMode(tr_cmd, "--src-mode", tr.src_mode, modes);
  AddMode(tr_cmd, "--tgt-mode", tr.tgt_mode, modes);
  tr_cmd->add_option("--src-bpe", tr.src_bpe);
  tr_cmd->add_option("--tgt-bpe", tr.tgt_bpe);
  tr_cmd->add_option("--architecture", tr.arch, "transformer or recurrent (overrides the config)");
  tr_cmd->add_option("-o,--output-dir", tr.out_dir, "Checkpoints and train.csv")->required();

  TranslateArgs tl;
  auto* tl_cmd = app.add_subcommand("translate", "Decode a source file with a checkpoint");
  tl_cmd->add_option("--checkpoint", tl.checkpoint)->required()->check(CLI::ExistingFile);
  tl_cmd->add_option("--src-vocab", tl.src_vocab)->required()->check(CLI::ExistingFile);
  tl_cmd->add_option("--tgt-vocab", tl.tgt_vocab)->required()->check(CLI::ExistingFile);
  AddMode(tl_cmd, "--src-mode", tl.src_mode, "char-ja, morpheme-vi or word");
  AddMode(tl_cmd, "--tgt-mode", tl.tgt_mode, "char-ja, morpheme-vi or word");
  tl_cmd->add_option("-i,--input", tl.input)->required()->check(CLI::ExistingFile);
  tl_cmd->add_option("-o,--output", tl.output, "Output file (default stdout)");
  tl_cmd->add_option("--beam", tl.beam.beam_size, "Beam size (1: greedy)");
  tl_cmd->add_option("--alpha", tl.beam.length_norm_alpha, "Length normalization exponent");
  tl_cmd->add_option("--max-len-factor", tl.beam.max_len_factor, "Output length cap relative to the source");
  tl_cmd->add_option("--scores-jsonl", tl.scores, "Per-line logprob and score as JSON lines");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Corpus BLEU and RIBES of hypotheses against references");
  ev_cmd->add_option("--hyp", ev.hyp)->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--ref", ev.ref)->required()->check(CLI::ExistingFile);
  AddMode(ev_cmd, "--units", ev.units, "char-ja or word");
  ev_cmd->add_option("-o,--output", ev.output, "Score file (default stdout)");

  ReportArgs rp;
  auto* rp_cmd = app.add_subcommand("report", "Compare run manifests");
  rp_cmd->add_option("manifests", rp.manifests, "manifest.json files")->required()->check(CLI::ExistingFile);
  rp_cmd->add_option("--csv", rp.csv, "Also write the table as CSV");

  RecipeArgs rr;
  std::string names;
  for (const auto& n : cli::RecipeNames()) names += (names.empty() ? "" : ", ") + n;
  auto* rr_cmd = app.add_subcommand("run-recipe", "Tokenize, build vocabularies, train, decode and evaluate");
  rr_cmd->add_option("recipe", rr.recipe, "One of: " + names);
  rr_cmd->add_option("--direction", rr.direction, "ja-vi or vi-ja");
  rr_cmd->add_option("-o,--output-dir", rr.out_dir, "Run directory");

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a seeded synthetic parallel corpus");
  sy_cmd->add_option("--task", sy.task, "copy, reverse or lexicon");
  sy_cmd->add_option("-n,--count", sy.count, "Number of pairs");
  sy_cmd->add_option("--min-len", sy.min_len, "Minimum length in code points");
  sy_cmd->add_option("--max-len", sy.max_len, "Maximum length in code points");
  sy_cmd->add_option("--out-src", sy.out_src)->required();
  sy_cmd->add_option("--out-tgt", sy.out_tgt)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  openblas_set_num_threads(g.threads);

  if (tok_cmd->parsed()) Tokenize(tok);
  if (lb_cmd->parsed()) LearnBpe(lb);
  if (ab_cmd->parsed()) Tokenize(ab);
  if (bv_cmd->parsed()) BuildVocab(bv);
  if (fl_cmd->parsed()) Filter(fl);
  if (tr_cmd->parsed()) Train(tr, g);
  if (tl_cmd->parsed()) Translate(tl);
  if (ev_cmd->parsed()) Evaluate(ev);
  if (rp_cmd->parsed()) Report(rp);
  if (rr_cmd->parsed()) RunRecipe(rr, g);
  if (sy_cmd->parsed()) Synth(sy, g);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TrainingError& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return kExitTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
