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

#include "charnmt/training/config.h"

#include <set>

#include "charnmt/common/config_entries.h"
#include "charnmt/common/error.h"

namespace charnmt::training {
namespace {

const char* BatchingName(Batching b) { return b == Batching::kByTokens ? "by-tokens" : "by-sentences"; }

const char* ScheduleName(Schedule s) {
  switch (s) {
    case Schedule::kNoam:
      return "noam";
    case Schedule::kHalveOnStall:
      return "halve-on-stall";
    case Schedule::kConstant:
      return "constant";
  }
  return "?";
}

const char* SelectionName(Selection s) { return s == Selection::kPerplexity ? "perplexity" : "accuracy"; }

template <typename E>
E ParseEnum(const std::string& key, const std::string& value, std::initializer_list<std::pair<const char*, E>> opts) {
  std::string names;
  for (const auto& [name, e] : opts) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw DataError("bad value for '" + key + "': '" + value + "' (expected " + names + ")");
}

const std::set<std::string> kTrainKeys = {"architecture", "batching", "batch_limit", "epochs",    "lr",
                                          "schedule",     "warmup",   "selection",   "seed",      "label_smoothing",
                                          "beta1",        "beta2",    "epsilon",     "grad_clip", "max_length"};

}  // namespace

std::string ArchitectureName(Architecture a) { return a == Architecture::kTransformer ? "transformer" : "recurrent"; }

Architecture ParseArchitecture(const std::string& name) {
  return ParseEnum<Architecture>("architecture", name,
                                 {{"transformer", Architecture::kTransformer}, {"recurrent", Architecture::kRecurrent}});
}

void TrainConfig::Validate() const {
  if (batch_limit == 0) throw ParameterError("batch_limit must be positive");
  if (!(lr > 0.0)) throw ParameterError("lr must be positive");
  if (schedule == Schedule::kNoam && warmup == 0) throw ParameterError("noam schedule needs warmup > 0");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw ParameterError("label_smoothing must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ParameterError("Adam betas in [0, 1)");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (grad_clip < 0.0) throw ParameterError("grad_clip must be non-negative");
  if (max_length == 0) throw ParameterError("max_length must be positive");
}

std::map<std::string, std::string> TrainConfig::ToEntries() const {
  return {{"architecture", ArchitectureName(architecture)},
          {"batching", BatchingName(batching)},
          {"batch_limit", std::to_string(batch_limit)},
          {"epochs", std::to_string(epochs)},
          {"lr", FormatReal(lr)},
          {"schedule", ScheduleName(schedule)},
          {"warmup", std::to_string(warmup)},
          {"selection", SelectionName(selection)},
          {"seed", std::to_string(seed)},
          {"label_smoothing", FormatReal(label_smoothing)},
          {"beta1", FormatReal(beta1)},
          {"beta2", FormatReal(beta2)},
          {"epsilon", FormatReal(epsilon)},
          {"grad_clip", FormatReal(grad_clip)},
          {"max_length", std::to_string(max_length)}};
}

TrainConfig DefaultTrainConfig(Architecture architecture) {
  TrainConfig c;
  c.architecture = architecture;
  if (architecture == Architecture::kRecurrent) {
    c.batching = Batching::kBySentences;
    c.batch_limit = 32;
    c.epochs = 15;
    c.lr = 0.001;
    c.schedule = Schedule::kHalveOnStall;
    c.selection = Selection::kAccuracy;
    c.label_smoothing = 0.0;
    c.beta2 = 0.999;
    c.grad_clip = 5.0;
  }
  return c;
}

std::map<std::string, std::string> ExperimentConfig::ToEntries() const {
  auto e = train.ToEntries();
  for (const auto& [k, v] : transformer.ToEntries()) e["transformer." + k] = v;
  for (const auto& [k, v] : recurrent.ToEntries()) e["recurrent." + k] = v;
  return e;
}

ExperimentConfig ExperimentConfig::FromEntries(const std::map<std::string, std::string>& e) {
  std::map<std::string, std::string> tf, rnn;
  for (const auto& [k, v] : e) {
    if (k.rfind("transformer.", 0) == 0) {
      tf[k.substr(12)] = v;
    } else if (k.rfind("recurrent.", 0) == 0) {
      rnn[k.substr(10)] = v;
    } else if (!kTrainKeys.contains(k)) {
      throw DataError("unknown config key '" + k + "'");
    }
  }
  RejectUnknownKeys(tf, {"num_layers", "model_dim", "num_heads", "ffn_dim", "dropout", "embedding_dropout",
                         "max_positions"},
                    "transformer section");
  RejectUnknownKeys(rnn, {"num_layers", "hidden_dim", "embedding_dim", "dropout"}, "recurrent section");

  ExperimentConfig out;
  TrainConfig& t = out.train;
  t = DefaultTrainConfig(ParseArchitecture(ReadString(e, "architecture", "transformer")));
  if (auto it = e.find("batching"); it != e.end()) {
    t.batching = ParseEnum<Batching>("batching", it->second,
                                     {{"by-tokens", Batching::kByTokens}, {"by-sentences", Batching::kBySentences}});
  }
  if (auto it = e.find("schedule"); it != e.end()) {
    t.schedule = ParseEnum<Schedule>(
        "schedule", it->second,
        {{"noam", Schedule::kNoam}, {"halve-on-stall", Schedule::kHalveOnStall}, {"constant", Schedule::kConstant}});
  }
  if (auto it = e.find("selection"); it != e.end()) {
    t.selection = ParseEnum<Selection>("selection", it->second,
                                       {{"perplexity", Selection::kPerplexity}, {"accuracy", Selection::kAccuracy}});
  }
  t.batch_limit = ReadSize(e, "batch_limit", t.batch_limit);
  t.epochs = ReadSize(e, "epochs", t.epochs);
  t.lr = ReadReal(e, "lr", t.lr);
  t.warmup = ReadSize(e, "warmup", t.warmup);
  t.seed = ReadU64(e, "seed", t.seed);
  t.label_smoothing = ReadReal(e, "label_smoothing", t.label_smoothing);
  t.beta1 = ReadReal(e, "beta1", t.beta1);
  t.beta2 = ReadReal(e, "beta2", t.beta2);
  t.epsilon = ReadReal(e, "epsilon", t.epsilon);
  t.grad_clip = ReadReal(e, "grad_clip", t.grad_clip);
  t.max_length = ReadSize(e, "max_length", t.max_length);
  t.Validate();
  out.transformer = transformer::TransformerConfig::FromEntries(tf);
  out.recurrent = recurrent::LstmConfig::FromEntries(rnn);
  return out;
}

ExperimentConfig ExperimentConfig::Load(std::istream& in, const std::string& origin) {
  return FromEntries(ParseEntries(in, origin));
}

}  // namespace charnmt::training
