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

#include "charnmt/training/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>

#include "charnmt/common/config_entries.h"
#include "charnmt/common/error.h"
#include "charnmt/numcore/ops.h"
#include "charnmt/training/checkpoint.h"

namespace charnmt::training {

std::vector<Batch> MakeBatches(const std::vector<SentencePair>& corpus, const TrainConfig& config,
                               const std::optional<std::string>& shuffle_stream) {
  std::size_t too_long = 0;
  for (const auto& p : corpus) {
    if (p.src.size() > config.max_length || p.tgt.size() + 1 > config.max_length) ++too_long;
  }
  if (too_long > 0) {
    throw DataError(std::to_string(too_long) + " of " + std::to_string(corpus.size()) +
                    " pairs exceed max_length " + std::to_string(config.max_length));
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return corpus[a].src.size() < corpus[b].src.size(); });

  std::vector<Batch> batches;
  std::vector<SentencePair> pairs;
  std::vector<std::size_t> indices;
  std::size_t load = 0;
  auto flush = [&] {
    if (pairs.empty()) return;
    batches.push_back(MakeBatch(pairs, indices));
    pairs.clear();
    indices.clear();
    load = 0;
  };
  for (std::size_t i : order) {
    const std::size_t cost = config.batching == Batching::kByTokens ? corpus[i].tgt.size() + 1 : 1;
    if (!pairs.empty() && load + cost > config.batch_limit) flush();
    pairs.push_back(corpus[i]);
    indices.push_back(i);
    load += cost;
  }
  flush();
  if (shuffle_stream) {
    numcore::Rng rng = numcore::Rng::Stream(config.seed, *shuffle_stream);
    rng.Shuffle(batches);
  }
  return batches;
}

double LearningRate(const TrainConfig& config, std::size_t step, std::span<const double> val_ppl,
                    std::size_t model_dim) {
  switch (config.schedule) {
    case Schedule::kConstant:
      return config.lr;
    case Schedule::kNoam: {
      const double s = static_cast<double>(std::max<std::size_t>(step, 1));
      const double w = static_cast<double>(config.warmup);
      return config.lr * std::pow(static_cast<double>(model_dim), -0.5) *
             std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
    }
    case Schedule::kHalveOnStall: {
      double best = std::numeric_limits<double>::infinity();
      int stalls = 0;
      for (double p : val_ppl) {
        if (p < best) {
          best = p;
        } else {
          ++stalls;
        }
      }
      return config.lr * std::ldexp(1.0, -stalls);
    }
  }
  return config.lr;
}

std::unique_ptr<Model> CreateModel(const ExperimentConfig& config, std::size_t src_vocab, std::size_t tgt_vocab) {
  if (config.train.architecture == Architecture::kTransformer) {
    return std::make_unique<transformer::TransformerModel<float>>(config.transformer, src_vocab, tgt_vocab,
                                                                  config.train.seed);
  }
  return std::make_unique<recurrent::RecurrentModel<float>>(config.recurrent, src_vocab, tgt_vocab,
                                                            config.train.seed);
}

std::unique_ptr<Model> CreateModel(const std::string& architecture, const std::map<std::string, std::string>& entries,
                                   std::uint64_t seed) {
  auto rest = entries;
  const std::size_t src_vocab = ReadSize(rest, "src_vocab", 0);
  const std::size_t tgt_vocab = ReadSize(rest, "tgt_vocab", 0);
  rest.erase("src_vocab");
  rest.erase("tgt_vocab");
  switch (ParseArchitecture(architecture)) {
    case Architecture::kTransformer:
      RejectUnknownKeys(rest, {"num_layers", "model_dim", "num_heads", "ffn_dim", "dropout", "embedding_dropout",
                               "max_positions"},
                        "transformer model");
      return std::make_unique<transformer::TransformerModel<float>>(transformer::TransformerConfig::FromEntries(rest),
                                                                    src_vocab, tgt_vocab, seed);
    case Architecture::kRecurrent:
      RejectUnknownKeys(rest, {"num_layers", "hidden_dim", "embedding_dim", "dropout"}, "recurrent model");
      return std::make_unique<recurrent::RecurrentModel<float>>(recurrent::LstmConfig::FromEntries(rest), src_vocab,
                                                                tgt_vocab, seed);
  }
  throw DataError("unknown architecture");
}

StepResult TrainStep(Model& model, const Batch& batch, numcore::AdamState<float>& adam, const TrainConfig& config,
                     double lr, numcore::Rng& dropout_rng) {
  auto& params = model.params().tensors();
  StepResult result;
  {
    numcore::Tape<float> tape;
    numcore::TapeScope<float> scope(tape);
    auto logits = model.Logits(batch, Mode::kTrain, dropout_rng);
    auto loss = numcore::CrossEntropyLabelSmoothed(logits, batch.tgt_out.ids, config.label_smoothing, kPadId);
    result.loss = static_cast<double>(loss.item());
    if (!std::isfinite(result.loss)) {
      model.params().ZeroGrad();
      throw TrainingError("non-finite loss " + std::to_string(result.loss) + " at step " +
                          std::to_string(adam.step + 1) + " (lr " + std::to_string(lr) + ", batch of sentences " +
                          std::to_string(batch.indices.empty() ? 0 : batch.indices.front()) + "...)");
    }
    tape.Backward(loss);
  }
  if (config.grad_clip > 0.0) result.grad_norm = numcore::ClipGradNorm<float>(params, config.grad_clip);
  adam.lr = lr;
  numcore::AdamStep<float>(params, adam);
  model.params().ZeroGrad();
  return result;
}

Validation Validate(const Model& model, std::span<const Batch> batches) {
  if (batches.empty()) throw DataError("validation set is empty");
  numcore::NoGradScope<float> no_grad;
  numcore::Rng unused(0);
  double nll = 0.0;
  std::size_t tokens = 0, correct = 0;
  for (const auto& batch : batches) {
    auto logits = model.Logits(batch, Mode::kEval, unused);
    auto s = numcore::ScoreTokens(logits, batch.tgt_out.ids, kPadId);
    nll += s.nll_sum;
    tokens += s.tokens;
    correct += s.correct;
  }
  if (tokens == 0) throw DataError("validation set has no target tokens");
  return {std::exp(nll / static_cast<double>(tokens)), static_cast<double>(correct) / static_cast<double>(tokens),
          tokens};
}

std::size_t SelectBest(std::span<const EpochRecord> history, Selection selection) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& v = history[i].validation;
    if (best == 0) {
      best = i + 1;
      continue;
    }
    const auto& b = history[best - 1].validation;
    const bool better =
        selection == Selection::kPerplexity ? v.perplexity < b.perplexity : v.accuracy > b.accuracy;
    if (better) best = i + 1;
  }
  return best;
}

Trainer::Trainer(Model& model, const TrainConfig& config)
    : model_(model),
      config_(config),
      adam_(numcore::MakeAdamState<float>(model.params().tensors(), config.lr, config.beta1, config.beta2,
                                          config.epsilon)),
      dropout_rng_(numcore::Rng::Stream(config.seed, "dropout")) {
  config_.Validate();
}

std::size_t Trainer::ModelDim() const {
  const auto e = model_.ConfigEntries();
  auto it = e.find("model_dim");
  if (it == e.end()) it = e.find("hidden_dim");
  return it == e.end() ? 1 : std::stoull(it->second);
}

namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

TrainResult Trainer::Fit(const std::vector<SentencePair>& train, const std::vector<SentencePair>& valid,
                         const TrainOptions& options) {
  if (train.empty()) throw DataError("training set is empty");
  const std::vector<Batch> valid_batches =
      valid.empty() ? std::vector<Batch>{} : MakeBatches(valid, config_, std::nullopt);
  const std::size_t dim = ModelDim();
  if (options.log) *options.log << "step,epoch,lr,loss,val_ppl,val_acc\n";
  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);

  TrainResult result;
  std::vector<double> ppl_history;
  for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
    auto batches = MakeBatches(train, config_, "batches.epoch." + std::to_string(epoch));
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      ++step_;
      rec.lr = LearningRate(config_, step_, ppl_history, dim);
      auto r = TrainStep(model_, batch, adam_, config_, rec.lr, dropout_rng_);
      loss_sum += r.loss;
      if (options.log) {
        *options.log << step_ << ',' << epoch << ',' << Num(rec.lr) << ',' << Num(r.loss) << ",,\n";
      }
    }
    rec.step = step_;
    rec.mean_loss = loss_sum / static_cast<double>(batches.size());
    if (!valid_batches.empty()) {
      rec.validation = Validate(model_, valid_batches);
      ppl_history.push_back(rec.validation.perplexity);
      if (options.log) {
        *options.log << step_ << ',' << epoch << ',' << Num(rec.lr) << ",," << Num(rec.validation.perplexity) << ','
                     << Num(rec.validation.accuracy) << '\n';
      }
    }
    result.history.push_back(rec);
    if (!valid_batches.empty()) result.best_epoch = SelectBest(result.history, config_.selection);
    if (options.checkpoint_dir) {
      CheckpointMeta meta;
      meta.config = config_.ToEntries();
      meta.epoch = epoch;
      meta.val_perplexity = rec.validation.perplexity;
      meta.val_accuracy = rec.validation.accuracy;
      meta.rng_state = dropout_rng_.Serialize();
      const std::string path = *options.checkpoint_dir + "/epoch_" + std::to_string(epoch) + ".ckpt";
      SaveCheckpoint(path, model_, meta);
      if (result.best_epoch == epoch) {
        std::filesystem::copy_file(path, *options.checkpoint_dir + "/best.ckpt",
                                   std::filesystem::copy_options::overwrite_existing);
      }
    }
    if (options.log) options.log->flush();
    if (options.on_epoch && !options.on_epoch(rec)) break;
  }
  result.steps = step_;
  return result;
}

}  // namespace charnmt::training
