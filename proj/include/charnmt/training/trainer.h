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

#ifndef CHARNMT_TRAINING_TRAINER_H_
#define CHARNMT_TRAINING_TRAINER_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "charnmt/common/batch.h"
#include "charnmt/common/model.h"
#include "charnmt/numcore/adam.h"
#include "charnmt/training/config.h"

namespace charnmt::training {

using Model = Seq2SeqModel<float>;

// Sorts by source length (stable), packs greedily under the batch limit and,
// when `shuffle_stream` is given, permutes the batch order with
// Rng::Stream(seed, *shuffle_stream). Pairs longer than max_length on either
// side are rejected with a DataError giving their count.
std::vector<Batch> MakeBatches(const std::vector<SentencePair>& corpus, const TrainConfig& config,
                               const std::optional<std::string>& shuffle_stream);

// Pure schedule: `val_ppl` holds end-of-epoch validation perplexities seen so
// far (used by kHalveOnStall). Steps count from 1.
double LearningRate(const TrainConfig& config, std::size_t step, std::span<const double> val_ppl,
                    std::size_t model_dim);

std::unique_ptr<Model> CreateModel(const ExperimentConfig& config, std::size_t src_vocab, std::size_t tgt_vocab);
// Rebuilds an architecture from Seq2SeqModel::ConfigEntries().
std::unique_ptr<Model> CreateModel(const std::string& architecture, const std::map<std::string, std::string>& entries,
                                   std::uint64_t seed);

struct StepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

// Forward, loss, backward and one Adam update at learning rate `lr`. A
// non-finite loss throws TrainingError and leaves parameters untouched.
StepResult TrainStep(Model& model, const Batch& batch, numcore::AdamState<float>& adam, const TrainConfig& config,
                     double lr, numcore::Rng& dropout_rng);

struct Validation {
  double perplexity = 0.0;
  double accuracy = 0.0;
  std::size_t tokens = 0;
};

Validation Validate(const Model& model, std::span<const Batch> batches);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  Validation validation;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based, 0 if nothing was validated
  std::size_t steps = 0;
};

struct TrainOptions {
  std::ostream* log = nullptr;  // CSV: step,epoch,lr,loss,val_ppl,val_acc
  // Directory for per-epoch checkpoints "epoch_N.ckpt" and "best.ckpt".
  std::optional<std::string> checkpoint_dir;
  // Return false to stop after this epoch.
  std::function<bool(const EpochRecord&)> on_epoch;
};

// Selection rule over a history: min perplexity or max accuracy, earliest
// epoch on ties.
std::size_t SelectBest(std::span<const EpochRecord> history, Selection selection);

class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config);

  TrainResult Fit(const std::vector<SentencePair>& train, const std::vector<SentencePair>& valid,
                  const TrainOptions& options = {});

  std::size_t step() const { return step_; }
  numcore::AdamState<float>& adam() { return adam_; }
  numcore::Rng& dropout_rng() { return dropout_rng_; }

 private:
  std::size_t ModelDim() const;

  Model& model_;
  TrainConfig config_;
  numcore::AdamState<float> adam_;
  numcore::Rng dropout_rng_;
  std::size_t step_ = 0;
};

}  // namespace charnmt::training

#endif  // CHARNMT_TRAINING_TRAINER_H_
