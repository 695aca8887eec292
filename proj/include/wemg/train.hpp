// Copyright 2026 The wemg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Adam, the mini-batch training loop and the block-wise ten-fold
// cross-validation harness.
//
// Data reaches the network through WindowSet: a list of window indices into
// a WindowedDataset, the channel rows to keep and an optional normalizer
// applied while the batch is assembled. Every WindowSet knows which blocks it
// draws from, which is what the leakage guard checks.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "wemg/dsp.hpp"
#include "wemg/grid.hpp"
#include "wemg/nn/models.hpp"

namespace wemg::train {

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

/// Zero moments shaped like `params`.
AdamState make_adam_state(std::span<const std::vector<double>> params, AdamConfig config = {});
AdamState make_adam_state(const nn::Model& model, AdamConfig config = {});

/// One bias-corrected Adam update. Throws NumericError("divergence detected")
/// before touching any state if a gradient is not finite.
void adam_step(std::span<std::vector<double>> params, std::span<const std::vector<double>> grads, AdamState& state);
/// Same update on the model's parameters using their accumulated gradients.
void adam_step(nn::Model& model, AdamState& state);

// ---------------------------------------------------------------------------
// Data views

struct WindowSet {
  const dsp::WindowedDataset* data = nullptr;
  std::vector<std::size_t> indices;       // into data
  std::vector<std::size_t> channel_rows;  // 0-based rows, in model input order
  std::optional<dsp::ChannelNormalizer> normalizer;

  std::size_t size() const noexcept { return indices.size(); }
  std::size_t channels() const noexcept { return channel_rows.size(); }
  std::size_t length() const;
  int label(std::size_t position) const;
  /// Sorted distinct block ids of the windows in the set.
  std::vector<int> blocks() const;
  /// Writes positions.size() windows as a B x C x T batch (normalized when a
  /// normalizer is present) and their class indices.
  void fill(std::span<const std::size_t> positions, std::span<double> out, std::span<int> labels) const;
  nn::Tensor batch(std::span<const std::size_t> positions, std::vector<int>* labels = nullptr) const;
};

/// Channel rows for a subset of the dataset's layout (electrode id k is row
/// k - 1), in subset order.
std::vector<std::size_t> channel_rows(const grid::ChannelSubset& subset, const grid::ElectrodeLayout& layout);

// ---------------------------------------------------------------------------
// Training and evaluation

struct EvalResult {
  double accuracy = 0.0;
  std::array<std::array<std::uint64_t, 6>, 6> confusion{};  // [true][predicted]
  std::uint64_t total = 0;
};

/// Index of the largest entry; the lowest index wins ties.
int argmax(std::span<const double> row);

/// Eval-mode predictions over the whole set in batches.
std::vector<int> predict(nn::Model& model, const WindowSet& set, std::size_t batch_size = 256);
EvalResult evaluate(nn::Model& model, const WindowSet& set, std::size_t batch_size = 256);

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  /// Stop after this many epochs without a strictly better val accuracy;
  /// 0 disables early stopping.
  std::size_t patience = 10;
  AdamConfig adam;
  std::uint64_t seed = 0;
  /// Called with one JSON record per epoch.
  std::function<void(const nlohmann::json&)> on_epoch;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::unique_ptr<nn::Model> model;  // parameters and buffers of the best epoch
  TrainRecord record;
};

/// Batch boundaries for one epoch: consecutive chunks of `batch_size`, with
/// a trailing chunk of one window merged into the previous chunk because
/// train-mode batch norm needs two samples.
std::vector<std::size_t> batch_boundaries(std::size_t n, std::size_t batch_size);

/// Seeded mini-batch training with cross-entropy. Model init, shuffling and
/// dropout use independent streams derived from options.seed. With an empty
/// val set the last epoch is kept and early stopping is off.
TrainResult train_model(const nn::ModelSpec& spec, const WindowSet& train, const WindowSet& val,
                        const TrainOptions& options);

nlohmann::json to_json(const EpochRecord& e);
nlohmann::json to_json(const TrainRecord& r);
nlohmann::json to_json(const EvalResult& r);

// ---------------------------------------------------------------------------
// Cross-validation

struct Fold {
  std::vector<int> train_blocks;
  int val_block = 0;
  int test_block = 0;
};

using FoldPlan = std::vector<Fold>;

/// Fold k tests block_ids[k], validates block_ids[(k+1) % 10] and trains on
/// the other eight. Needs exactly 10 distinct ids.
FoldPlan make_fold_plan(std::span<const int> block_ids);

struct FoldData {
  WindowSet train, val, test;
  /// Blocks whose windows fed the normalizer statistics.
  std::vector<int> normalizer_blocks;
};

/// Selects the fold's windows and channels and fits the normalizer on the
/// training windows only.
FoldData make_fold_data(const dsp::WindowedDataset& data, const Fold& fold, std::span<const std::size_t> rows);

/// Throws LeakageError when a val or test block contributes to the training
/// windows or the normalizer, or when val/test sets hold foreign blocks.
void check_leakage(const Fold& fold, const FoldData& fold_data);

struct CvOptions {
  TrainOptions train;
  /// Folds to run (indices into the plan); empty runs all ten.
  std::vector<std::size_t> folds;
  /// Mixed into every fold seed so that repeated subsets get distinct streams.
  std::uint64_t subset_index = 0;
  std::size_t workers = 1;
  /// Test hook: appends one test-block window to each fold's training set
  /// before the leakage check, which must then reject the fold.
  bool inject_leakage = false;
};

struct FoldResult;

/// Called once per fold, on the worker thread, with the trained model and the
/// fold's normalized windows. Callers synchronize their own state.
using FoldModelHook = std::function<void(const FoldResult&, nn::Model&, const FoldData&)>;

struct FoldResult {
  std::size_t fold = 0;
  int test_block = 0;
  int val_block = 0;
  double accuracy = 0.0;
  EvalResult test;
  TrainRecord record;
};

struct CvResult {
  std::vector<FoldResult> folds;  // in fold order
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample std (n - 1); 0 for a single fold
};

/// Fold seed: derive_seed(base, {fold, subset_index}).
std::uint64_t fold_seed(std::uint64_t base, std::size_t fold, std::uint64_t subset_index);

CvResult run_cv(const dsp::WindowedDataset& data, const grid::ElectrodeLayout& layout,
                const grid::ChannelSubset& subset, const nn::ModelSpec& spec, const CvOptions& options,
                const FoldModelHook& on_model = {});

nlohmann::json to_json(const FoldResult& r);
nlohmann::json to_json(const CvResult& r);

}  // namespace wemg::train
