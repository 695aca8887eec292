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


#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "wemg/error.hpp"
#include "wemg/parallel.hpp"
#include "wemg/rng.hpp"
#include "wemg/train.hpp"

namespace wemg::train {

FoldPlan make_fold_plan(std::span<const int> block_ids) {
  if (block_ids.size() != 10) {
    throw Error("ten-fold cross-validation needs exactly 10 blocks, got " + std::to_string(block_ids.size()));
  }
  if (std::set<int>(block_ids.begin(), block_ids.end()).size() != block_ids.size()) {
    throw Error("block ids must be distinct");
  }
  FoldPlan plan(10);
  for (std::size_t k = 0; k < 10; ++k) {
    Fold& f = plan[k];
    f.test_block = block_ids[k];
    f.val_block = block_ids[(k + 1) % 10];
    for (std::size_t j = 0; j < 10; ++j) {
      if (j != k && j != (k + 1) % 10) f.train_blocks.push_back(block_ids[j]);
    }
  }
  return plan;
}

FoldData make_fold_data(const dsp::WindowedDataset& data, const Fold& fold, std::span<const std::size_t> rows) {
  FoldData fd;
  const std::vector<std::size_t> row_vec(rows.begin(), rows.end());
  auto make = [&](std::span<const int> blocks) {
    WindowSet s;
    s.data = &data;
    s.indices = data.indices_for_blocks(blocks);
    s.channel_rows = row_vec;
    return s;
  };
  fd.train = make(fold.train_blocks);
  const int val_block[] = {fold.val_block};
  const int test_block[] = {fold.test_block};
  fd.val = make(val_block);
  fd.test = make(test_block);
  if (fd.train.size() == 0 || fd.test.size() == 0) throw Error("fold has no training or no test windows");
  const dsp::ChannelNormalizer norm = dsp::fit_normalizer(data, fd.train.indices, rows);
  fd.normalizer_blocks = fd.train.blocks();
  fd.train.normalizer = norm;
  fd.val.normalizer = norm;
  fd.test.normalizer = norm;
  return fd;
}

void check_leakage(const Fold& fold, const FoldData& fd) {
  auto has_held_out = [&](const std::vector<int>& blocks) {
    return std::find(blocks.begin(), blocks.end(), fold.val_block) != blocks.end() ||
           std::find(blocks.begin(), blocks.end(), fold.test_block) != blocks.end();
  };
  const std::string where = " (val block " + std::to_string(fold.val_block) + ", test block " +
                            std::to_string(fold.test_block) + ")";
  if (has_held_out(fd.train.blocks())) throw LeakageError("training windows include a held-out block" + where);
  if (has_held_out(fd.normalizer_blocks)) {
    throw LeakageError("normalizer statistics include a held-out block" + where);
  }
  const std::vector<int> val = fd.val.blocks();
  const std::vector<int> test = fd.test.blocks();
  if (val.size() > 1 || (val.size() == 1 && val[0] != fold.val_block)) {
    throw LeakageError("validation set holds windows outside its block" + where);
  }
  if (test.size() != 1 || test[0] != fold.test_block) {
    throw LeakageError("test set holds windows outside its block" + where);
  }
}

std::uint64_t fold_seed(std::uint64_t base, std::size_t fold, std::uint64_t subset_index) {
  return derive_seed(base, {fold, subset_index});
}

CvResult run_cv(const dsp::WindowedDataset& data, const grid::ElectrodeLayout& layout,
                const grid::ChannelSubset& subset, const nn::ModelSpec& spec, const CvOptions& options,
                const FoldModelHook& on_model) {
  if (data.channels() != layout.size()) {
    throw ShapeError("dataset has " + std::to_string(data.channels()) + " channels but the layout has " +
                     std::to_string(layout.size()));
  }
  const std::vector<std::size_t> rows = channel_rows(subset, layout);
  const std::vector<int> blocks = data.block_ids();
  const FoldPlan plan = make_fold_plan(blocks);
  std::vector<std::size_t> folds = options.folds;
  if (folds.empty()) {
    for (std::size_t k = 0; k < plan.size(); ++k) folds.push_back(k);
  }
  for (std::size_t k : folds) {
    if (k >= plan.size()) throw Error("fold index " + std::to_string(k) + " out of range");
  }

  std::mutex log_mu;
  CvResult result;
  result.folds.resize(folds.size());
  parallel_for(folds.size(), options.workers, [&](std::size_t job) {
    const std::size_t k = folds[job];
    const Fold& fold = plan[k];
    FoldData fd = make_fold_data(data, fold, rows);
    if (options.inject_leakage) {
      fd.train.indices.push_back(fd.test.indices.front());
      fd.normalizer_blocks = fd.train.blocks();
    }
    check_leakage(fold, fd);

    TrainOptions topts = options.train;
    topts.seed = fold_seed(options.train.seed, k, options.subset_index);
    if (options.train.on_epoch) {
      topts.on_epoch = [&, k](const nlohmann::json& rec) {
        nlohmann::json line = rec;
        line["fold"] = k;
        line["subset_index"] = options.subset_index;
        std::lock_guard lock(log_mu);
        options.train.on_epoch(line);
      };
    }
    TrainResult trained = train_model(spec, fd.train, fd.val, topts);
    FoldResult& fr = result.folds[job];
    fr.fold = k;
    fr.test_block = fold.test_block;
    fr.val_block = fold.val_block;
    fr.test = evaluate(*trained.model, fd.test);
    fr.accuracy = fr.test.accuracy;
    fr.record = std::move(trained.record);
    if (on_model) on_model(fr, *trained.model, fd);
  });

  const double n = static_cast<double>(result.folds.size());
  double sum = 0.0;
  for (const auto& f : result.folds) sum += f.accuracy;
  result.mean_accuracy = sum / n;
  if (result.folds.size() > 1) {
    double ss = 0.0;
    for (const auto& f : result.folds) ss += (f.accuracy - result.mean_accuracy) * (f.accuracy - result.mean_accuracy);
    result.std_accuracy = std::sqrt(ss / (n - 1.0));
  }
  return result;
}

nlohmann::json to_json(const FoldResult& r) {
  return {{"fold", r.fold},
          {"test_block", r.test_block},
          {"val_block", r.val_block},
          {"accuracy", r.accuracy},
          {"test", to_json(r.test)},
          {"train", to_json(r.record)}};
}

nlohmann::json to_json(const CvResult& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  return {{"folds", folds}, {"mean_accuracy", r.mean_accuracy}, {"std_accuracy", r.std_accuracy}};
}

}  // namespace wemg::train
