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
#include <numeric>
#include <set>

#include "wemg/error.hpp"
#include "wemg/rng.hpp"
#include "wemg/train.hpp"

namespace wemg::train {

std::size_t WindowSet::length() const {
  if (data == nullptr) throw Error("window set has no dataset");
  return data->window_length();
}

int WindowSet::label(std::size_t position) const { return class_index(data->label(indices.at(position))); }

std::vector<int> WindowSet::blocks() const {
  std::set<int> ids;
  for (std::size_t i : indices) ids.insert(data->block_id(i));
  return {ids.begin(), ids.end()};
}

void WindowSet::fill(std::span<const std::size_t> positions, std::span<double> out, std::span<int> labels) const {
  const std::size_t per = channels() * length();
  if (out.size() != positions.size() * per || labels.size() != positions.size()) {
    throw ShapeError("window set: batch buffer has the wrong size");
  }
  for (std::size_t b = 0; b < positions.size(); ++b) {
    const std::size_t index = indices.at(positions[b]);
    const std::span<double> dst = out.subspan(b * per, per);
    data->copy_window(index, channel_rows, dst);
    if (normalizer) dsp::apply_normalizer(*normalizer, dst, length());
    labels[b] = class_index(data->label(index));
  }
}

nn::Tensor WindowSet::batch(std::span<const std::size_t> positions, std::vector<int>* labels) const {
  std::vector<double> values(positions.size() * channels() * length());
  std::vector<int> y(positions.size());
  fill(positions, values, y);
  if (labels != nullptr) *labels = std::move(y);
  return nn::Tensor::from({positions.size(), channels(), length()}, std::move(values));
}

std::vector<std::size_t> channel_rows(const grid::ChannelSubset& subset, const grid::ElectrodeLayout& layout) {
  grid::validate_subset(subset, layout);
  std::vector<std::size_t> rows;
  rows.reserve(subset.ids.size());
  for (int id : subset.ids) rows.push_back(static_cast<std::size_t>(id - 1));
  return rows;
}

int argmax(std::span<const double> row) {
  if (row.empty()) throw Error("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return static_cast<int>(best);
}

std::vector<int> predict(nn::Model& model, const WindowSet& set, std::size_t batch_size) {
  if (batch_size == 0) throw Error("batch size must be >= 1");
  nn::NoGradGuard no_grad;
  std::vector<int> out;
  out.reserve(set.size());
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    const std::size_t end = std::min(set.size(), start + batch_size);
    positions.resize(end - start);
    std::iota(positions.begin(), positions.end(), start);
    const nn::Tensor logits = model.forward(set.batch(positions), {});
    const std::size_t k = logits.dim(1);
    for (std::size_t b = 0; b < positions.size(); ++b) out.push_back(argmax(logits.value().subspan(b * k, k)));
  }
  return out;
}

EvalResult evaluate(nn::Model& model, const WindowSet& set, std::size_t batch_size) {
  if (set.size() == 0) throw Error("cannot evaluate on an empty set");
  const std::vector<int> pred = predict(model, set, batch_size);
  EvalResult r;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int truth = set.label(i);
    if (pred[i] < 0 || pred[i] >= kNumClasses) throw Error("model has more outputs than gesture classes");
    ++r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred[i])];
    if (pred[i] == truth) ++correct;
  }
  r.total = pred.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  return r;
}

std::vector<std::size_t> batch_boundaries(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) throw Error("batch size must be >= 1");
  std::vector<std::size_t> bounds{0};
  for (std::size_t end = batch_size; end < n; end += batch_size) bounds.push_back(end);
  if (n > 0) bounds.push_back(n);
  if (bounds.size() > 2 && bounds[bounds.size() - 1] - bounds[bounds.size() - 2] == 1) {
    bounds.erase(bounds.end() - 2);
  }
  return bounds;
}

TrainResult train_model(const nn::ModelSpec& spec, const WindowSet& train, const WindowSet& val,
                        const TrainOptions& options) {
  if (train.size() == 0) throw Error("cannot train on an empty training set");
  if (options.epochs == 0) throw Error("epochs must be >= 1");
  if (val.size() > 0 && (val.channels() != train.channels() || val.length() != train.length())) {
    throw ShapeError("validation windows do not match the training windows");
  }

  TrainResult result;
  result.record.seed = options.seed;
  result.model = nn::make_model(spec, train.channels(), train.length(), derive_seed(options.seed, {0}));
  nn::Model& model = *result.model;
  Rng shuffle_rng(derive_seed(options.seed, {1}));
  Rng dropout_rng(derive_seed(options.seed, {2}));
  AdamState adam = make_adam_state(model, options.adam);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool select = val.size() > 0;
  nn::ModelState best_state;
  std::size_t since_best = 0;
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(std::span(order), shuffle_rng);
    const std::vector<std::size_t> bounds = batch_boundaries(order.size(), options.batch_size);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::span<const std::size_t> positions(order.data() + bounds[b], bounds[b + 1] - bounds[b]);
      const nn::Tensor x = train.batch(positions, &labels);
      model.zero_grad();
      const nn::Tensor logits = model.forward(x, {nn::Mode::kTrain, &dropout_rng, nullptr});
      const nn::Tensor loss = nn::cross_entropy(logits, labels);
      nn::backward(loss);
      adam_step(model, adam);
      loss_sum += loss.value()[0] * static_cast<double>(positions.size());
    }
    model.zero_grad();

    EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()), 0.0};
    if (select) rec.val_accuracy = evaluate(model, val).accuracy;
    result.record.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(to_json(rec));

    if (!select) continue;
    if (epoch == 0 || rec.val_accuracy > result.record.best_val_accuracy) {
      result.record.best_epoch = epoch;
      result.record.best_val_accuracy = rec.val_accuracy;
      best_state = model.state();
      since_best = 0;
    } else if (options.patience > 0 && ++since_best >= options.patience) {
      result.record.stopped_early = true;
      break;
    }
  }

  if (select) {
    model.load_state(best_state);
  } else {
    result.record.best_epoch = result.record.epochs.size() - 1;
  }
  return result;
}

nlohmann::json to_json(const EpochRecord& e) {
  return {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}};
}

nlohmann::json to_json(const TrainRecord& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) epochs.push_back(to_json(e));
  return {{"epochs", epochs},
          {"best_epoch", r.best_epoch},
          {"best_val_accuracy", r.best_val_accuracy},
          {"stopped_early", r.stopped_early},
          {"seed", r.seed}};
}

nlohmann::json to_json(const EvalResult& r) {
  return {{"accuracy", r.accuracy}, {"confusion", r.confusion}, {"total", r.total}};
}

}  // namespace wemg::train
