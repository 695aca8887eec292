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


// Model checkpoints.
//
// Layout: the 8 bytes "WEMGCKPT", a little-endian uint64 header length, the
// JSON header, then one raw little-endian float64 blob per tensor in header
// order (parameters in declaration order, then buffers). The header carries
// arch, config, init seed and each tensor's name, kind and shape.

#pragma once

#include <filesystem>
#include <memory>

#include "json.hpp"
#include "wemg/nn/models.hpp"

namespace wemg::nn {

void save_checkpoint(Model& model, const std::filesystem::path& file, const nlohmann::json& extra = {});

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  nlohmann::json header;
};

/// Rebuilds the model from the header and loads every tensor.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace wemg::nn
