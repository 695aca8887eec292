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


#include "wemg/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "wemg/error.hpp"

namespace wemg::nn {
namespace {

constexpr char kMagic[8] = {'W', 'E', 'M', 'G', 'C', 'K', 'P', 'T'};

std::uint64_t le64(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

void write_blob(std::ofstream& out, std::span<const double> values) {
  for (double v : values) {
    const std::uint64_t bits = le64(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

void read_blob(std::ifstream& in, std::span<double> values, const std::string& name) {
  for (double& v : values) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw FormatError("checkpoint truncated in tensor '" + name + "'");
    }
    v = std::bit_cast<double>(le64(bits));
  }
}

}  // namespace

void save_checkpoint(Model& model, const std::filesystem::path& file, const nlohmann::json& extra) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    tensors.push_back({{"name", p.name}, {"kind", "param"}, {"shape", p.tensor.shape()}});
  }
  for (const auto& b : model.buffers()) {
    tensors.push_back({{"name", b.name}, {"kind", "buffer"}, {"shape", {b.values->size()}}});
  }
  nlohmann::json header = {{"format", "wemg-checkpoint"},
                           {"version", 1},
                           {"dtype", "float64-le"},
                           {"arch", model.arch()},
                           {"config", model.config_json()},
                           {"seed", model.init_seed()},
                           {"tensors", std::move(tensors)}};
  if (!extra.is_null()) header["extra"] = extra;
  const std::string text = header.dump();

  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + file.string());
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = le64(text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.parameters()) write_blob(out, p.tensor.value());
  for (const auto& b : model.buffers()) write_blob(out, *b.values);
  if (!out) throw FormatError("failed writing checkpoint " + file.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + file.string());
  char magic[8];
  std::uint64_t len = 0;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError(file.string() + " is not a checkpoint");
  }
  if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) throw FormatError("checkpoint header truncated");
  len = le64(len);
  if (len > (std::uint64_t{1} << 30)) throw FormatError("checkpoint header length is implausible");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError("checkpoint header truncated");

  LoadedCheckpoint out;
  try {
    out.header = nlohmann::json::parse(text);
    if (out.header.at("format") != "wemg-checkpoint" || out.header.at("version") != 1) {
      throw FormatError("unsupported checkpoint format");
    }
    const std::uint64_t seed = out.header.at("seed").get<std::uint64_t>();
    const Arch arch = parse_arch(out.header.at("arch").get<std::string>());
    if (arch == Arch::kCnn) {
      out.model = std::make_unique<Cnn>(cnn_config_from_json(out.header.at("config")), seed);
    } else {
      out.model = std::make_unique<Tcn>(tcn_config_from_json(out.header.at("config")), seed);
    }
    const auto& tensors = out.header.at("tensors");
    const auto& params = out.model->parameters();
    auto buffers = out.model->buffers();
    if (tensors.size() != params.size() + buffers.size()) throw FormatError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const std::string name = tensors[i].at("name").get<std::string>();
      if (i < params.size()) {
        if (name != params[i].name || tensors[i].at("shape").get<Shape>() != params[i].tensor.shape()) {
          throw FormatError("checkpoint tensor '" + name + "' does not match the model");
        }
        Tensor t = params[i].tensor;
        read_blob(in, t.value(), name);
      } else {
        NamedBuffer& b = buffers[i - params.size()];
        if (name != b.name || tensors[i].at("shape").get<Shape>() != Shape{b.values->size()}) {
          throw FormatError("checkpoint buffer '" + name + "' does not match the model");
        }
        read_blob(in, *b.values, name);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint header: " + std::string(e.what()));
  }
  in.peek();
  if (!in.eof()) throw FormatError("checkpoint has trailing data");
  return out;
}

}  // namespace wemg::nn
