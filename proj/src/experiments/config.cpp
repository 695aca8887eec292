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


#include <fstream>
#include <set>

#include "wemg/error.hpp"
#include "wemg/experiments.hpp"
#include "wemg/kernels.hpp"

namespace wemg::exp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

Error config_error(const std::string& message) { return Error("config: " + message, "config"); }

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T get_or(const json& j, std::string_view key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

synth::SynthSpec synth_from_json(const json& j) {
  if (j.contains("spec")) {
    check_keys(j, "synth", {"spec"});
    return synth::synth_spec_from_json(j.at("spec"));
  }
  check_keys(j, "synth", {"preset", "sensor", "seed", "targets", "n_blocks", "noise_std"});
  const std::string preset = get_or<std::string>(j, "preset", "default");
  const Sensor sensor = parse_sensor(get_or<std::string>(j, "sensor", "maize"));
  const auto seed = get_or<std::uint64_t>(j, "seed", 0);
  synth::SynthSpec spec;
  if (preset == "default") {
    spec = synth::default_spec(sensor, seed);
  } else if (preset == "separable") {
    spec = synth::separable_preset(sensor, seed);
  } else if (preset == "planted") {
    const auto targets = get_or<std::vector<int>>(j, "targets", {});
    spec = synth::planted_importance_spec({targets.begin(), targets.end()}, sensor, seed);
  } else {
    throw config_error("unknown synth preset '" + preset + "'");
  }
  spec.n_blocks = get_or<int>(j, "n_blocks", spec.n_blocks);
  spec.noise_std = get_or<double>(j, "noise_std", spec.noise_std);
  synth::validate_spec(spec);
  return spec;
}

std::vector<SessionSource> sources_from_json(const json& j, const fs::path& base, const std::string& where) {
  if (!j.is_array()) throw config_error(where + " must be an array");
  std::vector<SessionSource> out;
  for (const json& e : j) {
    SessionSource s;
    if (e.is_string()) {
      s.path = e.get<std::string>();
    } else if (e.is_object() && e.contains("path")) {
      check_keys(e, where + " entry", {"path"});
      s.path = e.at("path").get<std::string>();
    } else if (e.is_object() && e.contains("synth")) {
      check_keys(e, where + " entry", {"synth"});
      s.synth = synth_from_json(e.at("synth"));
    } else {
      throw config_error(where + " entries are a path or {\"synth\": {...}}");
    }
    if (!s.synth && s.path.is_relative()) s.path = fs::absolute(base / s.path).lexically_normal();
    out.push_back(std::move(s));
  }
  return out;
}

json to_json(const SessionSource& s) {
  if (s.synth) return {{"synth", {{"spec", synth::to_json(*s.synth)}}}};
  return s.path.string();
}

dsp::ProcessOptions process_from_json(const json& j) {
  check_keys(j, "process", {"filter", "lo", "hi", "order", "order_convention", "application", "window_ms", "overlap"});
  dsp::ProcessOptions p;
  p.filter = get_or(j, "filter", p.filter);
  p.lo = get_or(j, "lo", p.lo);
  p.hi = get_or(j, "hi", p.hi);
  p.order = get_or(j, "order", p.order);
  const std::string conv = get_or<std::string>(j, "order_convention", "bandpass-order");
  if (conv == "bandpass-order") {
    p.convention = dsp::OrderConvention::kBandpassOrder;
  } else if (conv == "prototype-order") {
    p.convention = dsp::OrderConvention::kPrototypeOrder;
  } else {
    throw config_error("unknown order_convention '" + conv + "'");
  }
  // Only forward filtering is implemented; the key exists so reports can be
  // fed back as configs.
  const std::string app = get_or<std::string>(j, "application", "causal");
  if (!app.starts_with("causal")) throw config_error("process.application must be causal, got '" + app + "'");
  p.window.window_ms = get_or(j, "window_ms", p.window.window_ms);
  p.window.overlap = get_or(j, "overlap", p.window.overlap);
  return p;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.sessions.empty()) throw config_error("at least one session is required");
  if (cfg.epochs < 1) throw config_error("epochs must be >= 1");
  if (cfg.batch_size < 1) throw config_error("batch_size must be >= 1");
  if (cfg.patience < 0) throw config_error("patience must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw config_error("learning_rate must be > 0");
  if (cfg.subsets_per_fold < 1) throw config_error("subsets_per_fold must be >= 1");
  if (cfg.workers < 1) throw config_error("workers must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw config_error("alpha must be in (0, 1)");
  for (std::size_t c : cfg.counts) {
    if (c < 1) throw config_error("channel counts must be positive");
  }
  for (std::size_t n : cfg.density_sizes) {
    if (n < 2) throw config_error("density sizes must be >= 2");
  }
  for (auto d : cfg.density_levels) {
    if (d == grid::DensityClass::kInvalid) throw config_error("density level 'invalid' cannot be sampled");
  }
  std::set<std::size_t> seen;
  for (std::size_t f : cfg.folds) {
    if (f >= 10 || !seen.insert(f).second) throw config_error("folds must be distinct indices in 0..9");
  }
  if (cfg.ig_steps < 1 || cfg.ig_windows_per_class < 1) throw config_error("attribution settings must be >= 1");
  if (cfg.isa != "auto" && cfg.isa != "scalar" && cfg.isa != "avx2") throw config_error("isa must be auto|scalar|avx2");
}

}  // namespace

std::string_view to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::kRegion: return "region";
    case Experiment::kReference: return "reference";
    case Experiment::kChannelCount: return "channel-count";
    case Experiment::kDensity: return "density";
    case Experiment::kAttribution: return "attribution";
  }
  return "?";
}

Experiment parse_experiment(std::string_view s) {
  for (Experiment e : {Experiment::kRegion, Experiment::kReference, Experiment::kChannelCount, Experiment::kDensity,
                       Experiment::kAttribution}) {
    if (to_string(e) == s) return e;
  }
  throw config_error("unknown experiment '" + std::string(s) + "'");
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  try {
    check_keys(j, "config",
               {"experiment", "sessions", "quattro_sessions", "model", "train", "process", "counts", "density",
                "subsets_per_fold", "fast", "folds", "attribution", "alpha", "seed", "isa", "workers", "out_dir"});
    ExperimentConfig cfg;
    cfg.experiment = parse_experiment(get_or<std::string>(j, "experiment", "region"));
    cfg.sessions = sources_from_json(j.at("sessions"), base_dir, "sessions");
    if (j.contains("quattro_sessions")) {
      cfg.quattro_sessions = sources_from_json(j.at("quattro_sessions"), base_dir, "quattro_sessions");
    }
    if (j.contains("model")) cfg.model = nn::model_spec_from_json(j.at("model"));
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, "train", {"epochs", "batch_size", "patience", "learning_rate"});
      cfg.epochs = get_or(t, "epochs", cfg.epochs);
      cfg.batch_size = get_or(t, "batch_size", cfg.batch_size);
      cfg.patience = get_or(t, "patience", cfg.patience);
      cfg.learning_rate = get_or(t, "learning_rate", cfg.learning_rate);
    }
    if (j.contains("process")) cfg.process = process_from_json(j.at("process"));
    cfg.counts = get_or(j, "counts", cfg.counts);
    if (j.contains("density")) {
      const json& d = j.at("density");
      check_keys(d, "density", {"sizes", "levels", "region"});
      cfg.density_sizes = get_or(d, "sizes", cfg.density_sizes);
      if (d.contains("levels")) {
        cfg.density_levels.clear();
        for (const auto& l : d.at("levels")) cfg.density_levels.push_back(grid::parse_density(l.get<std::string>()));
      }
      if (d.contains("region")) cfg.density_region = grid::parse_region_selector(d.at("region").get<std::string>());
    }
    cfg.subsets_per_fold = get_or(j, "subsets_per_fold", cfg.subsets_per_fold);
    cfg.fast = get_or(j, "fast", cfg.fast);
    cfg.folds = get_or(j, "folds", cfg.folds);
    if (j.contains("attribution")) {
      const json& a = j.at("attribution");
      check_keys(a, "attribution", {"steps", "windows_per_class"});
      cfg.ig_steps = get_or(a, "steps", cfg.ig_steps);
      cfg.ig_windows_per_class = get_or(a, "windows_per_class", cfg.ig_windows_per_class);
    }
    cfg.alpha = get_or(j, "alpha", cfg.alpha);
    cfg.seed = get_or(j, "seed", cfg.seed);
    cfg.isa = get_or<std::string>(j, "isa", cfg.isa);
    cfg.workers = get_or(j, "workers", cfg.workers);
    if (j.contains("out_dir")) {
      cfg.out_dir = j.at("out_dir").get<std::string>();
      if (cfg.out_dir.is_relative()) cfg.out_dir = fs::absolute(base_dir / cfg.out_dir).lexically_normal();
    }
    validate(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw config_error(e.what());
  }
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open config " + file.string(), "io");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw config_error(file.string() + ": " + e.what());
  }
  // A report reruns from its embedded configuration.
  if (j.contains("provenance")) return config_from_report(j);
  return config_from_json(j, fs::absolute(file).parent_path());
}

json to_json(const ExperimentConfig& cfg) {
  json sessions = json::array(), quattro = json::array();
  for (const auto& s : cfg.sessions) sessions.push_back(to_json(s));
  for (const auto& s : cfg.quattro_sessions) quattro.push_back(to_json(s));
  json levels = json::array();
  for (auto d : cfg.density_levels) levels.push_back(grid::to_string(d));
  json p = dsp::to_json(cfg.process);
  p.erase("application");
  std::string isa = cfg.isa;
  if (isa == "auto") isa = std::string(kernels::isa_name(kernels::active_isa()));
  json j = {{"experiment", to_string(cfg.experiment)},
            {"sessions", sessions},
            {"quattro_sessions", quattro},
            {"model", nn::to_json(cfg.model)},
            {"train",
             {{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"patience", cfg.patience},
              {"learning_rate", cfg.learning_rate}}},
            {"process", p},
            {"counts", cfg.counts},
            {"density", {{"sizes", cfg.density_sizes}, {"levels", levels}, {"region", grid::to_string(cfg.density_region)}}},
            {"subsets_per_fold", cfg.subsets_per_fold},
            {"fast", cfg.fast},
            {"folds", cfg.folds},
            {"attribution", {{"steps", cfg.ig_steps}, {"windows_per_class", cfg.ig_windows_per_class}}},
            {"alpha", cfg.alpha},
            {"seed", cfg.seed},
            {"isa", isa},
            {"workers", cfg.workers}};
  if (!cfg.out_dir.empty()) j["out_dir"] = cfg.out_dir.string();
  return j;
}

ExperimentConfig config_from_report(const json& report) {
  try {
    return config_from_json(report.at("provenance").at("config"), fs::current_path());
  } catch (const json::exception& e) {
    throw config_error(std::string("report has no usable provenance: ") + e.what());
  }
}

}  // namespace wemg::exp
