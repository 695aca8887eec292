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


// wemg: command-line entry point for synthesis, experiments, statistics and
// layout inspection. Results go to stdout as JSON; failures print
// {"error": {...}} to stderr and exit nonzero.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "wemg/error.hpp"
#include "wemg/experiments.hpp"
#include "wemg/grid.hpp"
#include "wemg/stats.hpp"
#include "wemg/synth.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace wemg;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string arch;
  bool fast = false;
};

std::vector<int> parse_ids(const std::string& s) {
  std::vector<int> ids;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) ids.push_back(std::stoi(item));
  }
  return ids;
}

int cmd_synth(const Globals& g, const std::string& preset, const std::string& sensor, const std::string& targets,
              const std::string& spec_file, int n_blocks) {
  synth::SynthSpec spec;
  if (!spec_file.empty()) {
    std::ifstream in(spec_file);
    if (!in) throw Error("cannot open " + spec_file, "io");
    spec = synth::synth_spec_from_json(json::parse(in));
    if (g.seed) spec.seed = *g.seed;
  } else {
    const Sensor s = parse_sensor(sensor);
    const std::uint64_t seed = g.seed.value_or(0);
    if (preset == "default") {
      spec = synth::default_spec(s, seed);
    } else if (preset == "separable") {
      spec = synth::separable_preset(s, seed);
    } else if (preset == "planted") {
      const auto ids = parse_ids(targets);
      spec = synth::planted_importance_spec({ids.begin(), ids.end()}, s, seed);
    } else {
      throw Error("unknown preset '" + preset + "'", "usage");
    }
  }
  if (n_blocks > 0) spec.n_blocks = n_blocks;
  if (g.out.empty()) throw Error("synth needs --out <dir>", "usage");
  const RecordingSession session = synth::generate_session(spec);
  write_session(session, g.out);
  std::ofstream(fs::path(g.out) / "synth_spec.json") << synth::to_json(spec).dump(2) << "\n";
  std::cout << json{{"session", fs::absolute(g.out).string()},
                    {"blocks", session.blocks.size()},
                    {"channels", session.channels()},
                    {"fs", session.fs},
                    {"seed", spec.seed}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_run(const Globals& g, const std::string& experiment, std::size_t workers, const std::vector<std::size_t>& folds,
            int epochs, bool verbose) {
  if (g.config.empty()) throw Error("run needs --config <file>", "usage");
  exp::ExperimentConfig cfg = exp::load_config(g.config);
  cfg.experiment = exp::parse_experiment(experiment);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.arch.empty()) cfg.model.arch = nn::parse_arch(g.arch);
  if (g.fast) cfg.fast = true;
  if (workers > 0) cfg.workers = workers;
  if (!folds.empty()) cfg.folds = folds;
  if (epochs > 0) cfg.epochs = epochs;
  if (!g.out.empty()) cfg.out_dir = fs::absolute(g.out);
  if (cfg.out_dir.empty()) cfg.out_dir = fs::absolute("out");

  exp::EventSink sink;
  if (verbose) sink = [](const json& e) { std::cerr << e.dump() << "\n"; };
  const exp::ExperimentReport report = exp::run_experiment(cfg, sink);
  exp::write_report(report, cfg.out_dir);

  json summary = {{"experiment", exp::to_string(report.experiment)},
                  {"out", cfg.out_dir.string()},
                  {"evaluations", report.evaluations.size()},
                  {"warnings", report.warnings}};
  for (const auto& s : report.summaries) {
    summary["conditions"].push_back(
        {{"condition", s.condition}, {"mean", s.pooled_mean}, {"std", s.pooled_std}, {"n", s.evaluations}});
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// CSV with header "group,value" (ANOVA, Tukey, Shapiro-Wilk per group) or
// "x,y" (regression).
int cmd_stats(const std::string& input, double alpha) {
  std::ifstream in(input);
  if (!in) throw Error("cannot open " + input, "io");
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(input + ":" + std::to_string(line_no) + ": expected two columns");
    try {
      rows.emplace_back(line.substr(0, comma), std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw FormatError(input + ":" + std::to_string(line_no) + ": value is not a number");
    }
  }
  json out;
  if (header == "group,value") {
    std::vector<std::string> labels;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<double>> groups;
    for (const auto& [label, v] : rows) {
      auto [it, fresh] = index.emplace(label, groups.size());
      if (fresh) {
        labels.push_back(label);
        groups.emplace_back();
      }
      groups[it->second].push_back(v);
    }
    for (std::size_t k = 0; k < groups.size(); ++k) {
      json rec;
      try {
        rec = stats::to_json(stats::shapiro_wilk(groups[k]), groups[k]);
      } catch (const Error& e) {
        rec = {{"test", "shapiro-wilk"}, {"error", e.what()}};
      }
      rec["group"] = labels[k];
      out["normality"].push_back(rec);
    }
    out["groups"] = labels;
    out["anova"] = stats::to_json(stats::one_way_anova(groups), groups);
    out["tukey"] = stats::to_json(stats::tukey_hsd(groups, alpha), groups);
  } else if (header == "x,y") {
    std::vector<double> x, y;
    for (const auto& [a, b] : rows) {
      x.push_back(std::stod(a));
      y.push_back(b);
    }
    out["regression"] = stats::to_json(stats::pearson_regression(x, y), x, y);
  } else {
    throw FormatError(input + ": header must be 'group,value' or 'x,y'");
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_inspect(const std::string& which, const std::string& subset) {
  grid::ElectrodeLayout layout = grid::build_maize_layout();
  if (which == "quattro") {
    layout = grid::build_quattro_layout();
  } else if (which == "maize-bi") {
    layout = grid::derive_bipolar_layout(layout, grid::default_maize_pairing());
  } else if (which != "maize") {
    std::ifstream in(which);
    if (!in) throw Error("layout must be maize, maize-bi, quattro or a layout JSON file", "usage");
    layout = grid::layout_from_json(json::parse(in));
  }
  json out = {{"layout", grid::to_json(layout)}};
  if (!subset.empty()) {
    const grid::ChannelSubset s{layout.name(), parse_ids(subset)};
    grid::validate_subset(s, layout);
    out["subset"] = s.ids;
    out["pairwise_distances"] = grid::pairwise_distances(s, layout);
    out["dist"] = grid::dist_metric(s, layout);
    if (layout.geometry() == grid::Geometry::kGrid) out["density"] = grid::to_string(grid::classify_density(s, layout));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates and frees many short-lived tensor buffers; keeping them
  // on the heap instead of mmap avoids page-fault churn.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
  CLI::App app{"wrist sEMG electrode-configuration toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Base seed")->group("Global");
  app.add_option("--config", g.config, "Experiment config JSON (or a report to rerun)")->group("Global");
  app.add_option("--out", g.out, "Output directory")->group("Global");
  app.add_option("--arch", g.arch, "Model architecture")->check(CLI::IsMember({"cnn", "tcn"}))->group("Global");
  app.add_flag("--fast", g.fast, "Two subsets per fold")->group("Global");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic session");
  std::string preset = "default", sensor = "maize", targets, spec_file;
  int n_blocks = 0;
  synth->add_option("--preset", preset, "default | separable | planted");
  synth->add_option("--sensor", sensor, "maize | quattro");
  synth->add_option("--targets", targets, "Planted electrode ids, comma separated");
  synth->add_option("--spec", spec_file, "Full synth spec JSON (overrides preset)");
  synth->add_option("--n-blocks", n_blocks, "Override the number of blocks");

  auto* run = app.add_subcommand("run", "Run an experiment");
  std::string experiment;
  std::size_t workers = 0;
  std::vector<std::size_t> folds;
  int epochs = 0;
  bool verbose = false;
  run->add_option("experiment", experiment, "region | reference | channel-count | density | attribution")
      ->required()
      ->check(CLI::IsMember({"region", "reference", "channel-count", "density", "attribution"}));
  run->add_option("--workers", workers, "Worker threads");
  run->add_option("--folds", folds, "Fold indices to run");
  run->add_option("--epochs", epochs, "Override training epochs");
  run->add_flag("--verbose", verbose, "Progress events to stderr");

  auto* st = app.add_subcommand("stats", "ANOVA/Tukey or regression on a CSV");
  std::string input;
  double alpha = 0.05;
  st->add_option("input", input, "CSV with header group,value or x,y")->required();
  st->add_option("--alpha", alpha, "Significance level");

  auto* inspect = app.add_subcommand("inspect-layout", "Print a layout and subset metrics");
  std::string which = "maize", subset;
  inspect->add_option("layout", which, "maize | maize-bi | quattro | layout JSON file");
  inspect->add_option("--subset", subset, "Electrode ids, comma separated");

  for (auto* sub : {synth, run, st, inspect}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*synth) return cmd_synth(g, preset, sensor, targets, spec_file, n_blocks);
    if (*run) return cmd_run(g, experiment, workers, folds, epochs, verbose);
    if (*st) return cmd_stats(input, alpha);
    return cmd_inspect(which, subset);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), e.kind() == "usage" || e.kind() == "config" ? 2 : 1);
  } catch (const json::exception& e) {
    return fail("format", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("error", e.what(), 1);
  }
}
