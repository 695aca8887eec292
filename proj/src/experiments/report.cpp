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
#include <iomanip>

#include "wemg/error.hpp"
#include "wemg/experiments.hpp"

namespace wemg::exp {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Evaluation& e) {
  json j = {{"condition", e.condition},
            {"subject", e.subject},
            {"fold", e.fold},
            {"subset_index", e.subset_index},
            {"channels", e.subset.ids},
            {"accuracy", e.accuracy},
            {"test_block", e.detail.test_block},
            {"val_block", e.detail.val_block},
            {"confusion", e.detail.test.confusion},
            {"train", train::to_json(e.detail.record)}};
  if (e.dist) {
    j["dist"] = *e.dist;
    j["fom"] = *e.fom;
    j["density"] = grid::to_string(*e.density);
  }
  return j;
}

json to_json(const ConditionSummary& s) {
  return {{"condition", s.condition},
          {"evaluations", s.evaluations},
          {"pooled", {{"mean", s.pooled_mean}, {"std", s.pooled_std}}},
          {"per_subject",
           {{"means", s.subject_means}, {"mean", s.subject_mean}, {"std", s.subject_std}}}};
}

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? " " : "") + std::to_string(ids[i]);
  return out;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string(), "io");
  out << std::setprecision(17);
  return out;
}

}  // namespace

json to_json(const ExperimentReport& report) {
  json evaluations = json::array(), summaries = json::array(), importance = json::array();
  for (const auto& e : report.evaluations) evaluations.push_back(to_json(e));
  for (const auto& s : report.summaries) summaries.push_back(to_json(s));
  for (const auto& row : report.importance) importance.push_back({{"gesture", row.gesture}, {"scores", row.scores}});
  json results = {{"conditions", report.conditions},
                  {"summaries", summaries},
                  {"statistics", report.statistics},
                  {"warnings", report.warnings},
                  {"layout", grid::to_json(report.layout)},
                  {"evaluations", evaluations}};
  if (report.experiment == Experiment::kAttribution) results["importance"] = importance;
  return {{"experiment", to_string(report.experiment)}, {"results", results}, {"provenance", report.provenance}};
}

void write_report(const ExperimentReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "report.json");
    out << to_json(report).dump(2) << "\n";
  }
  {
    auto out = open_out(dir / "evaluations.csv");
    out << "condition,subject,fold,subset_index,n,channels,accuracy\n";
    for (const auto& e : report.evaluations) {
      out << e.condition << "," << e.subject << "," << e.fold << "," << e.subset_index << "," << e.subset.ids.size()
          << "," << join_ids(e.subset.ids) << "," << e.accuracy << "\n";
    }
  }
  if (report.experiment == Experiment::kDensity) {
    auto out = open_out(dir / "density.csv");
    out << "n,density,subject,fold,subset_index,channels,dist,accuracy,fom\n";
    for (const auto& e : report.evaluations) {
      out << e.subset.ids.size() << "," << grid::to_string(*e.density) << "," << e.subject << "," << e.fold << ","
          << e.subset_index << "," << join_ids(e.subset.ids) << "," << *e.dist << "," << e.accuracy << "," << *e.fom
          << "\n";
    }
  }
  if (report.experiment == Experiment::kAttribution) {
    attr::write_importance_csv(dir / "importance.csv", report.layout, report.importance);
  }
}

}  // namespace wemg::exp
