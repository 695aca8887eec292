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
#include <map>
#include <mutex>
#include <numeric>

#include "wemg/error.hpp"
#include "wemg/experiments.hpp"
#include "wemg/kernels.hpp"
#include "wemg/parallel.hpp"
#include "wemg/rng.hpp"
#include "wemg/stats.hpp"

namespace wemg::exp {
namespace {

using nlohmann::json;

// A condition evaluated on one dataset per subject.
struct Condition {
  Condition(std::string l, std::vector<const dsp::WindowedDataset*> d, const grid::ElectrodeLayout* lay)
      : label(std::move(l)), data(std::move(d)), layout(lay) {}

  std::string label;
  std::vector<const dsp::WindowedDataset*> data;  // per subject
  const grid::ElectrodeLayout* layout = nullptr;
  std::size_t channel_count = 0;  // grouping key for density statistics
  std::optional<grid::DensityClass> density;
};

struct Job {
  std::size_t condition = 0;
  std::size_t subject = 0;
  std::size_t fold = 0;
  std::size_t subset_index = 0;
  grid::ChannelSubset subset;
};

// Per-job integrated-gradients summary: per gesture, summed electrode scores
// and the number of windows behind them.
struct ImportanceSum {
  std::map<Gesture, std::pair<std::vector<double>, std::size_t>> by_gesture;
};

std::uint64_t label_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::vector<std::size_t> fold_list(const ExperimentConfig& cfg) {
  if (!cfg.folds.empty()) return cfg.folds;
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

kernels::Isa resolve_isa(const std::string& isa) {
  if (isa == "auto") return kernels::active_isa();
  const kernels::Isa want = isa == "scalar" ? kernels::Isa::kScalar : kernels::Isa::kAvx2;
  if (!kernels::isa_available(want)) throw Error("isa " + isa + " is not available on this machine", "config");
  return want;
}

double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Statistics that can legitimately fail on degenerate data (e.g. zero
// variance) are recorded with their error instead of aborting the report.
template <class F>
json guarded(std::string_view test, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return {{"test", test}, {"error", e.what()}};
  }
}

json compare_groups(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& groups,
                    double alpha) {
  json out = json::object();
  out["unit"] = "evaluation";
  out["groups"] = labels;
  json normality = json::array();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    json rec = guarded("shapiro-wilk", [&] { return stats::to_json(stats::shapiro_wilk(groups[g]), groups[g]); });
    rec["group"] = labels[g];
    normality.push_back(rec);
  }
  out["normality"] = normality;
  if (groups.size() >= 2) {
    const bool enough = std::all_of(groups.begin(), groups.end(), [](const auto& g) { return !g.empty(); });
    if (enough) {
      json anova = guarded("one-way-anova", [&] { return stats::to_json(stats::one_way_anova(groups), groups); });
      out["anova"] = anova;
      out["tukey"] = guarded("tukey-hsd", [&] { return stats::to_json(stats::tukey_hsd(groups, alpha), groups); });
      const auto p = anova.find("p_value");
      out["significant_main_effect"] = p != anova.end() && p->is_number() && p->get<double>() < alpha;
    }
  }
  return out;
}

}  // namespace

std::vector<RecordingSession> load_sessions(std::span<const SessionSource> sources, std::size_t workers) {
  std::vector<RecordingSession> out;
  for (const SessionSource& s : sources) {
    out.push_back(s.synth ? synth::generate_session(*s.synth, workers) : read_session(s.path));
    validate_session(out.back());
    if (out.size() > 1 && !(out.back().layout == out.front().layout)) {
      throw Error("sessions have mismatched layouts: " + out.front().layout.name() + " vs " +
                      out.back().layout.name(),
                  "config");
    }
  }
  return out;
}

RecordingSession derive_bipolar_session(const RecordingSession& session, std::span<const grid::ChannelPair> pairing) {
  RecordingSession out;
  out.subject_id = session.subject_id;
  out.sensor = session.sensor;
  out.fs = session.fs;
  out.layout = grid::derive_bipolar_layout(session.layout, pairing);
  for (const Block& b : session.blocks) {
    Block nb{b.block_id, {}};
    for (const Trial& t : b.trials) nb.trials.push_back({t.gesture, grid::derive_bipolar(t.samples, pairing), t.is_preparation});
    out.blocks.push_back(std::move(nb));
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const EventSink& events) {
  const kernels::Isa isa = resolve_isa(cfg.isa);
  const kernels::Isa previous_isa = kernels::active_isa();
  kernels::set_active_isa(isa);
  struct RestoreIsa {
    kernels::Isa isa;
    ~RestoreIsa() { kernels::set_active_isa(isa); }
  } restore{previous_isa};

  std::mutex event_mu;
  auto emit = [&](json e) {
    if (!events) return;
    std::lock_guard lock(event_mu);
    events(e);
  };

  ExperimentReport report;
  report.experiment = cfg.experiment;
  const std::vector<std::size_t> folds = fold_list(cfg);
  const std::size_t per_fold = cfg.effective_subsets_per_fold();

  // Sessions are processed once; conditions borrow the datasets.
  std::vector<dsp::WindowedDataset> primary, bipolar, quattro;
  std::optional<grid::ElectrodeLayout> bipolar_layout, quattro_layout;
  {
    std::vector<RecordingSession> sessions = load_sessions(cfg.sessions, cfg.workers);
    report.layout = sessions.front().layout;
    for (const auto& s : sessions) primary.push_back(dsp::process_session(s, cfg.process));
    if (cfg.experiment == Experiment::kReference) {
      if (report.layout.name() != grid::build_maize_layout().name() || report.layout.size() != 32) {
        throw Error("reference experiment needs Maize sessions", "config");
      }
      const auto pairing = grid::default_maize_pairing();
      for (const auto& s : sessions) {
        RecordingSession bi = derive_bipolar_session(s, pairing);
        bipolar_layout = bi.layout;
        bipolar.push_back(dsp::process_session(bi, cfg.process));
      }
      if (!cfg.quattro_sessions.empty()) {
        std::vector<RecordingSession> q = load_sessions(cfg.quattro_sessions, cfg.workers);
        quattro_layout = q.front().layout;
        for (const auto& s : q) quattro.push_back(dsp::process_session(s, cfg.process));
      }
    }
  }
  auto ptrs = [](const std::vector<dsp::WindowedDataset>& v) {
    std::vector<const dsp::WindowedDataset*> out;
    for (const auto& d : v) out.push_back(&d);
    return out;
  };
  const grid::ElectrodeLayout& layout = report.layout;

  // Conditions and their jobs. Random subsets are drawn here, in job order,
  // from seeds that depend only on the job coordinates.
  std::vector<Condition> conditions;
  std::vector<Job> jobs;
  auto add_fixed = [&](Condition c, const grid::ChannelSubset& subset) {
    const std::size_t ci = conditions.size();
    c.channel_count = subset.ids.size();
    for (std::size_t s = 0; s < c.data.size(); ++s) {
      for (std::size_t f : folds) jobs.push_back({ci, s, f, 0, subset});
    }
    conditions.push_back(std::move(c));
  };
  auto add_random = [&](Condition c, const std::function<grid::ChannelSubset(std::uint64_t)>& draw) {
    const std::size_t ci = conditions.size();
    std::vector<Job> pending;
    for (std::size_t s = 0; s < c.data.size(); ++s) {
      for (std::size_t f : folds) {
        for (std::size_t j = 0; j < per_fold; ++j) {
          const std::uint64_t seed = derive_seed(cfg.seed, {label_hash(c.label), s, f, j});
          try {
            pending.push_back({ci, s, f, j, draw(seed)});
          } catch (const Error& e) {
            report.warnings.push_back("condition " + c.label + " skipped: " + e.what());
            return;
          }
        }
      }
    }
    jobs.insert(jobs.end(), pending.begin(), pending.end());
    conditions.push_back(std::move(c));
  };

  switch (cfg.experiment) {
    case Experiment::kRegion:
    case Experiment::kAttribution: {
      const std::vector<std::pair<std::string, grid::RegionSelector>> regions =
          cfg.experiment == Experiment::kRegion
              ? std::vector<std::pair<std::string, grid::RegionSelector>>{{"All", grid::RegionSelector::kAll},
                                                                         {"Ext.", grid::RegionSelector::kExtensor},
                                                                         {"Fle.", grid::RegionSelector::kFlexor}}
              : std::vector<std::pair<std::string, grid::RegionSelector>>{{"All", grid::RegionSelector::kAll}};
      for (const auto& [label, sel] : regions) {
        grid::ChannelSubset subset;
        try {
          subset = grid::region_filter(layout, sel);
        } catch (const Error& e) {
          report.warnings.push_back("condition " + label + " skipped: " + e.what());
          continue;
        }
        add_fixed({label, ptrs(primary), &layout}, subset);
      }
      break;
    }
    case Experiment::kReference: {
      add_fixed({"M-mono-32", ptrs(primary), &layout}, grid::region_filter(layout, grid::RegionSelector::kAll));
      Condition m15{"M-mono-15", ptrs(primary), &layout};
      m15.channel_count = 15;
      add_random(m15, [&](std::uint64_t seed) { return grid::sample_split_subset(layout, 8, 7, seed); });
      add_fixed({"M-bi-16", ptrs(bipolar), &*bipolar_layout},
                grid::region_filter(*bipolar_layout, grid::RegionSelector::kAll));
      if (quattro_layout) {
        add_fixed({"Q-bi-15", ptrs(quattro), &*quattro_layout},
                  grid::region_filter(*quattro_layout, grid::RegionSelector::kAll));
      } else {
        report.warnings.push_back("condition Q-bi-15 skipped: no Quattro sessions configured");
      }
      break;
    }
    case Experiment::kChannelCount: {
      for (std::size_t n : cfg.counts) {
        if (n > layout.size()) {
          throw Error("channel count " + std::to_string(n) + " exceeds the " + std::to_string(layout.size()) +
                          " channels of layout " + layout.name(),
                      "config");
        }
      }
      for (std::size_t n : cfg.counts) {
        Condition c{"n=" + std::to_string(n), ptrs(primary), &layout};
        c.channel_count = n;
        add_random(c, [&, n](std::uint64_t seed) {
          return grid::sample_subset(layout, {.n = n, .density = std::nullopt, .seed = seed});
        });
      }
      break;
    }
    case Experiment::kDensity: {
      for (std::size_t n : cfg.density_sizes) {
        for (grid::DensityClass d : cfg.density_levels) {
          Condition c{"n=" + std::to_string(n) + "/" + std::string(grid::to_string(d)), ptrs(primary), &layout};
          c.channel_count = n;
          c.density = d;
          add_random(c, [&, n, d](std::uint64_t seed) {
            return grid::sample_subset(layout, {.n = n, .density = d, .region = cfg.density_region, .seed = seed});
          });
        }
      }
      break;
    }
  }
  if (conditions.empty()) throw Error("no condition could be evaluated", "config");

  // Run every job. Results land in job order regardless of scheduling.
  std::vector<Evaluation> evals(jobs.size());
  std::vector<ImportanceSum> importance(cfg.experiment == Experiment::kAttribution ? jobs.size() : 0);
  const nn::ModelSpec& model = cfg.model;
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t ji) {
    const Job& job = jobs[ji];
    const Condition& cond = conditions[job.condition];
    emit({{"event", "job"}, {"index", ji}, {"of", jobs.size()}, {"condition", cond.label}, {"subject", job.subject},
          {"fold", job.fold}, {"subset_index", job.subset_index}});
    train::CvOptions opts;
    opts.train.epochs = cfg.epochs;
    opts.train.batch_size = static_cast<std::size_t>(cfg.batch_size);
    opts.train.patience = cfg.patience;
    opts.train.adam.lr = cfg.learning_rate;
    opts.train.seed = derive_seed(cfg.seed, {job.subject});
    opts.folds = {job.fold};
    opts.subset_index = job.subset_index;
    if (events) {
      opts.train.on_epoch = [&, ji](const json& rec) {
        json e = rec;
        e["event"] = "epoch";
        e["job"] = ji;
        e["condition"] = cond.label;
        e["subject"] = job.subject;
        emit(e);
      };
    }
    train::FoldModelHook hook;
    if (cfg.experiment == Experiment::kAttribution) {
      hook = [&, ji](const train::FoldResult&, nn::Model& net, const train::FoldData& fd) {
        // First ig_windows_per_class test windows of each class, in window order.
        std::map<int, std::size_t> taken;
        std::vector<std::size_t> chosen;
        for (std::size_t p = 0; p < fd.test.size(); ++p) {
          if (taken[fd.test.label(p)]++ < cfg.ig_windows_per_class) chosen.push_back(p);
        }
        const attr::LogitFn f = attr::logits_of(net);
        const std::size_t c = fd.test.channels(), t = fd.test.length();
        std::vector<MatrixD> attributions;
        std::vector<Gesture> labels;
        for (std::size_t p : chosen) {
          MatrixD x(c, t);
          int label = 0;
          fd.test.fill(std::span(&p, 1), x.data(), std::span(&label, 1));
          attributions.push_back(attr::integrated_gradients(f, x, label, {.steps = cfg.ig_steps}));
          labels.push_back(static_cast<Gesture>(label));
        }
        const auto by = attr::electrode_importance_by_gesture(attributions, labels);
        for (const auto& [g, scores] : by) {
          const auto n = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), g));
          std::vector<double> sum(scores.size());
          for (std::size_t i = 0; i < scores.size(); ++i) sum[i] = scores[i] * static_cast<double>(n);
          importance[ji].by_gesture[g] = {std::move(sum), n};
        }
      };
    }
    train::CvResult r = train::run_cv(*cond.data[job.subject], *cond.layout, job.subset, model, opts, hook);
    Evaluation& e = evals[ji];
    e.condition = cond.label;
    e.subject = job.subject;
    e.fold = job.fold;
    e.subset_index = job.subset_index;
    e.subset = job.subset;
    e.detail = std::move(r.folds.front());
    e.accuracy = e.detail.accuracy;
    if (cond.density) {
      e.density = grid::classify_density(job.subset, *cond.layout);
      e.dist = grid::dist_metric(job.subset, *cond.layout);
      e.fom = grid::fom(e.accuracy, *e.dist);
    }
  });

  // Jobs were generated condition-major then subject, fold, subset, which is
  // already the report order.
  report.evaluations = std::move(evals);
  for (const auto& c : conditions) report.conditions.push_back(c.label);

  std::vector<std::vector<double>> groups(conditions.size());
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    const Condition& c = conditions[ci];
    ConditionSummary s;
    s.condition = c.label;
    std::vector<std::vector<double>> per_subject(c.data.size());
    for (const Evaluation& e : report.evaluations) {
      if (e.condition != c.label) continue;
      groups[ci].push_back(e.accuracy);
      per_subject[e.subject].push_back(e.accuracy);
    }
    s.evaluations = groups[ci].size();
    s.pooled_mean = mean_of(groups[ci]);
    s.pooled_std = sample_std(groups[ci], s.pooled_mean);
    for (const auto& v : per_subject) s.subject_means.push_back(mean_of(v));
    s.subject_mean = mean_of(s.subject_means);
    s.subject_std = sample_std(s.subject_means, s.subject_mean);
    report.summaries.push_back(std::move(s));
  }

  if (cfg.experiment == Experiment::kDensity) {
    json by_size = json::array();
    for (std::size_t n : cfg.density_sizes) {
      std::vector<std::string> labels;
      std::vector<std::vector<double>> level_groups;
      std::vector<double> dist, acc;
      for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
        if (conditions[ci].channel_count != n) continue;
        labels.push_back(conditions[ci].label);
        level_groups.push_back(groups[ci]);
      }
      for (const Evaluation& e : report.evaluations) {
        if (e.subset.ids.size() == n) {
          dist.push_back(*e.dist);
          acc.push_back(e.accuracy);
        }
      }
      json rec = compare_groups(labels, level_groups, cfg.alpha);
      rec["n"] = n;
      rec["regression"] = guarded("pearson-regression", [&] {
        if (dist.size() < 3) throw Error("fewer than 3 points");
        json r = stats::to_json(stats::pearson_regression(dist, acc), dist, acc);
        r["x"] = "dist";
        r["y"] = "accuracy";
        return r;
      });
      by_size.push_back(rec);
    }
    report.statistics["by_size"] = by_size;
  } else if (conditions.size() >= 2) {
    report.statistics = compare_groups(report.conditions, groups, cfg.alpha);
    if (cfg.experiment == Experiment::kChannelCount) {
      const auto largest = std::max_element(conditions.begin(), conditions.end(), [](const auto& a, const auto& b) {
        return a.channel_count < b.channel_count;
      });
      report.statistics["reference_condition"] = largest->label;
    }
  }

  if (cfg.experiment == Experiment::kAttribution) {
    const std::size_t subjects = cfg.sessions.size();
    const std::size_t electrodes = layout.size();
    std::vector<Gesture> gestures{Gesture::kIdle};
    gestures.insert(gestures.end(), kDynamicGestures.begin(), kDynamicGestures.end());
    std::vector<std::vector<double>> all_per_subject(subjects, std::vector<double>(electrodes, 0.0));
    std::vector<std::size_t> all_counts(subjects, 0);
    for (Gesture g : gestures) {
      std::vector<std::vector<double>> per_subject;
      for (std::size_t s = 0; s < subjects; ++s) {
        std::vector<double> sum(electrodes, 0.0);
        std::size_t count = 0;
        for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
          if (jobs[ji].subject != s) continue;
          const auto it = importance[ji].by_gesture.find(g);
          if (it == importance[ji].by_gesture.end()) continue;
          for (std::size_t i = 0; i < electrodes; ++i) sum[i] += it->second.first[i];
          count += it->second.second;
        }
        if (count == 0) continue;
        for (std::size_t i = 0; i < electrodes; ++i) all_per_subject[s][i] += sum[i];
        all_counts[s] += count;
        for (double& v : sum) v /= static_cast<double>(count);
        per_subject.push_back(std::move(sum));
      }
      if (per_subject.empty()) {
        report.warnings.push_back("no test windows for gesture " + std::string(to_string(g)));
        continue;
      }
      report.importance.push_back({std::string(to_string(g)), attr::normalize_and_average(per_subject)});
    }
    std::vector<std::vector<double>> all;
    for (std::size_t s = 0; s < subjects; ++s) {
      if (all_counts[s] == 0) continue;
      for (double& v : all_per_subject[s]) v /= static_cast<double>(all_counts[s]);
      all.push_back(all_per_subject[s]);
    }
    if (!all.empty()) report.importance.push_back({"all", attr::normalize_and_average(all)});
  }

  const std::size_t expected = [&] {
    std::size_t total = 0;
    for (const Condition& c : conditions) {
      const bool random = cfg.experiment == Experiment::kChannelCount || cfg.experiment == Experiment::kDensity ||
                          c.label == "M-mono-15";
      total += c.data.size() * folds.size() * (random ? per_fold : 1);
    }
    return total;
  }();
  if (report.evaluations.size() != expected) throw Error("internal: evaluation count mismatch");

  json resolved = to_json(cfg);
  resolved["isa"] = std::string(kernels::isa_name(isa));
  report.provenance = {{"software", {{"name", "wemg"}, {"version", kSoftwareVersion}}},
                       {"seed", cfg.seed},
                       {"isa", kernels::isa_name(isa)},
                       {"fast", cfg.fast},
                       {"subsets_per_fold", per_fold},
                       {"config", resolved},
                       {"execution", {{"workers", cfg.workers}}}};
  return report;
}

}  // namespace wemg::exp
