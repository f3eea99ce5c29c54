// Copyright 2026 The segqc Authors.
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

#include "segqc/engine/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "segqc/core/io.hpp"
#include "segqc/util/error.hpp"
#include "segqc/util/parallel.hpp"

namespace segqc::engine {

namespace {

nlohmann::json mean_std_json(const metrics::MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

std::optional<double> try_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return std::nullopt;
  try {
    return metrics::pearson_r(a, b);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNumericalFailure) throw;
    return std::nullopt;
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

Predictor oracle_predictor(double nsd_tolerance) {
  return [nsd_tolerance](const EvalInput& in) {
    model::QCPrediction p;
    const auto q = metrics::quality(in.query, in.gt, nsd_tolerance);
    p.dsc_pred = q.dsc;
    p.nsd_pred = q.nsd;
    p.classes = in.gt.hierarchy().num_classes();
    p.grid = in.gt.grid();
    const auto sem = metrics::sem_ground_truth(in.query, in.gt);
    p.sem_prob.assign(sem.data().begin(), sem.data().end());
    return p;
  };
}

Predictor constant_predictor(double value) {
  return [value](const EvalInput& in) {
    model::QCPrediction p;
    p.dsc_pred = value;
    p.nsd_pred = value;
    p.classes = in.gt.hierarchy().num_classes();
    p.grid = in.gt.grid();
    p.sem_prob.assign(static_cast<std::size_t>(p.classes) * p.grid.voxels(), 0.0f);
    return p;
  };
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < r.dsc_sem_per_class.size(); ++c)
    per_class[r.class_names[c]] = mean_std_json(r.dsc_sem_per_class[c]);
  nlohmann::json scatter{{"seg_id", nlohmann::json::array()},  {"gt_dsc", nlohmann::json::array()},
                         {"pred_dsc", nlohmann::json::array()}, {"gt_nsd", nlohmann::json::array()},
                         {"pred_nsd", nlohmann::json::array()}};
  for (const auto& row : r.rows) {
    scatter["seg_id"].push_back(row.seg_id);
    scatter["gt_dsc"].push_back(row.gt_dsc);
    scatter["pred_dsc"].push_back(row.pred_dsc);
    scatter["gt_nsd"].push_back(row.gt_nsd);
    scatter["pred_nsd"].push_back(row.pred_nsd);
  }
  j = nlohmann::json{{"schema_version", 1},
                     {"dataset", r.dataset},
                     {"n", r.n},
                     {"pearson_r_dsc", opt(r.pearson_r_dsc)},
                     {"pearson_r_nsd", opt(r.pearson_r_nsd)},
                     {"mae_dsc", mean_std_json(r.mae_dsc)},
                     {"mae_nsd", mean_std_json(r.mae_nsd)},
                     {"dsc_sem", {{"per_class", per_class}, {"mean", mean_std_json(r.dsc_sem_mean)}}},
                     {"scatter", scatter},
                     {"errors", r.errors},
                     {"integrity_ok", r.integrity_ok},
                     {"flags", r.flags}};
}

EvalReport evaluate(const datagen::DatasetManifest& manifest, const datagen::BalancedIndex& index,
                    const Predictor& predictor, int workers, const std::string& dataset) {
  if (index.mode != datagen::BalanceMode::kDeterministic)
    fail_config("evaluation needs a balanced index built in deterministic mode");
  const auto& h = manifest.hierarchy;
  const int C = h.num_classes();

  EvalReport report;
  report.dataset = dataset;
  for (const auto& c : h.classes()) report.class_names.push_back(c.name);

  // Group the selected ids by case so each image is read once.
  struct Job {
    const datagen::CaseEntry* c;
    std::vector<std::pair<std::size_t, const datagen::SegEntry*>> segs;
  };
  std::vector<Job> jobs;
  std::map<const datagen::CaseEntry*, std::size_t> job_of;
  std::vector<std::optional<EvalRow>> rows(index.selected.size());
  std::vector<std::string> row_error(index.selected.size());
  for (std::size_t i = 0; i < index.selected.size(); ++i) {
    const auto ref = manifest.find(index.selected[i]);
    if (!ref) {
      row_error[i] = index.selected[i] + ": not in manifest";
      continue;
    }
    auto [it, inserted] = job_of.try_emplace(ref->case_entry, jobs.size());
    if (inserted) jobs.push_back({ref->case_entry, {}});
    jobs[it->second].segs.push_back({i, ref->seg});
  }

  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const auto& job = jobs[j];
    std::optional<Volume> image;
    std::optional<LabelMask> gt;
    try {
      for (const auto& rel : {job.c->image, job.c->gt})
        if (!std::filesystem::exists(manifest.root / rel)) fail_data("missing file " + rel);
      image.emplace(manifest.load_image(*job.c));
      gt.emplace(manifest.load_gt(*job.c));
    } catch (const Error& e) {
      for (const auto& [i, s] : job.segs) row_error[i] = s->seg_id + ": " + e.what();
      return;
    }
    for (const auto& [i, s] : job.segs) {
      try {
        if (!std::filesystem::exists(manifest.root / s->path)) fail_data("missing file " + s->path);
        const auto query = manifest.load_seg(*s);
        const auto p = predictor({*job.c, *s, *image, query, *gt});
        if (p.classes != C || p.sem_prob.size() != static_cast<std::size_t>(C) * gt->grid().voxels())
          fail_data("prediction has the wrong SEM shape");
        std::vector<std::uint8_t> bin(p.sem_prob.size());
        for (std::size_t v = 0; v < bin.size(); ++v) bin[v] = p.sem_prob[v] >= 0.5f ? 1 : 0;
        const SEMStack pred_sem(gt->grid(), std::move(bin), h);
        const auto sd = metrics::dsc_sem(pred_sem, metrics::sem_ground_truth(query, *gt));
        rows[i] = EvalRow{s->seg_id, job.c->case_id, s->dsc, s->nsd, p.dsc_pred, p.nsd_pred, sd.per_class};
      } catch (const Error& e) {
        row_error[i] = s->seg_id + ": " + e.what();
      }
    }
  });

  std::vector<double> pd, gd, pn, gn, mean_sem;
  std::vector<std::vector<double>> per_class(C);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]) {
      report.errors.push_back(row_error[i]);
      continue;
    }
    const auto& r = *rows[i];
    pd.push_back(r.pred_dsc);
    gd.push_back(r.gt_dsc);
    pn.push_back(r.pred_nsd);
    gn.push_back(r.gt_nsd);
    double m = 0.0;
    for (int c = 0; c < C; ++c) {
      per_class[c].push_back(r.dsc_sem[c]);
      m += r.dsc_sem[c] / C;
    }
    mean_sem.push_back(m);
    report.rows.push_back(r);
  }
  report.n = report.rows.size();
  report.integrity_ok = report.errors.empty();
  if (!report.integrity_ok)
    report.flags.push_back("incomplete: " + std::to_string(report.errors.size()) + " of " +
                           std::to_string(index.selected.size()) + " queries could not be evaluated");
  if (report.n == 0) {
    report.flags.push_back("no queries evaluated");
    report.dsc_sem_per_class.assign(C, {});
    return report;
  }
  report.pearson_r_dsc = try_pearson(pd, gd);
  report.pearson_r_nsd = try_pearson(pn, gn);
  if (!report.pearson_r_dsc) report.flags.push_back("pearson_r_dsc undefined: constant or too few values");
  if (!report.pearson_r_nsd) report.flags.push_back("pearson_r_nsd undefined: constant or too few values");
  report.mae_dsc = metrics::mae(pd, gd);
  report.mae_nsd = metrics::mae(pn, gn);
  for (int c = 0; c < C; ++c) report.dsc_sem_per_class.push_back(metrics::mean_std(per_class[c]));
  report.dsc_sem_mean = metrics::mean_std(mean_sem);
  return report;
}

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "report.json", nlohmann::json(report).dump(2) + "\n");
  std::string csv = "seg_id,case_id,gt_dsc,pred_dsc,gt_nsd,pred_nsd";
  for (const auto& name : report.class_names) csv += ",dsc_sem_" + name;
  csv += "\n";
  for (const auto& r : report.rows) {
    csv += r.seg_id + "," + r.case_id + "," + fmt(r.gt_dsc) + "," + fmt(r.pred_dsc) + "," + fmt(r.gt_nsd) + "," +
           fmt(r.pred_nsd);
    for (double v : r.dsc_sem) csv += "," + fmt(v);
    csv += "\n";
  }
  io::write_text(dir / "rows.csv", csv);
}

}  // namespace segqc::engine
