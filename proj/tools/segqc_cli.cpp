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

// segqc command-line interface.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "segqc/core/encoding.hpp"
#include "segqc/core/io.hpp"
#include "segqc/datagen/balance.hpp"
#include "segqc/datagen/dataset.hpp"
#include "segqc/datagen/manifest.hpp"
#include "segqc/datagen/phantom.hpp"
#include "segqc/engine/ensemble.hpp"
#include "segqc/engine/evaluate.hpp"
#include "segqc/engine/folds.hpp"
#include "segqc/engine/train.hpp"
#include "segqc/explain/grad_cam.hpp"
#include "segqc/losses/losses.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/model/qcresunet.hpp"
#include "segqc/proxyseg/proxyseg.hpp"
#include "segqc/ue_baseline/pipeline.hpp"
#include "segqc/util/error.hpp"
#include "segqc/util/rng.hpp"

namespace fs = std::filesystem;
using namespace segqc;
using nlohmann::json;

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitDataError = 3;
constexpr int kExitNumerical = 4;

json read_json(const fs::path& path) {
  if (!fs::exists(path)) fail_config("config file not found: " + path.string());
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    fail_config(path.string() + ": " + e.what());
  }
}

template <class T>
T config_from(const std::string& path) {
  if (path.empty()) return T{};
  try {
    return read_json(path).get<T>();
  } catch (const json::exception& e) {
    fail_config(path + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_text(path, j.dump(2) + "\n");
}

// Comma-separated list, or "@file" with one entry per line or comma.
std::vector<std::string> parse_list(const std::string& spec) {
  std::string text = spec;
  if (!spec.empty() && spec[0] == '@') text = io::read_text(spec.substr(1));
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',' || ch == '\n' || ch == '\r') {
      const auto b = cur.find_first_not_of(" \t"), e = cur.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

std::vector<int> parse_ints(const std::string& spec) {
  std::vector<int> out;
  for (const auto& s : parse_list(spec)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
      fail_config("not an integer: '" + s + "'");
    }
  }
  return out;
}

// Case list from --cases; every id must exist in the manifest.
std::vector<std::string> case_list(const datagen::DatasetManifest& m, const std::string& spec) {
  auto ids = parse_list(spec);
  for (const auto& id : ids)
    if (std::none_of(m.cases.begin(), m.cases.end(), [&](const auto& c) { return c.case_id == id; }))
      fail_data("case " + id + " is not in the dataset");
  return ids;
}

ClassHierarchy hierarchy_preset(const std::string& name) {
  if (name == "brats") return ClassHierarchy::brats();
  if (name == "cardiac") return ClassHierarchy::cardiac();
  if (name == "binary") return ClassHierarchy::binary();
  fail_config("unknown hierarchy '" + name + "' (brats, cardiac, binary)");
}

// Timestamps go here only, so every other output is reproducible.
void append_run_log(const fs::path& dir, const std::string& command) {
  fs::create_directories(dir);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::ofstream(dir / "run.log", std::ios::app) << stamp << " " << command << "\n";
}

std::vector<model::QCResUNet> load_checkpoints(const std::vector<std::string>& dirs) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  return engine::load_ensemble(paths);
}

std::vector<const model::QCResUNet*> pointers(const std::vector<model::QCResUNet>& nets) {
  std::vector<const model::QCResUNet*> out;
  for (const auto& n : nets) out.push_back(&n);
  return out;
}

// UMaps are cached on disk under SEGQC_CACHE, keyed on proxy weights, T and seed.
std::optional<fs::path> umap_cache_dir(const fs::path& proxy_dir, int T, std::uint64_t seed) {
  const char* root = std::getenv("SEGQC_CACHE");
  if (root == nullptr || *root == '\0') return std::nullopt;
  const std::string weights = io::read_text(proxy_dir / "weights.bin");
  const std::uint64_t key = derive_seed(derive_seed(hash_id(weights), static_cast<std::uint64_t>(T)), seed);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(key));
  return fs::path(root) / "umaps" / hex;
}

void print_report_summary(const engine::EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("undefined"); };
  std::printf("n %zu  r(DSC) %s  r(NSD) %s  MAE(DSC) %.4f +- %.4f  MAE(NSD) %.4f +- %.4f  DSC_SEM %.4f\n", r.n,
              opt(r.pearson_r_dsc).c_str(), opt(r.pearson_r_nsd).c_str(), r.mae_dsc.mean, r.mae_dsc.std,
              r.mae_nsd.mean, r.mae_nsd.std, r.dsc_sem_mean.mean);
  for (const auto& f : r.flags) std::printf("flag: %s\n", f.c_str());
  for (const auto& e : r.errors) std::printf("error: %s\n", e.c_str());
}

// ---- subcommands ----

struct SynthArgs {
  std::string spec, out;
  int count = 0;
  std::uint64_t seed = 0;
  int workers = 1;
};

void run_synth(const SynthArgs& a) {
  const auto spec = a.spec.empty() ? datagen::PhantomSpec{} : datagen::phantom_spec_from_json(read_json(a.spec));
  const auto m = datagen::synthesize_dataset(spec, a.out, a.count, a.seed, a.workers);
  std::printf("wrote %zu cases to %s\n", m.cases.size(), a.out.c_str());
}

struct DegradeArgs {
  std::string dataset, seggen, snapshots, proxy;
  double snapshot_lr = 1e-3;
  int seggen_per_snapshot = 0;
  std::uint64_t seed = 0;
  int workers = 1;
};

void run_degrade(const DegradeArgs& a) {
  auto m = datagen::DatasetManifest::load(a.dataset);
  datagen::DegradeOptions o;
  o.seggen = config_from<datagen::SegGenParams>(a.seggen);
  if (!a.snapshots.empty()) o.snapshot_epochs = parse_ints("@" + a.snapshots);
  o.snapshot_lr = a.snapshot_lr;
  o.proxy = config_from<proxyseg::ProxySegConfig>(a.proxy);
  if (a.proxy.empty()) o.proxy.modalities = m.modalities;
  o.seggen_per_snapshot = a.seggen_per_snapshot;
  o.seed = a.seed;
  o.workers = a.workers;
  datagen::degrade_dataset(m, o);
  std::size_t n = 0;
  for (const auto& c : m.cases) n += c.segs.size();
  std::printf("%zu query segmentations over %zu cases\n", n, m.cases.size());
}

struct BalanceArgs {
  std::string dataset, mode = "eval", cases, out;
  int bins = 10;
  std::uint64_t seed = 0;
};

void run_balance(const BalanceArgs& a) {
  const auto m = datagen::DatasetManifest::load(a.dataset);
  datagen::BalanceMode mode;
  if (a.mode == "train") mode = datagen::BalanceMode::kStochastic;
  else if (a.mode == "eval") mode = datagen::BalanceMode::kDeterministic;
  else fail_config("--mode must be train or eval");
  const auto idx = datagen::build_balanced_index(m.quality_records(case_list(m, a.cases)), a.bins, mode, a.seed);
  const fs::path out = a.out.empty() ? fs::path(a.dataset) / ("index_" + a.mode + ".json") : fs::path(a.out);
  write_json(out, idx);
  std::printf("n_s %zu per bin, %zu ids indexed -> %s\n", idx.n_s, idx.seg_ids.size(), out.c_str());
}

struct TrainArgs {
  std::string dataset, index, val_index, config, loss, model, out, sweep;
  std::uint64_t seed_model = 0;
};

void train_one(const TrainArgs& a, const engine::TrainData& data,
               const std::vector<engine::Triple>& val, const engine::TrainConfig& cfg, const losses::LossConfig& loss,
               model::QCResUNetConfig mc, const fs::path& out) {
  model::QCResUNet net(mc, a.seed_model);
  engine::TrainOptions opts;
  opts.out_dir = out;
  opts.on_epoch = [](const engine::EpochRecord& r) {
    std::printf("epoch %d lr %.3g loss %.5f val r(DSC) %.4f r(NSD) %.4f\n", r.epoch, r.lr, r.train_loss, r.val_r_dsc,
                r.val_r_nsd);
    std::fflush(stdout);
  };
  const auto res = engine::train(net, data, val, cfg, loss, opts);
  write_json(out / "model_config.json", mc);
  std::printf("best epoch %d -> %s\n", res.best_epoch, (out / "best").c_str());
}

void run_train(const TrainArgs& a) {
  const auto m = datagen::DatasetManifest::load(a.dataset);
  const auto index = read_json(a.index).get<datagen::BalancedIndex>();
  const auto data = engine::load_training_data(m, index);
  std::vector<engine::Triple> val;
  if (!a.val_index.empty()) {
    const auto vi = read_json(a.val_index).get<datagen::BalancedIndex>();
    if (vi.mode != datagen::BalanceMode::kDeterministic) fail_config("--val-index must be an eval (deterministic) index");
    val = engine::load_training_data(m, vi).triples;
  }
  json train_cfg = a.config.empty() ? json(engine::TrainConfig{}) : read_json(a.config);
  const auto loss = config_from<losses::LossConfig>(a.loss);
  auto mc = a.model.empty() ? model::QCResUNetConfig::brain(m.modalities, m.hierarchy.num_classes())
                            : config_from<model::QCResUNetConfig>(a.model);
  if (mc.modalities != m.modalities || mc.num_sem_classes != m.hierarchy.num_classes())
    fail_config("model config does not match the dataset's modalities or class count");
  const fs::path out = a.out;
  if (a.sweep.empty()) {
    train_one(a, data, val, train_cfg.get<engine::TrainConfig>(), loss, mc, out);
    return;
  }
  const auto grid = engine::expand_grid(train_cfg, read_json(a.sweep));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const fs::path run = out / ("run_" + std::to_string(i));
    std::printf("sweep run %zu/%zu: %s\n", i + 1, grid.size(), grid[i].dump().c_str());
    train_one(a, data, val, grid[i].get<engine::TrainConfig>(), loss, mc, run);
  }
}

struct EvalArgs {
  std::string dataset, index, out, name;
  std::vector<std::string> ckpts;
  bool oracle = false;
  int workers = 1;
};

void run_eval(const EvalArgs& a) {
  const auto m = datagen::DatasetManifest::load(a.dataset);
  const auto index = read_json(a.index).get<datagen::BalancedIndex>();
  std::vector<model::QCResUNet> nets;
  engine::Predictor predictor;
  if (a.oracle) {
    if (!a.ckpts.empty()) fail_config("--oracle and --ckpt are exclusive");
    predictor = engine::oracle_predictor(m.nsd_tolerance);
  } else {
    if (a.ckpts.empty()) fail_config("eval needs --ckpt (one or more) or --oracle");
    nets = load_checkpoints(a.ckpts);
    predictor = engine::ensemble_predictor(pointers(nets));
  }
  const auto report = engine::evaluate(m, index, predictor, a.workers, a.name.empty() ? a.dataset : a.name);
  engine::write_report(a.out, report);
  print_report_summary(report);
}

struct PredictArgs {
  std::vector<std::string> ckpts;
  std::string image, mask, out, oracle_gt, hierarchy = "brats";
};

void run_predict(const PredictArgs& a) {
  const auto h = hierarchy_preset(a.hierarchy);
  const auto query = io::read_mask(a.mask, h);
  model::QCPrediction pred;
  if (!a.oracle_gt.empty()) {
    if (!a.ckpts.empty()) fail_config("--oracle-gt and --ckpt are exclusive");
    const auto gt = io::read_mask(a.oracle_gt, h);
    if (!(gt.grid() == query.grid())) fail_data("mask and ground truth grids differ");
    const auto q = metrics::quality(query, gt);
    const auto sem = metrics::sem_ground_truth(query, gt);
    pred = {q.dsc, q.nsd, h.num_classes(), query.grid(), std::vector<float>(sem.data().begin(), sem.data().end())};
  } else {
    if (a.ckpts.empty()) fail_config("predict needs --ckpt (one or more) or --oracle-gt");
    const auto image = io::read_volume(a.image);
    if (!(image.grid() == query.grid())) fail_data("image and mask grids differ");
    const auto nets = load_checkpoints(a.ckpts);
    pred = engine::ensemble_predict(pointers(nets), image, query);
  }
  std::vector<std::uint8_t> bits(pred.sem_prob.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = pred.sem_prob[i] >= 0.5f ? 1 : 0;
  const SEMStack sem(query.grid(), bits, h);
  const auto recomposed = to_multiclass(BinaryMaskStack(query.grid(), bits, h));
  const fs::path out = a.out;
  fs::create_directories(out);
  io::write_channels(out / "sem.nii.gz", sem, query.spacing());
  io::write_mask(out / "error_mask.nii.gz", recomposed.mask);
  json counts = json::object();
  for (int c = 0; c < h.num_classes(); ++c) counts[h.classes()[c].name] = sem.count(c);
  write_json(out / "pred.json", {{"schema_version", 1},
                                 {"dsc", pred.dsc_pred},
                                 {"nsd", pred.nsd_pred},
                                 {"sem_voxels", counts},
                                 {"error_mask_inconsistent_voxels", recomposed.inconsistent_voxels},
                                 {"members", a.ckpts.size()},
                                 {"oracle", !a.oracle_gt.empty()}});
  std::printf("dsc %.4f nsd %.4f\n", pred.dsc_pred, pred.nsd_pred);
}

struct ProxyTrainArgs {
  std::string dataset, cases, config, out;
  int epochs = 10;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

void run_proxy_train(const ProxyTrainArgs& a) {
  const auto m = datagen::DatasetManifest::load(a.dataset);
  const auto ids = case_list(m, a.cases);
  std::vector<Volume> images;
  std::vector<LabelMask> gts;
  for (const auto& c : m.cases) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), c.case_id) == ids.end()) continue;
    images.push_back(m.load_image(c));
    gts.push_back(m.load_gt(c));
  }
  if (images.empty()) fail_data("no cases to train the proxy segmenter on");
  std::vector<proxyseg::Example> ex;
  for (std::size_t i = 0; i < images.size(); ++i) ex.push_back({&images[i], &gts[i]});
  auto cfg = config_from<proxyseg::ProxySegConfig>(a.config);
  if (a.config.empty()) cfg.modalities = m.modalities;
  proxyseg::ProxySegmenter seg(cfg, m.hierarchy, a.seed);
  proxyseg::TrainOptions opts;
  opts.epochs = a.epochs;
  opts.lr = a.lr;
  opts.seed = derive_seed(a.seed, 1);
  opts.on_epoch = [](int e, double loss) {
    std::printf("epoch %d loss %.5f\n", e, loss);
    std::fflush(stdout);
  };
  seg.train(ex, opts);
  seg.save(a.out);
  std::printf("proxy segmenter -> %s\n", a.out.c_str());
}

struct UECalibrateArgs {
  std::string dataset, cases, proxy, options, out;
  std::uint64_t seed = 0;
  int workers = 1;
};

void run_ue_calibrate(const UECalibrateArgs& a) {
  const auto m = datagen::DatasetManifest::load(a.dataset);
  auto opts = config_from<ue_baseline::UEOptions>(a.options);
  opts.seed = a.seed;
  opts.workers = a.workers;
  const auto seg = proxyseg::ProxySegmenter::load(a.proxy);
  ue_baseline::UMapCache cache(seg, opts.mc_samples, opts.seed, umap_cache_dir(a.proxy, opts.mc_samples, opts.seed));
  ue_baseline::UEFitReport fit;
  auto model = ue_baseline::fit_ue_baseline(m, case_list(m, a.cases), cache, opts, &fit);
  model.calibration.dataset_id = a.dataset;
  model.save(a.out);
  write_json(fs::path(a.out) / "thresholds.json", model.calibration);
  ue_baseline::write_features_csv(fs::path(a.out) / "features.csv", fit.seg_ids, fit.features, m.hierarchy);
  for (std::size_t c = 0; c < model.calibration.thresholds.size(); ++c)
    std::printf("%s: threshold %.2f overlap %.4f\n", m.hierarchy.classes()[c].name.c_str(),
                model.calibration.thresholds[c], model.calibration.mean_overlap[c]);
  for (const auto& f : model.regressor.flags) std::printf("flag: %s\n", f.c_str());
}

struct UEEvalArgs {
  std::string dataset, index, ue, proxy, out, name;
  int workers = 1;
};

void run_ue_eval(const UEEvalArgs& a) {
  const auto m = datagen::DatasetManifest::load(a.dataset);
  const auto index = read_json(a.index).get<datagen::BalancedIndex>();
  const auto model = ue_baseline::UEModel::load(a.ue);
  const auto seg = proxyseg::ProxySegmenter::load(a.proxy);
  const auto& o = model.options;
  ue_baseline::UMapCache cache(seg, o.mc_samples, o.seed, umap_cache_dir(a.proxy, o.mc_samples, o.seed));
  const auto report = engine::evaluate(m, index, ue_baseline::ue_predictor(model, cache, m.hierarchy), a.workers,
                                       a.name.empty() ? a.dataset : a.name);
  engine::write_report(a.out, report);
  print_report_summary(report);
}

struct ExplainArgs {
  std::string ckpt, image, mask, target = "dsc", layer = "block4", out, hierarchy = "brats";
};

void run_explain(const ExplainArgs& a) {
  const auto h = hierarchy_preset(a.hierarchy);
  const auto net = model::QCResUNet::load(a.ckpt);
  const auto image = io::read_volume(a.image);
  const auto query = io::read_mask(a.mask, h);
  const auto target = explain::cam_target_from_string(a.target);
  const auto cam = explain::grad_cam(net, image, query, target, a.layer);
  std::string stem = a.out;
  for (const std::string ext : {".nii.gz", ".nii"})
    if (stem.size() > ext.size() && stem.compare(stem.size() - ext.size(), ext.size(), ext) == 0) {
      stem.resize(stem.size() - ext.size());
      break;
    }
  if (fs::path(stem).has_parent_path()) fs::create_directories(fs::path(stem).parent_path());
  explain::write_grad_cam(stem, cam, a.layer, target, image.spacing());
  for (const auto& w : cam.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("heatmap -> %s.nii.gz\n", stem.c_str());
}

struct ReportArgs {
  std::string in;
  bool plots = false;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(io::read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

void run_report(const ReportArgs& a) {
  const fs::path dir = a.in;
  const auto report = read_json(dir / "report.json");
  auto show = [](const json& v) { return v.is_null() ? std::string("undefined") : std::to_string(v.get<double>()); };
  std::printf("dataset %s  n %zu\n", report.at("dataset").get<std::string>().c_str(), report.at("n").get<std::size_t>());
  std::printf("r(DSC) %s  r(NSD) %s\n", show(report.at("pearson_r_dsc")).c_str(), show(report.at("pearson_r_nsd")).c_str());
  std::printf("MAE(DSC) %.4f +- %.4f  MAE(NSD) %.4f +- %.4f\n", report["mae_dsc"]["mean"].get<double>(),
              report["mae_dsc"]["std"].get<double>(), report["mae_nsd"]["mean"].get<double>(),
              report["mae_nsd"]["std"].get<double>());
  for (const auto& [name, ms] : report["dsc_sem"]["per_class"].items())
    std::printf("DSC_SEM %s %.4f +- %.4f\n", name.c_str(), ms["mean"].get<double>(), ms["std"].get<double>());
  if (!a.plots) return;

  const auto rows = read_csv(dir / "rows.csv");
  if (rows.empty()) fail_data("rows.csv is empty");
  const auto& header = rows.front();
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail_data("rows.csv lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const fs::path plots = dir / "plots";
  fs::create_directories(plots);
  for (const std::string metric : {"dsc", "nsd"}) {
    const auto g = column("gt_" + metric), p = column("pred_" + metric);
    std::string scatter = "seg_id,gt_" + metric + ",pred_" + metric + "\n";
    std::vector<int> hist_gt(10, 0), hist_pred(10, 0), hist_err(10, 0);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const double gv = std::stod(rows[r][g]), pv = std::stod(rows[r][p]);
      scatter += rows[r][0] + "," + rows[r][g] + "," + rows[r][p] + "\n";
      ++hist_gt[datagen::quality_bin(std::clamp(gv, 0.0, 1.0))];
      ++hist_pred[datagen::quality_bin(std::clamp(pv, 0.0, 1.0))];
      ++hist_err[datagen::quality_bin(std::min(1.0, std::abs(gv - pv)))];
    }
    io::write_text(plots / ("scatter_" + metric + ".csv"), scatter);
    std::string hist = "bin_lo,bin_hi,gt_count,pred_count,abs_error_count\n";
    for (int b = 0; b < 10; ++b) {
      char line[96];
      std::snprintf(line, sizeof line, "%.1f,%.1f,%d,%d,%d\n", b / 10.0, (b + 1) / 10.0, hist_gt[b], hist_pred[b],
                    hist_err[b]);
      hist += line;
    }
    io::write_text(plots / ("hist_" + metric + ".csv"), hist);
  }
  std::string sem = "bin_lo,bin_hi";
  std::vector<std::size_t> sem_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c].rfind("dsc_sem_", 0) == 0) {
      sem_cols.push_back(c);
      sem += "," + header[c];
    }
  sem += "\n";
  std::vector<std::vector<int>> counts(sem_cols.size(), std::vector<int>(10, 0));
  for (std::size_t r = 1; r < rows.size(); ++r)
    for (std::size_t k = 0; k < sem_cols.size(); ++k)
      ++counts[k][datagen::quality_bin(std::clamp(std::stod(rows[r][sem_cols[k]]), 0.0, 1.0))];
  for (int b = 0; b < 10; ++b) {
    char line[32];
    std::snprintf(line, sizeof line, "%.1f,%.1f", b / 10.0, (b + 1) / 10.0);
    sem += line;
    for (const auto& c : counts) sem += "," + std::to_string(c[b]);
    sem += "\n";
  }
  io::write_text(plots / "hist_dsc_sem.csv", sem);
  std::printf("plot data -> %s\n", plots.c_str());
}

void emit_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << std::endl;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segqc: segmentation quality control"};
  app.require_subcommand(1);
  std::optional<fs::path> log_dir;
  std::function<void()> action;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a phantom dataset");
  s->add_option("--spec", synth.spec, "phantom spec JSON");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--count", synth.count, "number of cases")->required();
  s->add_option("--seed", synth.seed, "master seed")->required();
  s->add_option("--workers", synth.workers, "worker threads");
  s->callback([&] {
    log_dir = synth.out;
    action = [&] { run_synth(synth); };
  });

  DegradeArgs degrade;
  auto* d = app.add_subcommand("degrade", "add query segmentations to a dataset");
  d->add_option("--dataset", degrade.dataset)->required();
  d->add_option("--seggen", degrade.seggen, "SegGen params JSON");
  d->add_option("--snapshots", degrade.snapshots, "file listing snapshot epochs");
  d->add_option("--snapshot-lr", degrade.snapshot_lr);
  d->add_option("--seggen-per-snapshot", degrade.seggen_per_snapshot);
  d->add_option("--proxy", degrade.proxy, "proxy segmenter config JSON");
  d->add_option("--seed", degrade.seed)->required();
  d->add_option("--workers", degrade.workers);
  d->callback([&] {
    log_dir = degrade.dataset;
    action = [&] { run_degrade(degrade); };
  });

  BalanceArgs balance;
  auto* b = app.add_subcommand("balance", "build a DSC-balanced index");
  b->add_option("--dataset", balance.dataset)->required();
  b->add_option("--bins", balance.bins);
  b->add_option("--mode", balance.mode, "train (stochastic) or eval (deterministic)")->required();
  b->add_option("--cases", balance.cases, "case ids, comma list or @file");
  b->add_option("--out", balance.out, "index file (default DATASET/index_MODE.json)");
  b->add_option("--seed", balance.seed)->required();
  b->callback([&] {
    log_dir = balance.dataset;
    action = [&] { run_balance(balance); };
  });

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train a quality-control network");
  t->add_option("--dataset", train.dataset)->required();
  t->add_option("--index", train.index, "training index")->required();
  t->add_option("--val-index", train.val_index, "validation index (eval mode)");
  t->add_option("--config", train.config, "training config JSON");
  t->add_option("--loss", train.loss, "loss config JSON");
  t->add_option("--model", train.model, "model config JSON");
  t->add_option("--sweep", train.sweep, "grid of training config overrides JSON");
  t->add_option("--model-seed", train.seed_model, "weight initialisation seed");
  t->add_option("--out", train.out)->required();
  t->callback([&] {
    log_dir = train.out;
    action = [&] { run_train(train); };
  });

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate checkpoints on a balanced index");
  e->add_option("--dataset", eval.dataset)->required();
  e->add_option("--index", eval.index)->required();
  e->add_option("--ckpt", eval.ckpts, "checkpoint directories (ensemble when several)");
  e->add_flag("--oracle", eval.oracle, "predict the true scores");
  e->add_option("--name", eval.name, "dataset label in the report");
  e->add_option("--workers", eval.workers);
  e->add_option("--out", eval.out)->required();
  e->callback([&] {
    log_dir = eval.out;
    action = [&] { run_eval(eval); };
  });

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "score one segmentation");
  p->add_option("--ckpt", predict.ckpts, "checkpoint directories");
  p->add_option("--image", predict.image);
  p->add_option("--mask", predict.mask)->required();
  p->add_option("--oracle-gt", predict.oracle_gt, "bypass the network and score against this ground truth");
  p->add_option("--hierarchy", predict.hierarchy, "brats, cardiac or binary");
  p->add_option("--out", predict.out)->required();
  p->callback([&] {
    log_dir = predict.out;
    action = [&] { run_predict(predict); };
  });

  ProxyTrainArgs proxy;
  auto* pt = app.add_subcommand("proxy-train", "train the proxy segmenter used by the UE baseline");
  pt->add_option("--dataset", proxy.dataset)->required();
  pt->add_option("--cases", proxy.cases, "case ids, comma list or @file");
  pt->add_option("--config", proxy.config, "proxy segmenter config JSON");
  pt->add_option("--epochs", proxy.epochs);
  pt->add_option("--lr", proxy.lr);
  pt->add_option("--seed", proxy.seed)->required();
  pt->add_option("--out", proxy.out)->required();
  pt->callback([&] {
    log_dir = proxy.out;
    action = [&] { run_proxy_train(proxy); };
  });

  UECalibrateArgs uec;
  auto* uc = app.add_subcommand("ue-calibrate", "calibrate UE thresholds and fit the score regressor");
  uc->add_option("--dataset", uec.dataset)->required();
  uc->add_option("--cases", uec.cases, "calibration case ids, comma list or @file");
  uc->add_option("--proxy", uec.proxy, "proxy segmenter checkpoint")->required();
  uc->add_option("--options", uec.options, "UE options JSON");
  uc->add_option("--seed", uec.seed)->required();
  uc->add_option("--workers", uec.workers);
  uc->add_option("--out", uec.out)->required();
  uc->callback([&] {
    log_dir = uec.out;
    action = [&] { run_ue_calibrate(uec); };
  });

  UEEvalArgs uee;
  auto* ue = app.add_subcommand("ue-eval", "evaluate the UE baseline");
  ue->add_option("--dataset", uee.dataset)->required();
  ue->add_option("--index", uee.index)->required();
  ue->add_option("--ue", uee.ue, "ue-calibrate output directory")->required();
  ue->add_option("--proxy", uee.proxy, "proxy segmenter checkpoint")->required();
  ue->add_option("--name", uee.name, "dataset label in the report");
  ue->add_option("--workers", uee.workers);
  ue->add_option("--out", uee.out)->required();
  ue->callback([&] {
    log_dir = uee.out;
    action = [&] { run_ue_eval(uee); };
  });

  ExplainArgs expl;
  auto* x = app.add_subcommand("explain", "Grad-CAM heatmap for a predicted score");
  x->add_option("--ckpt", expl.ckpt)->required();
  x->add_option("--image", expl.image)->required();
  x->add_option("--mask", expl.mask)->required();
  x->add_option("--target", expl.target, "dsc or nsd");
  x->add_option("--layer", expl.layer, "stem, block1..block4 or decoder");
  x->add_option("--hierarchy", expl.hierarchy, "brats, cardiac or binary");
  x->add_option("--out", expl.out, "heatmap path (.nii.gz)")->required();
  x->callback([&] {
    log_dir = fs::path(expl.out).parent_path();
    action = [&] { run_explain(expl); };
  });

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "summarise an evaluation report");
  r->add_option("--in", rep.in, "eval output directory")->required();
  r->add_flag("--plots", rep.plots, "write scatter and histogram data");
  r->callback([&] { action = [&] { run_report(rep); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    emit_error("bad_config", ex.what(), kExitBadConfig);
    return kExitBadConfig;
  }
  try {
    action();
    if (log_dir && !log_dir->empty()) append_run_log(*log_dir, command_line(argc, argv));
    return 0;
  } catch (const Error& ex) {
    switch (ex.kind()) {
      case ErrorKind::kBadConfig: emit_error("bad_config", ex.what(), kExitBadConfig); return kExitBadConfig;
      case ErrorKind::kDataError: emit_error("data_error", ex.what(), kExitDataError); return kExitDataError;
      case ErrorKind::kNumericalFailure:
        emit_error("numerical_failure", ex.what(), kExitNumerical);
        return kExitNumerical;
    }
  } catch (const json::exception& ex) {
    emit_error("bad_config", ex.what(), kExitBadConfig);
    return kExitBadConfig;
  } catch (const fs::filesystem_error& ex) {
    emit_error("data_error", ex.what(), kExitDataError);
    return kExitDataError;
  }
  return kExitDataError;
}
