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

#include "segqc/engine/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "segqc/core/encoding.hpp"
#include "segqc/core/io.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/nn/params.hpp"
#include "segqc/util/error.hpp"
#include "segqc/util/parallel.hpp"

namespace segqc::engine {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double safe_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2) return kNaN;
  try {
    return metrics::pearson_r(a, b);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNumericalFailure) throw;
    return kNaN;
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct Prepared {
  nn::Var input;
  Targets targets;
};

}  // namespace

void TrainConfig::validate() const {
  if (!(initial_lr > 0.0)) fail_config("initial_lr must be positive");
  if (!(lr_floor > 0.0 && lr_floor < initial_lr)) fail_config("lr_floor must be positive and below initial_lr");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail_config("lr_decay must be in (0, 1]");
  if (!(weight_decay >= 0.0)) fail_config("weight_decay must be >= 0");
  if (batch_size < 1) fail_config("batch_size must be >= 1");
  if (epochs < 1) fail_config("epochs must be >= 1");
  if (draws_per_epoch < 1) fail_config("draws_per_epoch must be >= 1");
  if (workers < 1) fail_config("workers must be >= 1");
  if (precision != "fp32") fail_config("precision '" + precision + "' is not supported (only fp32)");
  augment.validate();
}

double TrainConfig::lr_at_epoch(int epoch) const {
  return std::max(initial_lr * std::pow(lr_decay, epoch), lr_floor);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"schema_version", 1},
                     {"initial_lr", c.initial_lr},
                     {"lr_decay", c.lr_decay},
                     {"lr_floor", c.lr_floor},
                     {"weight_decay", c.weight_decay},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"draws_per_epoch", c.draws_per_epoch},
                     {"augment", c.augment},
                     {"seed", c.seed},
                     {"precision", c.precision},
                     {"workers", c.workers}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  try {
    if (j.value("schema_version", 1) != 1) fail_config("unsupported training config schema_version");
    c = TrainConfig{};
    c.initial_lr = j.value("initial_lr", c.initial_lr);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.lr_floor = j.value("lr_floor", c.lr_floor);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.draws_per_epoch = j.value("draws_per_epoch", c.draws_per_epoch);
    if (j.contains("augment")) c.augment = j.at("augment").get<AugmentConfig>();
    c.seed = j.value("seed", c.seed);
    c.precision = j.value("precision", c.precision);
    c.workers = j.value("workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("training config: ") + e.what());
  }
  c.validate();
}

Targets compute_targets(const LabelMask& query, const LabelMask& gt, double nsd_tolerance) {
  const auto q = metrics::quality(query, gt, nsd_tolerance);
  return {q.dsc, q.nsd, metrics::sem_ground_truth(query, gt)};
}

TrainData load_training_data(const datagen::DatasetManifest& manifest, const std::vector<std::string>& case_ids,
                             bool balanced, std::uint64_t seed) {
  TrainData data;
  data.nsd_tolerance = manifest.nsd_tolerance;
  for (const auto& c : manifest.cases) {
    if (!case_ids.empty() && std::find(case_ids.begin(), case_ids.end(), c.case_id) == case_ids.end()) continue;
    auto image = std::make_shared<const Volume>(manifest.load_image(c));
    auto gt = std::make_shared<const LabelMask>(manifest.load_gt(c));
    for (const auto& s : c.segs)
      data.triples.push_back(
          {s.seg_id, c.case_id, image, gt, std::make_shared<const LabelMask>(manifest.load_seg(s)), s.dsc, s.nsd});
  }
  if (data.triples.empty()) fail_data("no segmentations found for the requested cases");
  if (balanced) {
    std::vector<datagen::QualityRecord> records;
    for (const auto& t : data.triples) records.push_back({t.seg_id, t.dsc});
    data.balance = datagen::build_balanced_index(records, 10, datagen::BalanceMode::kStochastic, seed);
  }
  return data;
}

TrainData load_training_data(const datagen::DatasetManifest& manifest, const datagen::BalancedIndex& index) {
  TrainData data;
  data.nsd_tolerance = manifest.nsd_tolerance;
  const bool stochastic = index.mode == datagen::BalanceMode::kStochastic;
  const auto& ids = stochastic ? index.seg_ids : index.selected;
  if (ids.empty()) fail_data("balance index lists no segmentations");
  std::map<std::string, std::pair<std::shared_ptr<const Volume>, std::shared_ptr<const LabelMask>>> cases;
  for (const auto& id : ids) {
    const auto ref = manifest.find(id);
    if (!ref) fail_data("segmentation " + id + " from the index is not in the manifest");
    auto& slot = cases[ref->case_entry->case_id];
    if (!slot.first) {
      slot.first = std::make_shared<const Volume>(manifest.load_image(*ref->case_entry));
      slot.second = std::make_shared<const LabelMask>(manifest.load_gt(*ref->case_entry));
    }
    data.triples.push_back({id, ref->case_entry->case_id, slot.first, slot.second,
                            std::make_shared<const LabelMask>(manifest.load_seg(*ref->seg)), ref->seg->dsc,
                            ref->seg->nsd});
  }
  if (stochastic) data.balance = index;
  return data;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::string out = "epoch,lr,train_loss,val_r_dsc,val_r_nsd\n";
  for (const auto& r : history)
    out += std::to_string(r.epoch) + "," + fmt(r.lr) + "," + fmt(r.train_loss) + "," + fmt(r.val_r_dsc) + "," +
           fmt(r.val_r_nsd) + "\n";
  io::write_text(path, out);
}

TrainResult train(model::QCResUNet& model, const TrainData& data, const std::vector<Triple>& validation,
                  const TrainConfig& cfg, const losses::LossConfig& loss, const TrainOptions& opts) {
  cfg.validate();
  loss.validate();
  if (data.triples.empty()) fail_data("empty training set");
  const auto& mc = model.config();
  for (const auto& t : data.triples) {
    if (t.image->channels() != mc.modalities)
      fail_data(t.seg_id + ": image has " + std::to_string(t.image->channels()) + " modalities, model expects " +
                std::to_string(mc.modalities));
    if (t.gt->hierarchy().num_classes() != mc.num_sem_classes)
      fail_data(t.seg_id + ": hierarchy class count differs from the model's");
    mc.check_input(t.image->grid());
  }
  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    io::write_text(*opts.out_dir / "train_config.json", nlohmann::json(cfg).dump(2) + "\n");
    io::write_text(*opts.out_dir / "loss_config.json", nlohmann::json(loss).dump(2) + "\n");
  }

  nn::Adam opt(model.params().params(), {.lr = cfg.initial_lr, .weight_decay = cfg.weight_decay});
  std::optional<datagen::BalancedSampler> sampler;
  if (data.balance) sampler.emplace(*data.balance, derive_seed(cfg.seed, 1));
  Rng order_rng(derive_seed(cfg.seed, 2));

  TrainResult result;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<float>> best_weights;
  const int C = mc.num_sem_classes;
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at_epoch(epoch);
    opt.set_lr(lr);
    std::vector<std::size_t> order;
    if (sampler) {
      for (int d = 0; d < cfg.draws_per_epoch; ++d) {
        const auto draw = sampler->draw();
        order.insert(order.end(), draw.begin(), draw.end());
      }
    } else {
      for (int d = 0; d < cfg.draws_per_epoch; ++d)
        for (std::size_t i = 0; i < data.triples.size(); ++i) order.push_back(i);
    }
    std::shuffle(order.begin(), order.end(), order_rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size), ++step) {
      const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      std::vector<std::optional<Prepared>> prepared(n);
      parallel_for(n, cfg.workers, [&](std::size_t i) {
        const Triple& t = data.triples[order[start + i]];
        Rng rng(derive_seed(derive_seed(cfg.seed, 3 + step), i));
        auto aug = augment(*t.image, *t.query, *t.gt, cfg.augment, rng);
        prepared[i] = Prepared{model::make_input(aug.image, one_hot(aug.query)),
                               compute_targets(aug.query, aug.gt, data.nsd_tolerance)};
      });

      const std::size_t V = data.triples[order[start]].image->grid().voxels();
      std::vector<model::QCResUNet::Graph> graphs;
      std::vector<double> pd(n), pn(n), gd(n), gn(n), prob(n * C * V), sem_gt(n * C * V);
      for (std::size_t i = 0; i < n; ++i) {
        Rng drop(derive_seed(derive_seed(cfg.seed, 0x5eed0000ULL + step), i));
        graphs.push_back(model.forward(prepared[i]->input, &drop));
        const auto& g = graphs.back();
        if (g.sem->value.size() != C * V) fail_data("training batch mixes grid sizes");
        pd[i] = g.scores->value[0];
        pn[i] = g.scores->value[1];
        gd[i] = prepared[i]->targets.dsc;
        gn[i] = prepared[i]->targets.nsd;
        std::copy(g.sem->value.begin(), g.sem->value.end(), prob.begin() + static_cast<std::ptrdiff_t>(i * C * V));
        const auto sd = prepared[i]->targets.sem.data();
        std::copy(sd.begin(), sd.end(), sem_gt.begin() + static_cast<std::ptrdiff_t>(i * C * V));
      }
      const std::string where = "epoch " + std::to_string(epoch + 1) + " step " + std::to_string(step);
      losses::CombinedGrad grad;
      losses::CombinedLoss l;
      try {
        l = losses::combined_loss({pd, pn}, {prob, static_cast<int>(n), C}, {gd, gn},
                                  {sem_gt, static_cast<int>(n), C}, loss, &grad);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumericalFailure) throw;
        fail_numeric("training diverged at " + where + ": " + e.what());
      }
      if (!std::isfinite(l.total)) fail_numeric("training diverged at " + where + ": loss is not finite");

      model.params().zero_grad();
      std::vector<std::pair<nn::Var, std::vector<float>>> seeds;
      for (std::size_t i = 0; i < n; ++i) {
        seeds.push_back({graphs[i].scores, {static_cast<float>(grad.dsc[i]), static_cast<float>(grad.nsd[i])}});
        std::vector<float> s(grad.sem.begin() + static_cast<std::ptrdiff_t>(i * C * V),
                             grad.sem.begin() + static_cast<std::ptrdiff_t>((i + 1) * C * V));
        seeds.push_back({graphs[i].sem, std::move(s)});
      }
      nn::backward(seeds);
      graphs.clear();
      try {
        opt.step();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumericalFailure) throw;
        fail_numeric("training diverged at " + where + ": " + e.what());
      }
      loss_sum += l.total;
      ++batches;
    }

    EpochRecord rec{epoch + 1, lr, loss_sum / static_cast<double>(batches), kNaN, kNaN};
    if (!validation.empty()) {
      std::vector<double> vp_d(validation.size()), vp_n(validation.size()), vg_d(validation.size()),
          vg_n(validation.size());
      parallel_for(validation.size(), cfg.workers, [&](std::size_t i) {
        const auto& t = validation[i];
        const auto p = model.predict(*t.image, *t.query);
        vp_d[i] = p.dsc_pred;
        vp_n[i] = p.nsd_pred;
        vg_d[i] = t.dsc;
        vg_n[i] = t.nsd;
      });
      rec.val_r_dsc = safe_pearson(vp_d, vg_d);
      rec.val_r_nsd = safe_pearson(vp_n, vg_n);
    }
    result.history.push_back(rec);

    const double score = 0.5 * (rec.val_r_dsc + rec.val_r_nsd);
    const bool stop = opts.should_stop && opts.should_stop(rec);
    const bool last = stop || epoch + 1 == cfg.epochs;
    if ((std::isfinite(score) && score > best_score) || (last && result.best_epoch == 0)) {
      if (std::isfinite(score)) best_score = score;
      result.best_epoch = rec.epoch;
      best_weights.clear();
      for (const auto& p : model.params().params()) best_weights.push_back(p->value);
      if (opts.out_dir) model.save(*opts.out_dir / "best");
    }
    if (opts.out_dir) write_history_csv(*opts.out_dir / "history.csv", result.history);
    if (opts.on_epoch) opts.on_epoch(rec);
    if (stop) break;
  }

  const auto& params = model.params().params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_weights[i];
  if (opts.out_dir) io::write_text(*opts.out_dir / "best_epoch.txt", std::to_string(result.best_epoch) + "\n");
  return result;
}

}  // namespace segqc::engine
