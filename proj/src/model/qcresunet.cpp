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

#include "segqc/model/qcresunet.hpp"

#include <cmath>

#include "segqc/core/encoding.hpp"
#include "segqc/core/io.hpp"
#include "segqc/util/error.hpp"

namespace segqc::model {

using nn::Shape;
using nn::Var;

Stride3 QCResUNetConfig::total_downsampling(int stages) const noexcept {
  Stride3 t{1, 1, 1};
  for (int s = 0; s < stages; ++s)
    for (int a = 0; a < 3; ++a) t[a] *= downsample_rates[s][a];
  return t;
}

void QCResUNetConfig::validate() const {
  if (modalities < 1) fail_config("modalities must be >= 1");
  if (num_sem_classes < 1) fail_config("num_sem_classes must be >= 1");
  if (base_filters < 1) fail_config("base_filters must be >= 1");
  for (int b : stage_block_counts)
    if (b < 1) fail_config("every stage needs at least one block");
  for (const auto& r : downsample_rates)
    for (int v : r)
      if (v != 1 && v != 2) fail_config("downsample rates must be 1 or 2");
  if (spatial_dropout_p < 0.0f || spatial_dropout_p >= 1.0f) fail_config("spatial_dropout_p must be in [0, 1)");
  if (eca_kernel < 1 || eca_kernel % 2 == 0) fail_config("eca_kernel must be odd and positive");
  if (leaky_slope < 0.0f) fail_config("leaky_slope must be >= 0");
}

void QCResUNetConfig::check_input(Grid grid) const {
  const Stride3 t = total_downsampling();
  std::string hint;
  for (int a = 0; a < 3; ++a) {
    const int ext = grid.extent(a);
    if (ext % t[a] != 0) {
      const int pad = t[a] - ext % t[a];
      hint += " axis " + std::to_string(a) + ": " + std::to_string(ext) + " is not a multiple of " +
              std::to_string(t[a]) + " (pad by " + std::to_string(pad) + ");";
    }
  }
  if (!hint.empty()) fail_data("input grid " + to_string(grid) + " incompatible with downsampling:" + hint);
}

QCResUNetConfig QCResUNetConfig::brain(int modalities, int classes, int base_filters) {
  QCResUNetConfig c;
  c.modalities = modalities;
  c.num_sem_classes = classes;
  c.base_filters = base_filters;
  return c;
}

QCResUNetConfig QCResUNetConfig::cardiac(int modalities, int classes, int base_filters) {
  QCResUNetConfig c = brain(modalities, classes, base_filters);
  c.downsample_rates = {{{1, 2, 2}, {1, 2, 2}, {1, 2, 2}, {2, 2, 2}}};
  return c;
}

void to_json(nlohmann::json& j, const QCResUNetConfig& c) {
  j = nlohmann::json{{"schema_version", kConfigSchemaVersion},
                     {"modalities", c.modalities},
                     {"num_sem_classes", c.num_sem_classes},
                     {"in_channels", c.in_channels()},
                     {"stage_block_counts", c.stage_block_counts},
                     {"base_filters", c.base_filters},
                     {"downsample_rates", c.downsample_rates},
                     {"spatial_dropout_p", c.spatial_dropout_p},
                     {"eca_kernel", c.eca_kernel},
                     {"leaky_slope", c.leaky_slope},
                     {"normalization", "instance"},
                     {"activation", "leaky_relu"}};
}

void from_json(const nlohmann::json& j, QCResUNetConfig& c) {
  try {
    const int version = j.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion)
      fail_config("unsupported model config schema_version " + std::to_string(version));
    QCResUNetConfig d;
    c.modalities = j.value("modalities", d.modalities);
    c.num_sem_classes = j.value("num_sem_classes", d.num_sem_classes);
    c.stage_block_counts = j.value("stage_block_counts", d.stage_block_counts);
    c.base_filters = j.value("base_filters", d.base_filters);
    if (j.contains("preset")) {
      const auto p = j.at("preset").get<std::string>();
      if (p == "brain") c.downsample_rates = QCResUNetConfig::brain(1, 1).downsample_rates;
      else if (p == "cardiac") c.downsample_rates = QCResUNetConfig::cardiac(1, 1).downsample_rates;
      else fail_config("unknown preset '" + p + "'");
    } else {
      c.downsample_rates = j.value("downsample_rates", d.downsample_rates);
    }
    c.spatial_dropout_p = j.value("spatial_dropout_p", d.spatial_dropout_p);
    c.eca_kernel = j.value("eca_kernel", d.eca_kernel);
    c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
    if (j.contains("in_channels") && j.at("in_channels").get<int>() != c.in_channels())
      fail_config("in_channels must equal modalities + num_sem_classes");
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("model config: ") + e.what());
  }
  c.validate();
}

Var eca_aggregate(const Var& features, const Var& onehot_query, const Var& conv_weight, const Var& conv_bias) {
  if (!(features->shape.grid() == onehot_query->shape.grid()))
    fail_data("eca_aggregate: spatial mismatch " + nn::to_string(features->shape) + " vs " +
              nn::to_string(onehot_query->shape));
  const Var cat = nn::concat_channels(features, onehot_query);
  const Var gates = nn::sigmoid(nn::channel_conv1d(nn::global_avg_pool(cat), conv_weight, conv_bias));
  return nn::scale_channels(cat, gates);
}

Var make_input(const Volume& image, const BinaryMaskStack& query_onehot) {
  if (!(image.grid() == query_onehot.grid()))
    fail_data("image grid " + to_string(image.grid()) + " differs from mask grid " + to_string(query_onehot.grid()));
  const Grid g = image.grid();
  const std::size_t V = g.voxels();
  const int m = image.channels(), C = query_onehot.num_channels();
  std::vector<float> in(static_cast<std::size_t>(m + C) * V);
  for (int c = 0; c < m; ++c) {
    const auto ch = image.channel(c);
    double s = 0, ss = 0;
    for (float v : ch) {
      s += v;
      ss += static_cast<double>(v) * v;
    }
    const double mean = s / V;
    const double sd = std::sqrt(std::max(0.0, ss / V - mean * mean));
    const double inv = sd > 1e-8 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < V; ++i) in[c * V + i] = static_cast<float>((ch[i] - mean) * inv);
  }
  const auto bits = query_onehot.data();
  for (std::size_t i = 0; i < bits.size(); ++i) in[m * V + i] = bits[i];
  return nn::constant(Shape::of(m + C, g), std::move(in));
}

QCResUNet::ConvNorm QCResUNet::conv_norm(const std::string& name, int in, int out, int k, Rng& rng) {
  ConvNorm cn;
  cn.w = params_.he_normal(name + ".w", {out, in, k * k * k, 1}, in * k * k * k, rng);
  cn.gamma = params_.filled(name + ".gamma", Shape::vec(out), 1.0f);
  cn.beta = params_.filled(name + ".beta", Shape::vec(out), 0.0f);
  return cn;
}

Var QCResUNet::apply(const ConvNorm& cn, const Var& x, Stride3 stride, bool activate) const {
  Var y = nn::instance_norm(nn::conv3d(x, cn.w, nullptr, stride), cn.gamma, cn.beta);
  return activate ? nn::leaky_relu(y, cfg_.leaky_slope) : y;
}

QCResUNet::QCResUNet(QCResUNetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  const int b = cfg_.base_filters;
  stem_ = conv_norm("stem", cfg_.in_channels(), b, 3, rng);
  int in = b;
  for (int s = 0; s < 4; ++s) {
    const int w = cfg_.width(s);
    for (int k = 0; k < cfg_.stage_block_counts[s]; ++k) {
      Block blk;
      const std::string name = "block" + std::to_string(s + 1) + "." + std::to_string(k);
      blk.stride = k == 0 ? cfg_.downsample_rates[s] : Stride3{1, 1, 1};
      blk.a = conv_norm(name + ".conv1", in, w, 3, rng);
      blk.b = conv_norm(name + ".conv2", w, w, 3, rng);
      blk.project = in != w || blk.stride != Stride3{1, 1, 1};
      if (blk.project) blk.proj = conv_norm(name + ".proj", in, w, 1, rng);
      stages_[s].push_back(blk);
      in = w;
    }
  }
  encoder_params_ = params_.count();
  fc_w_ = params_.he_normal("head.fc.w", {2, cfg_.width(3), 1, 1}, cfg_.width(3), rng);
  fc_b_ = params_.filled("head.fc.b", Shape::vec(2), 0.0f);
  // Decoder from block3 back to full resolution: skips block2, block1, stem.
  int ch = cfg_.width(2);
  for (int level = 2; level >= 0; --level) {
    const int skip = level == 0 ? b : cfg_.width(level - 1);
    DecoderLevel d;
    const std::string name = "decoder" + std::to_string(level);
    d.factor = cfg_.downsample_rates[level];
    d.up_w = params_.he_normal(name + ".up.w", {skip, ch, 1, 1}, ch, rng);
    d.up_b = params_.filled(name + ".up.b", Shape::vec(skip), 0.0f);
    d.c1 = conv_norm(name + ".conv1", 2 * skip, skip, 3, rng);
    d.c2 = conv_norm(name + ".conv2", skip, skip, 3, rng);
    decoder_.push_back(d);
    ch = skip;
  }
  const int C = cfg_.num_sem_classes;
  eca_w_ = params_.filled("eca.w", Shape::vec(cfg_.eca_kernel), 0.0f);
  eca_w_->value[cfg_.eca_kernel / 2] = 1.0f;
  eca_b_ = params_.filled("eca.b", Shape::vec(1), 0.0f);
  head_w_ = params_.he_normal("head.sem.w", {C, ch + C, 1, 1}, ch + C, rng);
  head_b_ = params_.filled("head.sem.b", Shape::vec(C), 0.0f);
}

std::size_t QCResUNet::encoder_parameter_count() const { return encoder_params_; }

QCResUNet::Graph QCResUNet::forward(const Var& input, Rng* dropout_rng) const {
  if (input->shape.c != cfg_.in_channels())
    fail_data("network expects " + std::to_string(cfg_.in_channels()) + " input channels, got " +
              std::to_string(input->shape.c));
  cfg_.check_input(input->shape.grid());
  const int C = cfg_.num_sem_classes;
  const std::size_t V = input->shape.plane();
  Graph g;
  Var x = apply(stem_, input, {1, 1, 1}, true);
  g.features["stem"] = x;
  std::array<Var, 4> stage_out;
  for (int s = 0; s < 4; ++s) {
    for (const auto& blk : stages_[s]) {
      Var h = apply(blk.a, x, blk.stride, true);
      if (dropout_rng && cfg_.spatial_dropout_p > 0.0f) h = nn::channel_dropout(h, cfg_.spatial_dropout_p, *dropout_rng);
      h = apply(blk.b, h, {1, 1, 1}, false);
      const Var shortcut = blk.project ? apply(blk.proj, x, blk.stride, false) : x;
      x = nn::leaky_relu(nn::add(h, shortcut), cfg_.leaky_slope);
    }
    stage_out[s] = x;
    g.features["block" + std::to_string(s + 1)] = x;
  }
  g.scores = nn::sigmoid(nn::linear(nn::global_avg_pool(stage_out[3]), fc_w_, fc_b_));

  Var d = stage_out[2];
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    const auto& lvl = decoder_[i];
    const int level = 2 - static_cast<int>(i);
    const Var skip = level == 0 ? g.features["stem"] : stage_out[level - 1];
    d = nn::conv3d(nn::upsample_nearest(d, lvl.factor), lvl.up_w, lvl.up_b);
    d = nn::concat_channels(d, skip);
    d = apply(lvl.c1, d, {1, 1, 1}, true);
    d = apply(lvl.c2, d, {1, 1, 1}, true);
  }
  g.features["decoder"] = d;
  std::vector<float> onehot(input->value.end() - static_cast<std::ptrdiff_t>(C * V), input->value.end());
  const Var q = nn::constant(Shape::of(C, input->shape.grid()), std::move(onehot));
  const Var att = eca_aggregate(d, q, eca_w_, eca_b_);
  g.sem = nn::sigmoid(nn::conv3d(att, head_w_, head_b_));
  return g;
}

QCResUNet::Graph QCResUNet::forward(const Volume& image, const LabelMask& query, Rng* dropout_rng) const {
  if (image.channels() != cfg_.modalities)
    fail_data("model expects " + std::to_string(cfg_.modalities) + " modalities, image has " +
              std::to_string(image.channels()));
  if (query.hierarchy().num_classes() != cfg_.num_sem_classes)
    fail_data("model expects " + std::to_string(cfg_.num_sem_classes) + " classes");
  return forward(make_input(image, one_hot(query)), dropout_rng);
}

QCPrediction QCResUNet::predict(const Volume& image, const LabelMask& query) const {
  nn::NoGradGuard guard;
  const Graph g = forward(image, query, nullptr);
  QCPrediction p;
  p.dsc_pred = g.scores->value[0];
  p.nsd_pred = g.scores->value[1];
  p.classes = cfg_.num_sem_classes;
  p.grid = image.grid();
  p.sem_prob = g.sem->value;
  return p;
}

void QCResUNet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j = cfg_;
  j["kind"] = "qcresunet";
  io::write_text(dir / "config.json", j.dump(2) + "\n");
  params_.save(dir / "weights.bin");
}

QCResUNet QCResUNet::load(const std::filesystem::path& dir) {
  const auto j = nlohmann::json::parse(io::read_text(dir / "config.json"), nullptr, false);
  if (j.is_discarded()) fail_config("malformed " + (dir / "config.json").string());
  if (j.value("kind", "qcresunet") != "qcresunet") fail_config(dir.string() + " is not a QCResUNet checkpoint");
  QCResUNet net(j.get<QCResUNetConfig>(), 0);
  net.params_.load(dir / "weights.bin");
  return net;
}

}  // namespace segqc::model
