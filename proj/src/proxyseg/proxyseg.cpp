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

#include "segqc/proxyseg/proxyseg.hpp"

#include <cmath>

#include "segqc/core/io.hpp"
#include "segqc/util/error.hpp"

namespace segqc::proxyseg {

using nn::Shape;
using nn::Var;

void ProxySegConfig::validate() const {
  if (modalities < 1) fail_config("modalities must be >= 1");
  if (base_filters < 1) fail_config("base_filters must be >= 1");
  if (depth < 2) fail_config("proxy segmenter depth must be >= 2");
  if (!(dropout_p > 0.0f && dropout_p < 1.0f)) fail_config("dropout_p must be in (0, 1)");
}

void to_json(nlohmann::json& j, const ProxySegConfig& c) {
  j = nlohmann::json{{"schema_version", 1},     {"modalities", c.modalities}, {"base_filters", c.base_filters},
                     {"depth", c.depth},        {"dropout_p", c.dropout_p},   {"leaky_slope", c.leaky_slope}};
}

void from_json(const nlohmann::json& j, ProxySegConfig& c) {
  try {
    ProxySegConfig d;
    c.modalities = j.value("modalities", d.modalities);
    c.base_filters = j.value("base_filters", d.base_filters);
    c.depth = j.value("depth", d.depth);
    c.dropout_p = j.value("dropout_p", d.dropout_p);
    c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  } catch (const nlohmann::json::exception& e) {
    fail_config(std::string("proxy config: ") + e.what());
  }
  c.validate();
}

Var image_input(const Volume& image) {
  const std::size_t V = image.grid().voxels();
  std::vector<float> in(image.data().size());
  for (int c = 0; c < image.channels(); ++c) {
    const auto ch = image.channel(c);
    double s = 0, ss = 0;
    for (float v : ch) {
      s += v;
      ss += static_cast<double>(v) * v;
    }
    const double mean = s / V, sd = std::sqrt(std::max(0.0, ss / V - mean * mean));
    const double inv = sd > 1e-8 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < V; ++i) in[c * V + i] = static_cast<float>((ch[i] - mean) * inv);
  }
  return nn::constant(Shape::of(image.channels(), image.grid()), std::move(in));
}

std::vector<float> class_probabilities(const std::vector<float>& p, const ClassHierarchy& h, Grid grid) {
  const std::size_t V = grid.voxels();
  const int K = h.num_base_labels() + 1, C = h.num_classes();
  if (p.size() != static_cast<std::size_t>(K) * V) fail_data("label probability size mismatch");
  std::vector<float> out(static_cast<std::size_t>(C) * V, 0.0f);
  for (int k = 1; k < K; ++k) {
    const std::uint32_t bits = h.membership(h.base_labels()[k - 1].code);
    for (int c = 0; c < C; ++c)
      if ((bits >> c) & 1u)
        for (std::size_t v = 0; v < V; ++v) out[c * V + v] += p[k * V + v];
  }
  for (auto& v : out) v = std::min(1.0f, v);
  return out;
}

LabelMask argmax_mask(const std::vector<float>& p, const ClassHierarchy& h, Grid grid) {
  const std::size_t V = grid.voxels();
  const int K = h.num_base_labels() + 1;
  std::vector<Label> out(V, 0);
  for (std::size_t v = 0; v < V; ++v) {
    int best = 0;
    for (int k = 1; k < K; ++k)
      if (p[k * V + v] > p[best * V + v]) best = k;
    out[v] = best == 0 ? 0 : h.base_labels()[best - 1].code;
  }
  return LabelMask(grid, std::move(out), h);
}

ProxySegmenter::ConvNorm ProxySegmenter::conv_norm(const std::string& name, int in, int out, int k, Rng& rng) {
  ConvNorm cn;
  cn.w = params_.he_normal(name + ".w", {out, in, k * k * k, 1}, in * k * k * k, rng);
  cn.gamma = params_.filled(name + ".gamma", Shape::vec(out), 1.0f);
  cn.beta = params_.filled(name + ".beta", Shape::vec(out), 0.0f);
  return cn;
}

Var ProxySegmenter::block(const ConvNorm& cn, const Var& x, nn::Stride3 stride, Rng* rng) const {
  Var y = nn::leaky_relu(nn::instance_norm(nn::conv3d(x, cn.w, nullptr, stride), cn.gamma, cn.beta), cfg_.leaky_slope);
  return rng ? nn::dropout(y, cfg_.dropout_p, *rng) : y;
}

ProxySegmenter::ProxySegmenter(ProxySegConfig cfg, ClassHierarchy hierarchy, std::uint64_t seed)
    : cfg_(cfg), hierarchy_(std::move(hierarchy)) {
  cfg_.validate();
  Rng rng(seed);
  const int b = cfg_.base_filters;
  int in = cfg_.modalities;
  for (int l = 0; l < cfg_.depth; ++l) {
    const int w = b << l;
    if (l > 0) down_.push_back(conv_norm("down" + std::to_string(l), in, w, 3, rng));
    enc_.push_back(conv_norm("enc" + std::to_string(l), l > 0 ? w : in, w, 3, rng));
    in = w;
  }
  for (int l = cfg_.depth - 2; l >= 0; --l) {
    const int w = b << l;
    up_w_.push_back(params_.he_normal("up" + std::to_string(l) + ".w", {w, 2 * w, 1, 1}, 2 * w, rng));
    up_b_.push_back(params_.filled("up" + std::to_string(l) + ".b", Shape::vec(w), 0.0f));
    dec_.push_back(conv_norm("dec" + std::to_string(l), 2 * w, w, 3, rng));
  }
  head_w_ = params_.he_normal("head.w", {num_outputs(), b, 1, 1}, b, rng);
  head_b_ = params_.filled("head.b", Shape::vec(num_outputs()), 0.0f);
}

void ProxySegmenter::check_input(Grid grid) const {
  const int f = 1 << (cfg_.depth - 1);
  std::string hint;
  for (int a = 0; a < 3; ++a) {
    const int ext = grid.extent(a);
    if (ext % f != 0)
      hint += " axis " + std::to_string(a) + ": " + std::to_string(ext) + " is not a multiple of " + std::to_string(f) +
              " (pad by " + std::to_string(f - ext % f) + ");";
  }
  if (!hint.empty()) fail_data("input grid " + to_string(grid) + " incompatible with the segmenter:" + hint);
}

Var ProxySegmenter::logits(const Var& input, Rng* rng) const {
  if (input->shape.c != cfg_.modalities)
    fail_data("segmenter expects " + std::to_string(cfg_.modalities) + " modalities");
  check_input(input->shape.grid());
  std::vector<Var> skips;
  Var x = input;
  for (int l = 0; l < cfg_.depth; ++l) {
    if (l > 0) x = block(down_[l - 1], x, {2, 2, 2}, rng);
    x = block(enc_[l], x, {1, 1, 1}, rng);
    skips.push_back(x);
  }
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const int l = cfg_.depth - 2 - static_cast<int>(i);
    x = nn::conv3d(nn::upsample_nearest(x, {2, 2, 2}), up_w_[i], up_b_[i]);
    x = block(dec_[i], nn::concat_channels(x, skips[l]), {1, 1, 1}, rng);
  }
  return nn::conv3d(x, head_w_, head_b_);
}

std::vector<float> ProxySegmenter::segment(const Volume& image, Rng* dropout_rng) const {
  nn::NoGradGuard guard;
  return nn::softmax_channels(*logits(image_input(image), dropout_rng));
}

LabelMask ProxySegmenter::predict_mask(const Volume& image) const {
  return argmax_mask(segment(image), hierarchy_, image.grid());
}

std::vector<float> ProxySegmenter::mc_dropout_umap(const Volume& image, int T, std::uint64_t seed) const {
  if (T < 1) fail_config("MC dropout needs T >= 1");
  nn::NoGradGuard guard;
  const Var input = image_input(image);
  Rng rng(seed);
  std::vector<double> acc;
  for (int t = 0; t < T; ++t) {
    const auto p = nn::softmax_channels(*logits(input, &rng));
    if (acc.empty()) acc.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += p[i];
  }
  std::vector<float> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / T);
  return out;
}

double ProxySegmenter::train_epoch(const std::vector<Example>& data, nn::Adam& opt, Rng& rng) const {
  double total = 0.0;
  for (const auto& ex : data) {
    if (!(ex.gt->hierarchy() == hierarchy_)) fail_data("training mask hierarchy differs from the segmenter's");
    std::vector<std::uint8_t> target(ex.gt->data().size());
    for (std::size_t v = 0; v < target.size(); ++v) {
      const Label l = ex.gt->data()[v];
      target[v] = static_cast<std::uint8_t>(l == 0 ? 0 : hierarchy_.base_index(l) + 1);
    }
    for (const auto& p : params_.params()) p->zero_grad();
    const Var loss = nn::softmax_cross_entropy(logits(image_input(*ex.image), &rng), target);
    if (!std::isfinite(loss->value[0])) fail_numeric("segmenter loss is not finite");
    nn::backward({{loss, {1.0f}}});
    opt.step();
    total += loss->value[0];
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

void ProxySegmenter::train(const std::vector<Example>& data, const TrainOptions& opts) {
  if (data.empty()) fail_data("no training examples");
  nn::Adam opt(params_.params(), {.lr = opts.lr});
  Rng rng(opts.seed);
  std::vector<Example> order = data;
  for (int e = 1; e <= opts.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    const double loss = train_epoch(order, opt, rng);
    if (opts.on_epoch) opts.on_epoch(e, loss);
  }
}

void ProxySegmenter::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j = cfg_;
  j["kind"] = "proxyseg";
  j["hierarchy"] = hierarchy_;
  io::write_text(dir / "config.json", j.dump(2) + "\n");
  params_.save(dir / "weights.bin");
}

ProxySegmenter ProxySegmenter::load(const std::filesystem::path& dir) {
  const auto j = nlohmann::json::parse(io::read_text(dir / "config.json"), nullptr, false);
  if (j.is_discarded() || j.value("kind", "") != "proxyseg") fail_config(dir.string() + " is not a segmenter checkpoint");
  ProxySegmenter seg(j.get<ProxySegConfig>(), hierarchy_from_json(j.at("hierarchy")), 0);
  seg.params_.load(dir / "weights.bin");
  return seg;
}

}  // namespace segqc::proxyseg
