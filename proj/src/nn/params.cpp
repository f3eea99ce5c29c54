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

#include "segqc/nn/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "segqc/util/error.hpp"

namespace segqc::nn {

namespace {
constexpr char kMagic[8] = {'S', 'Q', 'C', 'W', 'T', 'S', '0', '1'};
}

Var ParamStore::he_normal(const std::string& name, Shape shape, int fan_in, Rng& rng) {
  std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / std::max(1, fan_in))));
  std::vector<float> v(shape.numel());
  for (auto& x : v) x = dist(rng);
  params_.push_back(parameter(shape, std::move(v), name));
  return params_.back();
}

Var ParamStore::filled(const std::string& name, Shape shape, float value) {
  params_.push_back(parameter(shape, std::vector<float>(shape.numel(), value), name));
  return params_.back();
}

std::size_t ParamStore::count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

const Var& ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p;
  fail_config("no parameter named '" + name + "'");
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void ParamStore::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail_data("cannot write " + tmp);
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t n = params_.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (const auto& p : params_) {
      const std::uint32_t len = static_cast<std::uint32_t>(p->name.size());
      out.write(reinterpret_cast<const char*>(&len), sizeof len);
      out.write(p->name.data(), len);
      const std::uint64_t numel = p->value.size();
      out.write(reinterpret_cast<const char*>(&numel), sizeof numel);
      out.write(reinterpret_cast<const char*>(p->value.data()), static_cast<std::streamsize>(numel * sizeof(float)));
    }
    if (!out) fail_data("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void ParamStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open weights " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) fail_data("not a weights file: " + path.string());
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (n != params_.size())
    fail_data("weights file has " + std::to_string(n) + " tensors, model expects " + std::to_string(params_.size()));
  for (auto& p : params_) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > 4096) fail_data("corrupt weights file " + path.string());
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::uint64_t numel = 0;
    in.read(reinterpret_cast<char*>(&numel), sizeof numel);
    if (name != p->name || numel != p->value.size())
      fail_data("weights mismatch at '" + p->name + "' (file has '" + name + "', " + std::to_string(numel) + ")");
    in.read(reinterpret_cast<char*>(p->value.data()), static_cast<std::streamsize>(numel * sizeof(float)));
    if (!in) fail_data("truncated weights file " + path.string());
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.params_.size() != params_.size()) fail_config("parameter stores differ in size");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i]->value.size() != other.params_[i]->value.size()) fail_config("parameter shapes differ");
    params_[i]->value = other.params_[i]->value;
  }
}

Adam::Adam(std::vector<Var> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const auto& p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step(double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Node& p = *params_[k];
    const bool has = p.has_grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double g = has ? grad_scale * p.grad[i] : 0.0;
      g += cfg_.weight_decay * p.value[i];
      if (!std::isfinite(g)) fail_numeric("non-finite gradient in parameter '" + p.name + "'");
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mh = m[i] / bc1, vh = v[i] / bc2;
      p.value[i] = static_cast<float>(p.value[i] - cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
    }
  }
}

}  // namespace segqc::nn
