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

#include "segqc/datagen/manifest.hpp"

#include <json.hpp>

#include "segqc/core/io.hpp"
#include "segqc/util/error.hpp"

namespace segqc::datagen {

namespace fs = std::filesystem;

namespace {
void check_unit(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) fail_data(what + " = " + std::to_string(v) + " outside [0, 1]");
}
}  // namespace

std::string seg_meta_path(const std::string& seg_path) {
  std::string base = seg_path;
  for (const char* ext : {".nii.gz", ".nii", ".raw"}) {
    const std::string e(ext);
    if (base.size() > e.size() && base.compare(base.size() - e.size(), e.size(), e) == 0) {
      base.resize(base.size() - e.size());
      break;
    }
  }
  return base + ".meta.json";
}

DatasetManifest DatasetManifest::load(const fs::path& dir) {
  const auto text = io::read_text(dir / "manifest.json");
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail_data("malformed manifest " + (dir / "manifest.json").string());
  DatasetManifest m;
  m.root = dir;
  try {
    m.hierarchy = hierarchy_from_json(j.at("hierarchy"));
    m.modalities = j.at("modalities").get<int>();
    m.nsd_tolerance = j.value("nsd_tolerance", 1.0);
    for (const auto& c : j.at("cases")) {
      CaseEntry ce;
      ce.case_id = c.at("case_id").get<std::string>();
      ce.image = c.at("image").get<std::string>();
      ce.gt = c.at("gt").get<std::string>();
      ce.seed = c.value("seed", std::uint64_t{0});
      for (const auto& s : c.value("segs", nlohmann::json::array())) {
        SegEntry se;
        se.seg_id = s.at("seg_id").get<std::string>();
        se.path = s.at("path").get<std::string>();
        se.generator = s.at("generator").get<std::string>();
        se.dsc = s.at("dsc").get<double>();
        se.nsd = s.at("nsd").get<double>();
        se.seed = s.value("seed", std::uint64_t{0});
        check_unit(se.dsc, se.seg_id + " dsc");
        check_unit(se.nsd, se.seg_id + " nsd");
        ce.segs.push_back(std::move(se));
      }
      m.cases.push_back(std::move(ce));
    }
  } catch (const nlohmann::json::exception& e) {
    fail_data(std::string("manifest: ") + e.what());
  }
  return m;
}

void DatasetManifest::save() const {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : this->cases) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : c.segs)
      segs.push_back({{"seg_id", s.seg_id},
                      {"path", s.path},
                      {"generator", s.generator},
                      {"dsc", s.dsc},
                      {"nsd", s.nsd},
                      {"seed", s.seed}});
    cases.push_back({{"case_id", c.case_id}, {"image", c.image}, {"gt", c.gt}, {"seed", c.seed}, {"segs", segs}});
  }
  const nlohmann::json j{{"schema_version", 1},
                         {"hierarchy", hierarchy},
                         {"modalities", modalities},
                         {"nsd_tolerance", nsd_tolerance},
                         {"cases", cases}};
  fs::create_directories(root);
  io::write_text(root / "manifest.json", j.dump(1) + "\n");
}

std::vector<std::string> DatasetManifest::missing_files() const {
  std::vector<std::string> out;
  for (const auto& c : cases) {
    for (const auto* p : {&c.image, &c.gt})
      if (!fs::exists(root / *p)) out.push_back(*p);
    for (const auto& s : c.segs)
      if (!fs::exists(root / s.path)) out.push_back(s.path);
  }
  return out;
}

std::optional<DatasetManifest::SegRef> DatasetManifest::find(const std::string& seg_id) const {
  for (const auto& c : cases)
    for (const auto& s : c.segs)
      if (s.seg_id == seg_id) return SegRef{&c, &s};
  return std::nullopt;
}

std::vector<QualityRecord> DatasetManifest::quality_records(const std::vector<std::string>& case_ids) const {
  std::vector<QualityRecord> out;
  for (const auto& c : cases) {
    if (!case_ids.empty() && std::find(case_ids.begin(), case_ids.end(), c.case_id) == case_ids.end()) continue;
    for (const auto& s : c.segs) out.push_back({s.seg_id, s.dsc});
  }
  return out;
}

Volume DatasetManifest::load_image(const CaseEntry& c) const {
  auto v = io::read_volume(root / c.image);
  if (v.channels() != modalities)
    fail_data(c.image + " has " + std::to_string(v.channels()) + " channels, manifest says " +
              std::to_string(modalities));
  return v;
}

LabelMask DatasetManifest::load_gt(const CaseEntry& c) const { return io::read_mask(root / c.gt, hierarchy); }

LabelMask DatasetManifest::load_seg(const SegEntry& s) const { return io::read_mask(root / s.path, hierarchy); }

}  // namespace segqc::datagen
