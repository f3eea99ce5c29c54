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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segqc/core/hierarchy.hpp"
#include "segqc/core/masks.hpp"
#include "segqc/core/volume.hpp"
#include "segqc/datagen/balance.hpp"

namespace segqc::datagen {

struct SegEntry {
  std::string seg_id;
  std::string path;  // relative to the dataset root
  std::string generator;
  double dsc = 0.0;
  double nsd = 0.0;
  std::uint64_t seed = 0;
};

struct CaseEntry {
  std::string case_id;
  std::string image;
  std::string gt;
  std::uint64_t seed = 0;
  std::vector<SegEntry> segs;
};

struct DatasetManifest {
  std::filesystem::path root;
  ClassHierarchy hierarchy = ClassHierarchy::brats();
  int modalities = 1;
  double nsd_tolerance = 1.0;
  std::vector<CaseEntry> cases;

  /// Reads `dir/manifest.json`; dsc/nsd outside [0, 1] are rejected.
  static DatasetManifest load(const std::filesystem::path& dir);
  void save() const;

  /// Referenced files that do not exist (relative paths).
  [[nodiscard]] std::vector<std::string> missing_files() const;

  struct SegRef {
    const CaseEntry* case_entry;
    const SegEntry* seg;
  };
  [[nodiscard]] std::optional<SegRef> find(const std::string& seg_id) const;
  /// (seg_id, dsc) for every segmentation, optionally restricted to some cases.
  [[nodiscard]] std::vector<QualityRecord> quality_records(const std::vector<std::string>& case_ids = {}) const;

  [[nodiscard]] Volume load_image(const CaseEntry& c) const;
  [[nodiscard]] LabelMask load_gt(const CaseEntry& c) const;
  [[nodiscard]] LabelMask load_seg(const SegEntry& s) const;
};

std::string seg_meta_path(const std::string& seg_path);

}  // namespace segqc::datagen
