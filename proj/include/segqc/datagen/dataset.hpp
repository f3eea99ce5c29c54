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
#include <vector>

#include "segqc/datagen/manifest.hpp"
#include "segqc/datagen/phantom.hpp"
#include "segqc/datagen/seggen.hpp"
#include "segqc/proxyseg/proxyseg.hpp"

namespace segqc::datagen {

struct Snapshot {
  std::size_t case_index = 0;
  int epoch = 0;
  LabelMask mask;
};

/// Trains `segmenter` for max(epochs) epochs at `lr`, recording the argmax
/// prediction for every case at each listed epoch (0 = before training).
std::vector<Snapshot> snapshot_segmentations(proxyseg::ProxySegmenter& segmenter,
                                             const std::vector<proxyseg::Example>& cases, std::vector<int> epochs,
                                             double lr, std::uint64_t seed);

/// Writes `count` phantoms under `out/cases/<id>/` plus `out/manifest.json`.
/// Case i uses seed derive_seed(seed, hash(case_id)).
DatasetManifest synthesize_dataset(const PhantomSpec& spec, const std::filesystem::path& out, int count,
                                   std::uint64_t seed, int workers = 1);

struct DegradeOptions {
  SegGenParams seggen;
  std::vector<int> snapshot_epochs;  // empty: no snapshot segmentations
  double snapshot_lr = 1e-3;
  proxyseg::ProxySegConfig proxy;
  // Extra SegGen passes applied to each snapshot segmentation.
  int seggen_per_snapshot = 0;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Adds query segmentations (SegGen and snapshots) with their dsc/nsd to the
/// manifest and writes `segs/<seg_id>.nii.gz` + `.meta.json`. Existing
/// segmentations are replaced.
void degrade_dataset(DatasetManifest& manifest, const DegradeOptions& opts);

}  // namespace segqc::datagen
