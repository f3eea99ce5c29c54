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

#include "segqc/datagen/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>

#include <json.hpp>

#include "segqc/core/io.hpp"
#include "segqc/metrics/metrics.hpp"
#include "segqc/util/error.hpp"
#include "segqc/util/parallel.hpp"

namespace segqc::datagen {

namespace fs = std::filesystem;

std::vector<Snapshot> snapshot_segmentations(proxyseg::ProxySegmenter& segmenter,
                                             const std::vector<proxyseg::Example>& cases, std::vector<int> epochs,
                                             double lr, std::uint64_t seed) {
  if (epochs.empty()) fail_config("snapshot epoch list is empty");
  if (cases.empty()) fail_data("no cases to snapshot");
  std::sort(epochs.begin(), epochs.end());
  epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());
  if (epochs.front() < 0) fail_config("snapshot epochs must be >= 0");
  std::vector<Snapshot> out;
  auto record = [&](int epoch) {
    for (std::size_t i = 0; i < cases.size(); ++i)
      out.push_back({i, epoch, segmenter.predict_mask(*cases[i].image)});
  };
  nn::Adam opt(segmenter.params().params(), {.lr = lr});
  Rng rng(seed);
  std::vector<proxyseg::Example> order = cases;
  int done = 0;
  for (int e : epochs) {
    for (; done < e; ++done) {
      std::shuffle(order.begin(), order.end(), rng);
      segmenter.train_epoch(order, opt, rng);
    }
    record(e);
  }
  return out;
}

DatasetManifest synthesize_dataset(const PhantomSpec& spec, const fs::path& out, int count, std::uint64_t seed,
                                   int workers) {
  if (count < 1) fail_config("count must be >= 1");
  spec.validate();
  DatasetManifest m;
  m.root = out;
  m.hierarchy = spec.hierarchy;
  m.modalities = spec.modalities;
  m.cases.resize(static_cast<std::size_t>(count));
  parallel_for(m.cases.size(), workers, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "case_%03zu", i);
    CaseEntry& c = m.cases[i];
    c.case_id = id;
    c.seed = derive_seed(seed, hash_id(c.case_id));
    PhantomSpec s = spec;
    s.seed = c.seed;
    const auto [image, gt] = generate_phantom(s);
    const fs::path dir = out / "cases" / c.case_id;
    fs::create_directories(dir);
    c.image = "cases/" + c.case_id + "/image.nii.gz";
    c.gt = "cases/" + c.case_id + "/gt.nii.gz";
    io::write_volume(out / c.image, image);
    io::write_mask(out / c.gt, gt);
  });
  m.save();
  return m;
}

void degrade_dataset(DatasetManifest& m, const DegradeOptions& opts) {
  opts.seggen.validate();
  const std::size_t n = m.cases.size();
  std::vector<Volume> images;
  std::vector<LabelMask> gts;
  for (const auto& c : m.cases) {
    images.push_back(m.load_image(c));
    gts.push_back(m.load_gt(c));
  }

  struct Pending {
    std::string seg_id, generator;
    std::uint64_t seed;
    std::size_t case_index;
    LabelMask mask;
  };
  std::vector<std::vector<Pending>> per_case(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = m.cases[i];
    for (int k = 0; k < opts.seggen.applications_per_gt; ++k) {
      const std::string sid = c.case_id + "_seggen" + std::to_string(k);
      const std::uint64_t s = derive_seed(opts.seed, hash_id(sid));
      per_case[i].push_back({sid, "seggen", s, i, seggen_degrade(gts[i], opts.seggen, s)});
    }
  }
  if (!opts.snapshot_epochs.empty()) {
    proxyseg::ProxySegConfig pc = opts.proxy;
    pc.modalities = m.modalities;
    proxyseg::ProxySegmenter seg(pc, m.hierarchy, derive_seed(opts.seed, hash_id("proxyseg")));
    std::vector<proxyseg::Example> ex;
    for (std::size_t i = 0; i < n; ++i) ex.push_back({&images[i], &gts[i]});
    const auto snaps =
        snapshot_segmentations(seg, ex, opts.snapshot_epochs, opts.snapshot_lr, derive_seed(opts.seed, hash_id("snap")));
    for (const auto& s : snaps) {
      const auto& c = m.cases[s.case_index];
      const std::string sid = c.case_id + "_snap" + std::to_string(s.epoch);
      per_case[s.case_index].push_back({sid, "snapshot", opts.seed, s.case_index, s.mask});
      for (int k = 0; k < opts.seggen_per_snapshot; ++k) {
        const std::string did = sid + "_seggen" + std::to_string(k);
        const std::uint64_t ds = derive_seed(opts.seed, hash_id(did));
        per_case[s.case_index].push_back({did, "snapshot+seggen", ds, s.case_index, seggen_degrade(s.mask, opts.seggen, ds)});
      }
    }
  }

  parallel_for(n, opts.workers, [&](std::size_t i) {
    auto& c = m.cases[i];
    c.segs.clear();
    fs::create_directories(m.root / "cases" / c.case_id / "segs");
    for (const auto& p : per_case[i]) {
      const auto q = metrics::quality(p.mask, gts[i], m.nsd_tolerance);
      SegEntry e{p.seg_id, "cases/" + c.case_id + "/segs/" + p.seg_id + ".nii.gz", p.generator, q.dsc, q.nsd, p.seed};
      io::write_mask(m.root / e.path, p.mask);
      const nlohmann::json meta{{"generator", e.generator}, {"dsc", e.dsc}, {"nsd", e.nsd}, {"seed", e.seed}};
      io::write_text(m.root / seg_meta_path(e.path), meta.dump(2) + "\n");
      c.segs.push_back(std::move(e));
    }
  });
  m.save();
}

}  // namespace segqc::datagen
