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

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "segqc/core/io.hpp"
#include "segqc/datagen/manifest.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "segqc_cli_test";

int run(const std::string& args, const std::string& tag = "out") {
  const std::string cmd = std::string(SEGQC_CLI) + " " + args + " > " + (kWork / (tag + ".stdout")).string() + " 2> " +
                          (kWork / (tag + ".stderr")).string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return segqc::io::read_text(p); }

nlohmann::json json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

std::string w(const std::string& rel) { return (kWork / rel).string(); }

}  // namespace

TEST_CASE("synth is deterministic; run log is kept apart") {
  Workspace ws;
  REQUIRE(run("synth --count 2 --seed 7 --out " + w("a")) == 0);
  REQUIRE(run("synth --count 2 --seed 7 --out " + w("b")) == 0);
  CHECK(slurp(w("a/manifest.json")) == slurp(w("b/manifest.json")));
  CHECK(fs::exists(w("a/run.log")));
  const auto m = segqc::datagen::DatasetManifest::load(w("a"));
  REQUIRE(m.cases.size() == 2);
  CHECK(slurp(w("a/") + m.cases[0].image) == slurp(w("b/") + m.cases[0].image));
}

TEST_CASE("errors are JSON on stderr with the mapped exit code") {
  Workspace ws;
  CHECK(run("synth --count 2 --out " + w("a"), "noseed") == 2);
  const auto err = nlohmann::json::parse(slurp(kWork / "noseed.stderr"));
  CHECK(err["error"]["kind"] == "bad_config");
  CHECK(err["error"]["exit_code"] == 2);
  CHECK(run("balance --dataset " + w("missing") + " --mode eval --seed 1", "missing") == 3);
  CHECK(nlohmann::json::parse(slurp(kWork / "missing.stderr"))["error"]["kind"] == "data_error");
  std::ofstream(w("bad.json")) << "{\"count\": ";
  CHECK(run("synth --count 2 --seed 1 --spec " + w("bad.json") + " --out " + w("c"), "badjson") == 2);
}

TEST_CASE("predict with the oracle bypass on (gt, gt)") {
  Workspace ws;
  REQUIRE(run("synth --count 1 --seed 3 --out " + w("ds")) == 0);
  const auto m = segqc::datagen::DatasetManifest::load(w("ds"));
  const std::string gt = w("ds/") + m.cases[0].gt;
  REQUIRE(run("predict --mask " + gt + " --oracle-gt " + gt + " --out " + w("pred")) == 0);
  const auto pred = json_file(w("pred/pred.json"));
  CHECK(pred["dsc"] == 1.0);
  CHECK(pred["nsd"] == 1.0);
  for (const auto& [name, count] : pred["sem_voxels"].items()) CHECK(count == 0);
  const auto sem = segqc::io::read_tensor(w("pred/sem.nii.gz"));
  CHECK(sem.channels == 3);
  CHECK(std::all_of(sem.values.begin(), sem.values.end(), [](float v) { return v == 0.0f; }));
  CHECK(fs::exists(w("pred/error_mask.nii.gz")));
}

TEST_CASE("end-to-end smoke: synth, degrade, balance, train, eval, report") {
  Workspace ws;
  REQUIRE(run("synth --count 20 --seed 11 --out " + w("ds")) == 0);
  std::ofstream(w("seggen.json")) << R"({"translation_vox": [-9, 9], "deform_displacement_vox": [-3, 3],
    "scale": [0.7, 1.4], "per_transform_probability": 0.4, "applications_per_gt": 20})";
  REQUIRE(run("degrade --dataset " + w("ds") + " --seggen " + w("seggen.json") + " --seed 5") == 0);
  std::string train_cases, eval_cases;
  for (int i = 0; i < 20; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "case_%03d", i);
    (i < 14 ? train_cases : eval_cases) += std::string(train_cases.empty() || i == 14 ? "" : ",") + id;
  }
  REQUIRE(run("balance --dataset " + w("ds") + " --mode train --seed 1 --cases " + train_cases + " --out " +
              w("train_idx.json")) == 0);
  REQUIRE(run("balance --dataset " + w("ds") + " --mode eval --seed 1 --cases " + eval_cases + " --out " +
              w("eval_idx.json")) == 0);
  std::ofstream(w("train.json")) << R"({"epochs": 2, "initial_lr": 0.001, "seed": 3})";
  std::ofstream(w("model.json")) << R"({"modalities": 2, "num_sem_classes": 3, "base_filters": 4})";
  REQUIRE(run("train --dataset " + w("ds") + " --index " + w("train_idx.json") + " --val-index " + w("eval_idx.json") +
              " --config " + w("train.json") + " --model " + w("model.json") + " --out " + w("ckpt")) == 0);
  CHECK(fs::exists(w("ckpt/best/weights.bin")));
  std::istringstream history(slurp(w("ckpt/history.csv")));
  int lines = 0;
  for (std::string line; std::getline(history, line);) ++lines;
  CHECK(lines == 3);

  REQUIRE(run("eval --dataset " + w("ds") + " --index " + w("eval_idx.json") + " --ckpt " + w("ckpt/best") +
              " --out " + w("report")) == 0);
  const auto report = json_file(w("report/report.json"));
  CHECK(report["schema_version"] == 1);
  const std::size_t n = report["n"];
  CHECK(n > 0);
  CHECK(n % 10 == 0);
  for (const char* key : {"pearson_r_dsc", "pearson_r_nsd", "mae_dsc", "mae_nsd", "dsc_sem", "scatter", "flags"})
    CHECK(report.contains(key));
  CHECK(report["scatter"]["gt_dsc"].size() == n);
  CHECK(report["integrity_ok"] == true);
  const double mae = report["mae_dsc"]["mean"];
  CHECK(mae >= 0.0);
  CHECK(mae <= 1.0);
  const double sem = report["dsc_sem"]["mean"]["mean"];
  CHECK(sem >= 0.0);
  CHECK(sem <= 1.0);

  REQUIRE(run("report --in " + w("report") + " --plots") == 0);
  for (const char* f : {"scatter_dsc.csv", "scatter_nsd.csv", "hist_dsc.csv", "hist_nsd.csv", "hist_dsc_sem.csv"})
    CHECK(fs::exists(w(std::string("report/plots/") + f)));

  // Same inputs, same bytes.
  REQUIRE(run("eval --dataset " + w("ds") + " --index " + w("eval_idx.json") + " --ckpt " + w("ckpt/best") +
              " --out " + w("report2")) == 0);
  CHECK(slurp(w("report/report.json")) == slurp(w("report2/report.json")));
  CHECK(slurp(w("report/rows.csv")) == slurp(w("report2/rows.csv")));
}
