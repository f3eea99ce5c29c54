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

#include "segqc/core/io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segqc/util/error.hpp"

namespace segqc::io {

namespace fs = std::filesystem;
static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace {

#pragma pack(push, 1)
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope, scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348);

constexpr std::int16_t kNiftiUInt8 = 2;
constexpr std::int16_t kNiftiInt16 = 4;
constexpr std::int16_t kNiftiInt32 = 8;
constexpr std::int16_t kNiftiFloat32 = 16;
constexpr std::int16_t kNiftiFloat64 = 64;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

enum class Format { kNifti, kNiftiGz, kRaw };

Format format_of(const fs::path& p) {
  const std::string s = p.string();
  if (ends_with(s, ".nii.gz")) return Format::kNiftiGz;
  if (ends_with(s, ".nii")) return Format::kNifti;
  if (ends_with(s, ".raw")) return Format::kRaw;
  fail_data("unsupported image extension: " + s + " (expected .nii, .nii.gz or .raw)");
}

std::vector<char> encode_payload(const Tensor4& t) {
  std::vector<char> bytes;
  if (t.stored_as == DType::kUInt8) {
    bytes.resize(t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i)
      bytes[i] = static_cast<char>(static_cast<std::uint8_t>(std::lround(t.values[i])));
  } else {
    bytes.resize(t.values.size() * sizeof(float));
    std::memcpy(bytes.data(), t.values.data(), bytes.size());
  }
  return bytes;
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes, bool gz) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  if (gz) {
    gzFile f = gzopen(tmp.c_str(), "wb6");
    if (!f) fail_data("cannot open " + path.string() + " for writing");
    std::size_t off = 0;
    while (off < bytes.size()) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - off, 1u << 24));
      if (gzwrite(f, bytes.data() + off, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        fail_data("write failed for " + path.string());
      }
      off += chunk;
    }
    if (gzclose(f) != Z_OK) fail_data("write failed for " + path.string());
  } else {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail_data("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail_data("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

std::vector<char> read_bytes(const fs::path& path, bool gz) {
  if (!fs::exists(path)) fail_data("missing file: " + path.string());
  std::vector<char> bytes;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) fail_data("cannot open " + path.string());
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
    const bool err = n < 0;
    gzclose(f);
    if (err) fail_data("corrupt gzip stream: " + path.string());
  } else {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  return bytes;
}

void write_nifti(const fs::path& path, const Tensor4& t, bool gz) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  const bool four_d = t.channels > 1;
  h.dim[0] = four_d ? 4 : 3;
  h.dim[1] = static_cast<std::int16_t>(t.grid.w);
  h.dim[2] = static_cast<std::int16_t>(t.grid.h);
  h.dim[3] = static_cast<std::int16_t>(t.grid.d);
  h.dim[4] = static_cast<std::int16_t>(four_d ? t.channels : 1);
  for (int i = 5; i < 8; ++i) h.dim[i] = 1;
  h.datatype = t.stored_as == DType::kUInt8 ? kNiftiUInt8 : kNiftiFloat32;
  h.bitpix = t.stored_as == DType::kUInt8 ? 8 : 32;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(t.spacing[2]);
  h.pixdim[2] = static_cast<float>(t.spacing[1]);
  h.pixdim[3] = static_cast<float>(t.spacing[0]);
  h.pixdim[4] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.xyzt_units = 2;  // mm
  h.qform_code = 1;
  h.sform_code = 1;
  h.srow_x[0] = h.pixdim[1];
  h.srow_y[1] = h.pixdim[2];
  h.srow_z[2] = h.pixdim[3];
  std::memcpy(h.magic, "n+1\0", 4);
  std::vector<char> bytes(352, 0);
  std::memcpy(bytes.data(), &h, sizeof h);
  const auto payload = encode_payload(t);
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  write_bytes(path, bytes, gz);
}

Tensor4 read_nifti(const fs::path& path, bool gz) {
  const auto bytes = read_bytes(path, gz);
  if (bytes.size() < sizeof(Nifti1Header)) fail_data("truncated NIfTI header: " + path.string());
  Nifti1Header h;
  std::memcpy(&h, bytes.data(), sizeof h);
  if (h.sizeof_hdr != 348) fail_data("not a little-endian NIfTI-1 file: " + path.string());
  if (std::memcmp(h.magic, "n+1", 3) != 0) fail_data("unsupported NIfTI magic in " + path.string());
  if (h.dim[0] < 3 || h.dim[0] > 4) fail_data("expected a 3D or 4D image: " + path.string());
  Tensor4 t;
  t.grid = {h.dim[3], h.dim[2], h.dim[1]};
  t.channels = h.dim[0] == 4 ? h.dim[4] : 1;
  t.spacing = {h.pixdim[3] > 0 ? h.pixdim[3] : 1.0, h.pixdim[2] > 0 ? h.pixdim[2] : 1.0,
               h.pixdim[1] > 0 ? h.pixdim[1] : 1.0};
  const std::size_t n = t.grid.voxels() * static_cast<std::size_t>(t.channels);
  const std::size_t off = static_cast<std::size_t>(h.vox_offset);
  std::size_t elem = 0;
  switch (h.datatype) {
    case kNiftiUInt8: elem = 1; break;
    case kNiftiInt16: elem = 2; break;
    case kNiftiInt32: elem = 4; break;
    case kNiftiFloat32: elem = 4; break;
    case kNiftiFloat64: elem = 8; break;
    default: fail_data("unsupported NIfTI datatype " + std::to_string(h.datatype));
  }
  if (bytes.size() < off + n * elem) fail_data("truncated NIfTI payload: " + path.string());
  const char* p = bytes.data() + off;
  t.values.resize(n);
  t.stored_as = h.datatype == kNiftiUInt8 ? DType::kUInt8 : DType::kFloat32;
  for (std::size_t i = 0; i < n; ++i) {
    switch (h.datatype) {
      case kNiftiUInt8: t.values[i] = static_cast<std::uint8_t>(p[i]); break;
      case kNiftiInt16: { std::int16_t v; std::memcpy(&v, p + 2 * i, 2); t.values[i] = v; break; }
      case kNiftiInt32: { std::int32_t v; std::memcpy(&v, p + 4 * i, 4); t.values[i] = static_cast<float>(v); break; }
      case kNiftiFloat32: std::memcpy(&t.values[i], p + 4 * i, 4); break;
      case kNiftiFloat64: { double v; std::memcpy(&v, p + 8 * i, 8); t.values[i] = static_cast<float>(v); break; }
    }
  }
  if (h.scl_slope != 0.0f && (h.scl_slope != 1.0f || h.scl_inter != 0.0f))
    for (auto& v : t.values) v = v * h.scl_slope + h.scl_inter;
  return t;
}

fs::path sidecar(const fs::path& raw) { return fs::path(raw.string() + ".json"); }

void write_raw(const fs::path& path, const Tensor4& t) {
  nlohmann::json j;
  j["dtype"] = t.stored_as == DType::kUInt8 ? "uint8" : "float32";
  j["shape"] = {t.channels, t.grid.d, t.grid.h, t.grid.w};
  j["spacing"] = t.spacing;
  write_bytes(path, encode_payload(t), false);
  write_text(sidecar(path), j.dump(2) + "\n");
}

Tensor4 read_raw(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(sidecar(path)));
  } catch (const nlohmann::json::exception& e) {
    fail_data("malformed raw sidecar for " + path.string() + ": " + e.what());
  }
  Tensor4 t;
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 4) fail_data("raw sidecar shape must be [C, D, H, W]");
  t.channels = shape[0];
  t.grid = {shape[1], shape[2], shape[3]};
  t.spacing = j.at("spacing").get<Spacing>();
  const auto dtype = j.at("dtype").get<std::string>();
  const auto bytes = read_bytes(path, false);
  const std::size_t n = t.grid.voxels() * static_cast<std::size_t>(t.channels);
  t.values.resize(n);
  if (dtype == "uint8") {
    t.stored_as = DType::kUInt8;
    if (bytes.size() != n) fail_data("raw payload size mismatch: " + path.string());
    for (std::size_t i = 0; i < n; ++i) t.values[i] = static_cast<std::uint8_t>(bytes[i]);
  } else if (dtype == "float32") {
    if (bytes.size() != n * 4) fail_data("raw payload size mismatch: " + path.string());
    std::memcpy(t.values.data(), bytes.data(), bytes.size());
  } else {
    fail_data("unsupported raw dtype '" + dtype + "'");
  }
  return t;
}

}  // namespace

void write_tensor(const fs::path& path, const Tensor4& t) {
  if (t.values.size() != t.grid.voxels() * static_cast<std::size_t>(t.channels))
    fail_data("tensor size does not match its shape");
  switch (format_of(path)) {
    case Format::kNifti: write_nifti(path, t, false); break;
    case Format::kNiftiGz: write_nifti(path, t, true); break;
    case Format::kRaw: write_raw(path, t); break;
  }
}

Tensor4 read_tensor(const fs::path& path) {
  switch (format_of(path)) {
    case Format::kNifti: return read_nifti(path, false);
    case Format::kNiftiGz: return read_nifti(path, true);
    case Format::kRaw: return read_raw(path);
  }
  fail_data("unreachable");
}

void write_volume(const fs::path& path, const Volume& v) {
  Tensor4 t{v.grid(), v.channels(), v.spacing(), DType::kFloat32,
            std::vector<float>(v.data().begin(), v.data().end())};
  write_tensor(path, t);
}

Volume read_volume(const fs::path& path) {
  auto t = read_tensor(path);
  return Volume(t.grid, std::move(t.values), t.spacing);
}

void write_mask(const fs::path& path, const LabelMask& m) {
  Tensor4 t{m.grid(), 1, m.spacing(), DType::kUInt8, std::vector<float>(m.data().begin(), m.data().end())};
  write_tensor(path, t);
}

LabelMask read_mask(const fs::path& path, const ClassHierarchy& hierarchy) {
  const auto t = read_tensor(path);
  if (t.channels != 1) fail_data("label mask must be single-channel: " + path.string());
  std::vector<Label> labels(t.values.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const float v = t.values[i];
    if (v < 0.0f || v > 255.0f || v != std::floor(v))
      fail_data("non-integer label value in " + path.string());
    labels[i] = static_cast<Label>(v);
  }
  return LabelMask(t.grid, std::move(labels), hierarchy, t.spacing);
}

void write_channels(const fs::path& path, const SEMStack& s, Spacing spacing) {
  Tensor4 t{s.grid(), s.num_channels(), spacing, DType::kUInt8,
            std::vector<float>(s.data().begin(), s.data().end())};
  write_tensor(path, t);
}

void write_float_channels(const fs::path& path, const std::vector<float>& values, int channels,
                          Grid grid, Spacing spacing) {
  write_tensor(path, Tensor4{grid, channels, spacing, DType::kFloat32, values});
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail_data("missing file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail_data("cannot open " + path.string() + " for writing");
    out << text;
  }
  fs::rename(tmp, path);
}

}  // namespace segqc::io
