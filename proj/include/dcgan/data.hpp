// Copyright 2026 The lesion-dcgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Lesion patch datasets: extraction from aligned volumes, per-volume
// percentile normalization, a synthetic stand-in generator, batch sampling,
// and the packed PXPD file format.
//
// Patches are [16, 16, 3] at 1 px/mm with channels (T2, ADC, KTRANS).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcgan/binary_io.hpp"
#include "dcgan/error.hpp"
#include "dcgan/rng.hpp"
#include "dcgan/tensor.hpp"

namespace dcgan {

inline constexpr std::size_t kPatchSize = 16;
inline constexpr std::size_t kPatchChannels = 3;
inline constexpr std::size_t kPatchElements = kPatchSize * kPatchSize * kPatchChannels;

enum class Modality { kT2 = 0, kAdc = 1, kKtrans = 2 };

inline constexpr std::array<Modality, 3> kChannelOrder = {
    Modality::kT2, Modality::kAdc, Modality::kKtrans};

inline std::string modality_name(Modality m) {
  switch (m) {
    case Modality::kT2: return "T2";
    case Modality::kAdc: return "ADC";
    case Modality::kKtrans: return "KTRANS";
  }
  return "?";
}

inline Modality parse_modality(const std::string& s) {
  for (auto m : kChannelOrder) {
    if (modality_name(m) == s) return m;
  }
  throw DataError("unknown modality '" + s + "'");
}

/// Scalar volume indexed [z, y, x]. Voxel (k, j, i) sits at world position
/// (i * sx, j * sy, k * sz) mm.
struct Volume {
  std::array<std::size_t, 3> dims{};     // depth, height, width
  std::array<double, 3> spacing{};       // mm per voxel along z, y, x
  Modality modality = Modality::kT2;
  std::vector<double> values;

  void validate() const {
    for (double s : spacing) {
      if (!(s > 0.0)) throw DataError("volume spacing must be positive");
    }
    if (values.size() != dims[0] * dims[1] * dims[2] || values.empty()) {
      throw DataError("volume value count does not match dims");
    }
  }

  double at(std::size_t z, std::size_t y, std::size_t x) const {
    return values[(z * dims[1] + y) * dims[2] + x];
  }
};

struct LesionRecord {
  std::string case_id;
  std::array<double, 3> center_mm{};  // x, y, z
};

struct NormalizationInfo {
  std::string method = "percentile";
  double lo_pct = 1.0;
  double hi_pct = 99.0;
};

struct PatchDataset {
  std::vector<Tensor> patches;
  std::vector<std::string> case_ids;
  NormalizationInfo normalization;

  std::size_t size() const { return patches.size(); }
  bool empty() const { return patches.empty(); }
};

// ---------------------------------------------------------------------------
// Extraction

namespace detail {

/// Bilinear sample of slice `z` at fractional (row, col). Exact on affine
/// functions; throws if the point lies outside the slice.
inline double bilinear(const Volume& v, std::size_t z, double row, double col,
                       const std::string& case_id) {
  const double max_row = static_cast<double>(v.dims[1] - 1);
  const double max_col = static_cast<double>(v.dims[2] - 1);
  if (!(row >= 0.0 && row <= max_row && col >= 0.0 && col <= max_col)) {
    throw DataError("case " + case_id + ": patch window exceeds " +
                    modality_name(v.modality) + " volume bounds");
  }
  const auto r0 = static_cast<std::size_t>(std::floor(row));
  const auto c0 = static_cast<std::size_t>(std::floor(col));
  const double fr = row - static_cast<double>(r0);
  const double fc = col - static_cast<double>(c0);
  const std::size_t r1 = std::min(r0 + 1, v.dims[1] - 1);
  const std::size_t c1 = std::min(c0 + 1, v.dims[2] - 1);
  const double top = (1.0 - fc) * v.at(z, r0, c0) + fc * v.at(z, r0, c1);
  const double bottom = (1.0 - fc) * v.at(z, r1, c0) + fc * v.at(z, r1, c1);
  return (1.0 - fr) * top + fr * bottom;
}

}  // namespace detail

/// First world-mm row/col of the window for a center coordinate.
inline double window_origin_mm(double center_mm) {
  return std::round(center_mm) - static_cast<double>(kPatchSize / 2);
}

/// Resamples the axial slice nearest the lesion center onto a 1 px/mm grid
/// spanning [round(c) - 8, round(c) + 8) mm in x and y, one channel per
/// modality in (T2, ADC, KTRANS) order.
inline Tensor extract_patch(const std::array<const Volume*, 3>& vols,
                            const LesionRecord& rec) {
  Tensor patch = Tensor::zeros(Shape{kPatchSize, kPatchSize, kPatchChannels});
  const double x0 = window_origin_mm(rec.center_mm[0]);
  const double y0 = window_origin_mm(rec.center_mm[1]);
  for (std::size_t c = 0; c < kPatchChannels; ++c) {
    const Volume& v = *vols[c];
    v.validate();
    if (v.modality != kChannelOrder[c]) {
      throw DataError("case " + rec.case_id + ": channel " + std::to_string(c) +
                      " expects " + modality_name(kChannelOrder[c]) + ", got " +
                      modality_name(v.modality));
    }
    const double zf = std::round(rec.center_mm[2] / v.spacing[0]);
    if (zf < 0.0 || zf >= static_cast<double>(v.dims[0])) {
      throw DataError("case " + rec.case_id + ": lesion slice outside " +
                      modality_name(v.modality) + " volume");
    }
    const auto z = static_cast<std::size_t>(zf);
    for (std::size_t r = 0; r < kPatchSize; ++r) {
      const double row = (y0 + static_cast<double>(r)) / v.spacing[1];
      for (std::size_t col = 0; col < kPatchSize; ++col) {
        const double cx = (x0 + static_cast<double>(col)) / v.spacing[2];
        patch.at({r, col, c}) = detail::bilinear(v, z, row, cx, rec.case_id);
      }
    }
  }
  return patch;
}

// ---------------------------------------------------------------------------
// Normalization

/// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw ArgumentError("percentile of empty input");
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline constexpr double kNormalizedFloor = -0.05;
inline constexpr double kNormalizedCeil = 1.05;

/// Maps the lo_pct percentile to 0 and hi_pct to 1, then clamps to
/// [-0.05, 1.05]. A degenerate (constant) input maps to zeros.
inline std::vector<double> normalize_channel(const std::vector<double>& values,
                                             double lo_pct, double hi_pct) {
  if (values.empty()) throw ArgumentError("normalize_channel: empty input");
  if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0)) {
    throw ArgumentError("normalize_channel: need 0 <= lo < hi <= 100");
  }
  const double lo = percentile(values, lo_pct);
  const double hi = percentile(values, hi_pct);
  std::vector<double> out(values.size(), 0.0);
  if (!(hi > lo)) return out;
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::clamp((values[i] - lo) * inv, kNormalizedFloor, kNormalizedCeil);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion: <case>_<MODALITY>.raw (f32 LE, z-y-x) + .json sidecar, and
// lesions.csv (case_id,x_mm,y_mm,z_mm).

inline Volume load_volume(const std::filesystem::path& dir,
                          const std::string& case_id, Modality m) {
  const std::string stem = case_id + "_" + modality_name(m);
  const auto sidecar_path = (dir / (stem + ".json")).string();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(sidecar_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar_path + ": " + e.what());
  }
  Volume v;
  try {
    const auto dims = meta.at("dims").get<std::vector<std::size_t>>();
    const auto spacing = meta.at("spacing").get<std::vector<double>>();
    if (dims.size() != 3 || spacing.size() != 3) {
      throw DataError(sidecar_path + ": dims and spacing need 3 entries");
    }
    std::copy(dims.begin(), dims.end(), v.dims.begin());
    std::copy(spacing.begin(), spacing.end(), v.spacing.begin());
    v.modality = parse_modality(meta.at("modality").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(sidecar_path + ": " + e.what());
  }
  if (v.modality != m) {
    throw DataError(sidecar_path + ": modality does not match file name");
  }
  const auto raw_path = (dir / (stem + ".raw")).string();
  const std::string raw = read_file(raw_path);
  const std::size_t count = v.dims[0] * v.dims[1] * v.dims[2];
  if (raw.size() != count * 4) {
    throw DataError(raw_path + ": expected " + std::to_string(count * 4) +
                    " bytes, got " + std::to_string(raw.size()));
  }
  ByteReader reader(raw, raw_path);
  v.values.resize(count);
  for (auto& x : v.values) x = reader.f32();
  v.validate();
  return v;
}

inline void save_volume(const std::filesystem::path& dir,
                        const std::string& case_id, const Volume& v) {
  v.validate();
  const std::string stem = case_id + "_" + modality_name(v.modality);
  nlohmann::json meta = {{"dims", v.dims},
                         {"spacing", v.spacing},
                         {"modality", modality_name(v.modality)}};
  write_file((dir / (stem + ".json")).string(), meta.dump(2) + "\n");
  ByteWriter w;
  for (double x : v.values) w.put_f32(static_cast<float>(x));
  write_file((dir / (stem + ".raw")).string(), w.bytes());
}

inline std::vector<LesionRecord> load_lesion_index(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty lesion index");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "case_id,x_mm,y_mm,z_mm") {
    throw DataError(path + ": expected header case_id,x_mm,y_mm,z_mm");
  }
  std::vector<LesionRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4 || fields[0].empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields");
    }
    LesionRecord rec{fields[0], {}};
    for (std::size_t i = 0; i < 3; ++i) {
      try {
        std::size_t used = 0;
        rec.center_mm[i] = std::stod(fields[i + 1], &used);
        if (used != fields[i + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": bad coordinate '" + fields[i + 1] + "'");
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// Full preparation pipeline: per-volume percentile normalization per
/// modality, then patch extraction. Patches are ordered by case id, then by
/// their order within the index.
inline PatchDataset build_dataset(const std::filesystem::path& dir,
                                  const std::vector<LesionRecord>& lesions,
                                  NormalizationInfo norm = {}) {
  std::vector<std::size_t> order(lesions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lesions[a].case_id < lesions[b].case_id;
  });

  PatchDataset ds;
  ds.normalization = norm;
  std::map<std::string, std::array<Volume, 3>> cache;
  for (std::size_t idx : order) {
    const LesionRecord& rec = lesions[idx];
    auto it = cache.find(rec.case_id);
    if (it == cache.end()) {
      std::array<Volume, 3> vols;
      for (std::size_t c = 0; c < 3; ++c) {
        vols[c] = load_volume(dir, rec.case_id, kChannelOrder[c]);
        vols[c].values = normalize_channel(vols[c].values, norm.lo_pct, norm.hi_pct);
      }
      it = cache.emplace(rec.case_id, std::move(vols)).first;
    }
    const auto& v = it->second;
    ds.patches.push_back(extract_patch({&v[0], &v[1], &v[2]}, rec));
    ds.case_ids.push_back(rec.case_id);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic stand-in data

namespace detail {

/// White noise smoothed by a separable Gaussian (sigma 1 px, radius 2,
/// edge-clamped), rescaled to the requested sample std.
inline std::vector<double> band_limited_noise(std::size_t n, double stddev,
                                              RngStream& rng) {
  std::vector<double> white(n * n);
  for (double& v : white) v = rng.normal();
  constexpr int kRadius = 2;
  std::array<double, 2 * kRadius + 1> taps{};
  double norm = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    taps[i + kRadius] = std::exp(-0.5 * i * i);
    norm += taps[i + kRadius];
  }
  for (double& t : taps) t /= norm;
  const auto clampi = [n](int v) {
    return static_cast<std::size_t>(std::clamp(v, 0, static_cast<int>(n) - 1));
  };
  std::vector<double> tmp(n * n, 0.0), out(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        s += taps[k + kRadius] * white[r * n + clampi(static_cast<int>(c) + k)];
      }
      tmp[r * n + c] = s;
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        s += taps[k + kRadius] * tmp[clampi(static_cast<int>(r) + k) * n + c];
      }
      out[r * n + c] = s;
    }
  }
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (double& v : out) v = (v - mean) * (sd > 0.0 ? stddev / sd : 0.0);
  return out;
}

}  // namespace detail

/// One synthetic lesion patch: a Gaussian blob that brightens KTRANS and
/// darkens ADC, over a textured T2 background.
inline Tensor synthetic_patch(RngStream& rng) {
  constexpr std::size_t n = kPatchSize;
  const double cy = rng.uniform(4.0, 12.0);
  const double cx = rng.uniform(4.0, 12.0);
  const double width = rng.uniform(1.5, 4.0);
  const double amplitude = rng.uniform(0.5, 1.0);
  const auto texture = detail::band_limited_noise(n, 0.15, rng);

  Tensor patch = Tensor::zeros(Shape{n, n, kPatchChannels});
  auto d = patch.mutable_data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(c) - cx;
      const double blob = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
      const std::size_t p = (r * n + c) * kPatchChannels;
      d[p + 0] = std::clamp(0.5 + texture[r * n + c], 0.0, 1.0);
      d[p + 1] = std::clamp(0.8 - amplitude * blob + rng.normal(0.0, 0.05), 0.0, 1.0);
      d[p + 2] = std::clamp(amplitude * blob + rng.normal(0.0, 0.05), 0.0, 1.0);
    }
  }
  return patch;
}

inline PatchDataset make_synthetic_dataset(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ArgumentError("synthetic dataset count must be >= 1");
  PatchDataset ds;
  ds.normalization = NormalizationInfo{"synthetic", 0.0, 100.0};
  ds.patches.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng = RngStream::derive(seed, i, StreamTag::kSynthetic);
    ds.patches.push_back(synthetic_patch(rng));
    ds.case_ids.push_back("synthetic-" + std::to_string(i));
  }
  return ds;
}

/// m patches drawn uniformly with replacement.
inline std::vector<const Tensor*> sample_batch(const PatchDataset& ds,
                                               std::size_t m, RngStream& rng) {
  if (ds.empty()) throw DataError("cannot sample from an empty dataset");
  std::vector<const Tensor*> out(m);
  for (auto& p : out) p = &ds.patches[rng.below(ds.size())];
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

/// Pearson correlation between two channels of one patch; 0 when either
/// channel is constant.
inline double channel_correlation(const Tensor& patch, std::size_t a,
                                  std::size_t b) {
  const std::size_t c = patch.dim(2);
  const std::size_t n = patch.size() / c;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += patch[i * c + a];
    mb += patch[i * c + b];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = patch[i * c + a] - ma;
    const double db = patch[i * c + b] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline double mean_adc_ktrans_correlation(const std::vector<Tensor>& patches) {
  if (patches.empty()) throw ArgumentError("no patches");
  double s = 0.0;
  for (const auto& p : patches) s += channel_correlation(p, 1, 2);
  return s / static_cast<double>(patches.size());
}

// ---------------------------------------------------------------------------
// PXPD: "PXPD", u32 version, u32 count, count * 768 f32 LE (row-major
// [16,16,3]), then a u32-length-prefixed UTF-8 JSON provenance block.

inline constexpr std::string_view kDatasetMagic = "PXPD";
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::string encode_dataset(const PatchDataset& ds) {
  ByteWriter w;
  w.put_bytes(kDatasetMagic);
  w.put_u32(kDatasetVersion);
  w.put_u32(static_cast<std::uint32_t>(ds.size()));
  for (const auto& p : ds.patches) {
    if (p.size() != kPatchElements) {
      throw ShapeError("dataset patch has shape " + p.shape().to_string());
    }
    for (double v : p.data()) w.put_f32(static_cast<float>(v));
  }
  nlohmann::json prov = {
      {"case_ids", ds.case_ids},
      {"normalization",
       {{"method", ds.normalization.method},
        {"lo_pct", ds.normalization.lo_pct},
        {"hi_pct", ds.normalization.hi_pct}}}};
  w.put_string(prov.dump());
  return w.bytes();
}

inline PatchDataset decode_dataset(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  if (r.take(4) != kDatasetMagic) throw FormatError(what + ": bad magic, not a PXPD file");
  const auto version = r.u32();
  if (version != kDatasetVersion) {
    throw FormatError(what + ": unsupported PXPD version " + std::to_string(version));
  }
  const auto count = r.u32();
  if (static_cast<std::uint64_t>(count) * kPatchElements * 4 > r.remaining()) {
    throw FormatError(what + ": truncated patch payload");
  }
  PatchDataset ds;
  ds.patches.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::vector<double> v(kPatchElements);
    for (double& x : v) x = r.f32();
    ds.patches.emplace_back(Shape{kPatchSize, kPatchSize, kPatchChannels}, std::move(v));
  }
  try {
    const auto prov = nlohmann::json::parse(r.string());
    ds.case_ids = prov.at("case_ids").get<std::vector<std::string>>();
    const auto& n = prov.at("normalization");
    ds.normalization = {n.at("method").get<std::string>(),
                        n.at("lo_pct").get<double>(), n.at("hi_pct").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": bad provenance block: " + e.what());
  }
  if (ds.case_ids.size() != ds.patches.size()) {
    throw FormatError(what + ": provenance count does not match patch count");
  }
  return ds;
}

inline void save_dataset(const PatchDataset& ds, const std::string& path) {
  write_file(path, encode_dataset(ds));
}

inline PatchDataset load_dataset(const std::string& path) {
  return decode_dataset(read_file(path), path);
}

}  // namespace dcgan
