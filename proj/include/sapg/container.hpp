#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sapg/binary_io.hpp"
#include "sapg/feature_grid.hpp"
#include "sapg/nn.hpp"
#include "sapg/sonar.hpp"
#include "sapg/tsdf.hpp"

namespace sapg::io {

// Shared artifact container: magic "SAPG", version u16, payload-type u16,
// little-endian payload. Grids are written densely in x-fastest cell order.
inline constexpr char kMagic[4] = {'S', 'A', 'P', 'G'};
inline constexpr uint16_t kVersion = 1;

enum class PayloadType : uint16_t {
  FeatureGrid = 1,
  Tsdf = 2,
  Samples = 3,
  SonarFrame = 4,
};

inline void write_header(std::ostream& os, PayloadType type) {
  os.write(kMagic, 4);
  write_le<uint16_t>(os, kVersion);
  write_le<uint16_t>(os, static_cast<uint16_t>(type));
}

inline void read_header(std::istream& is, PayloadType expected) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("container: bad magic");
  const uint16_t version = read_le<uint16_t>(is);
  if (version != kVersion) throw std::runtime_error("container: unsupported version");
  const uint16_t type = read_le<uint16_t>(is);
  if (type != static_cast<uint16_t>(expected))
    throw std::runtime_error("container: unexpected payload type");
}

inline void write_grid_spec(std::ostream& os, const GridSpec& spec) {
  for (int i = 0; i < 3; ++i) write_le<double>(os, spec.origin[i]);
  write_le<double>(os, spec.cell_size);
  for (int i = 0; i < 3; ++i) write_le<uint32_t>(os, static_cast<uint32_t>(spec.dims[i]));
}

inline GridSpec read_grid_spec(std::istream& is) {
  GridSpec spec;
  for (int i = 0; i < 3; ++i) spec.origin[i] = read_le<double>(is);
  spec.cell_size = read_le<double>(is);
  for (int i = 0; i < 3; ++i) spec.dims[i] = static_cast<int>(read_le<uint32_t>(is));
  spec.validate();
  return spec;
}

// Feature grid: per cell, 3n f32 sums then 3n u32 counts (axis blocks x,y,z).
inline void save_feature_grid(const FeatureGrid& grid, const std::string& path) {
  auto os = open_out(path);
  write_header(os, PayloadType::FeatureGrid);
  write_grid_spec(os, grid.spec());
  write_le<uint32_t>(os, static_cast<uint32_t>(grid.n()));
  const size_t total = grid.spec().cell_count();
  const size_t width = static_cast<size_t>(3) * grid.n();
  for (size_t c = 0; c < total; ++c) {
    const double* sums = grid.raw_sums(c);
    const uint32_t* counts = grid.raw_counts(c);
    for (size_t k = 0; k < width; ++k)
      write_le<float>(os, sums ? static_cast<float>(sums[k]) : 0.0f);
    for (size_t k = 0; k < width; ++k) write_le<uint32_t>(os, counts ? counts[k] : 0);
  }
  if (!os) throw std::runtime_error("failed writing " + path);
}

inline FeatureGrid load_feature_grid(const std::string& path) {
  auto is = open_in(path);
  read_header(is, PayloadType::FeatureGrid);
  const GridSpec spec = read_grid_spec(is);
  const int n = static_cast<int>(read_le<uint32_t>(is));
  FeatureGrid grid(spec, n);
  const size_t total = spec.cell_count();
  const size_t width = static_cast<size_t>(3) * n;
  std::vector<double> sums(width);
  std::vector<uint32_t> counts(width);
  for (size_t c = 0; c < total; ++c) {
    bool any = false;
    for (size_t k = 0; k < width; ++k) sums[k] = read_le<float>(is);
    for (size_t k = 0; k < width; ++k) {
      counts[k] = read_le<uint32_t>(is);
      any |= counts[k] != 0;
    }
    if (any) grid.set_raw(c, sums.data(), counts.data());
  }
  return grid;
}

// TSDF: per cell, f32 distance, f32 band weight, f32 carve weight, 3x f32
// gradient (zero = absent).
inline void save_tsdf(const TsdfGrid& tsdf, const std::string& path) {
  auto os = open_out(path);
  write_header(os, PayloadType::Tsdf);
  write_grid_spec(os, tsdf.spec());
  write_le<double>(os, tsdf.tau());
  const size_t total = tsdf.spec().cell_count();
  for (size_t c = 0; c < total; ++c) {
    write_le<float>(os, static_cast<float>(tsdf.distance(c)));
    write_le<float>(os, static_cast<float>(tsdf.band_weight(c)));
    write_le<float>(os, static_cast<float>(tsdf.carve_weight(c)));
    const Vec3 g = tsdf.gradient(c);
    for (int i = 0; i < 3; ++i) write_le<float>(os, static_cast<float>(g[i]));
  }
  if (!os) throw std::runtime_error("failed writing " + path);
}

inline TsdfGrid load_tsdf(const std::string& path) {
  auto is = open_in(path);
  read_header(is, PayloadType::Tsdf);
  const GridSpec spec = read_grid_spec(is);
  const double tau = read_le<double>(is);
  TsdfGrid tsdf(spec, tau);
  const size_t total = spec.cell_count();
  for (size_t c = 0; c < total; ++c) {
    const float dist = read_le<float>(is);
    const float band_w = read_le<float>(is);
    const float carve_w = read_le<float>(is);
    Vec3 g;
    for (int i = 0; i < 3; ++i) g[i] = read_le<float>(is);
    tsdf.set_cell(c, dist, band_w, carve_w, g);
  }
  return tsdf;
}

// Training samples, flat records for external inspection.
inline void save_samples(const SampleSet& set, const std::string& path) {
  auto os = open_out(path);
  write_header(os, PayloadType::Samples);
  write_le<uint32_t>(os, static_cast<uint32_t>(set.n));
  write_le<uint64_t>(os, static_cast<uint64_t>(set.count));
  const size_t width = static_cast<size_t>(3) * set.n;
  for (size_t i = 0; i < set.count; ++i) {
    for (size_t k = 0; k < width; ++k) write_le<float>(os, set.features[i * width + k]);
    write_le<uint8_t>(os, set.label[i]);
    write_le<uint8_t>(os, set.has_reg[i]);
    for (int k = 0; k < 3; ++k) write_le<double>(os, set.reg[i * 3 + k]);
    write_le<uint32_t>(os, set.cell[i]);
  }
  if (!os) throw std::runtime_error("failed writing " + path);
}

inline SampleSet load_samples(const std::string& path) {
  auto is = open_in(path);
  read_header(is, PayloadType::Samples);
  SampleSet set;
  set.n = static_cast<int>(read_le<uint32_t>(is));
  set.count = static_cast<size_t>(read_le<uint64_t>(is));
  const size_t width = static_cast<size_t>(3) * set.n;
  set.features.resize(set.count * width);
  set.label.resize(set.count);
  set.has_reg.resize(set.count);
  set.reg.resize(set.count * 3);
  set.cell.resize(set.count);
  for (size_t i = 0; i < set.count; ++i) {
    for (size_t k = 0; k < width; ++k) set.features[i * width + k] = read_le<float>(is);
    set.label[i] = read_le<uint8_t>(is);
    set.has_reg[i] = read_le<uint8_t>(is);
    for (int k = 0; k < 3; ++k) set.reg[i * 3 + k] = read_le<double>(is);
    set.cell[i] = read_le<uint32_t>(is);
  }
  return set;
}

// Sonar frame files inside a dataset directory.
inline void save_sonar_frame(const SonarImage& img, const std::string& path) {
  auto os = open_out(path);
  write_header(os, PayloadType::SonarFrame);
  const SonarConfig& c = img.config;
  write_le<double>(os, c.r_min);
  write_le<double>(os, c.r_max);
  write_le<uint32_t>(os, static_cast<uint32_t>(c.n_range_bins));
  write_le<double>(os, c.azimuth_fov);
  write_le<uint32_t>(os, static_cast<uint32_t>(c.n_beams));
  write_le<double>(os, c.elevation_fov);
  write_le<uint32_t>(os, static_cast<uint32_t>(c.n_elevation_samples));
  write_le<double>(os, c.noise_sigma);
  write_le<double>(os, c.march_step);
  write_le<double>(os, img.timestamp);
  for (float v : img.intensities) write_le<float>(os, v);
  if (!os) throw std::runtime_error("failed writing " + path);
}

inline SonarImage load_sonar_frame(const std::string& path) {
  auto is = open_in(path);
  read_header(is, PayloadType::SonarFrame);
  SonarImage img;
  SonarConfig& c = img.config;
  c.r_min = read_le<double>(is);
  c.r_max = read_le<double>(is);
  c.n_range_bins = static_cast<int>(read_le<uint32_t>(is));
  c.azimuth_fov = read_le<double>(is);
  c.n_beams = static_cast<int>(read_le<uint32_t>(is));
  c.elevation_fov = read_le<double>(is);
  c.n_elevation_samples = static_cast<int>(read_le<uint32_t>(is));
  c.noise_sigma = read_le<double>(is);
  c.march_step = read_le<double>(is);
  img.timestamp = read_le<double>(is);
  img.intensities.resize(static_cast<size_t>(c.n_range_bins) * c.n_beams);
  for (float& v : img.intensities) v = read_le<float>(is);
  return img;
}

// Model checkpoint: length-prefixed JSON header (architecture, metadata)
// followed by the raw little-endian f64 parameter blob. Round-trips are
// bit-exact.
inline void save_model(const nn::Model& model, const nlohmann::json& meta,
                       const std::string& path) {
  nlohmann::json arch;
  arch["input_len"] = model.input_len();
  arch["input_channels"] = model.input_channels();
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    nlohmann::json jl;
    jl["kind"] = nn::layer_kind_name(l.kind);
    if (l.kind == nn::LayerKind::Conv1D) {
      jl["out_channels"] = l.out_ch;
      jl["kernel"] = l.kernel;
      jl["stride"] = l.stride;
    } else if (l.kind == nn::LayerKind::Dense) {
      jl["units"] = l.out_ch;
    }
    layers.push_back(jl);
  }
  arch["layers"] = layers;
  nlohmann::json header;
  header["architecture"] = arch;
  header["meta"] = meta;
  header["param_count"] = model.param_count();

  auto os = open_out(path);
  write_string(os, header.dump());
  for (const auto& l : model.layers()) {
    for (double w : l.W) write_le<double>(os, w);
    for (double b : l.b) write_le<double>(os, b);
  }
  if (!os) throw std::runtime_error("failed writing " + path);
}

struct LoadedModel {
  nn::Model model;
  nlohmann::json meta;
};

inline LoadedModel load_model(const std::string& path) {
  auto is = open_in(path);
  const nlohmann::json header = nlohmann::json::parse(read_string(is));
  const auto& arch = header.at("architecture");
  nn::Model m(arch.at("input_len").get<int>(), arch.at("input_channels").get<int>());
  for (const auto& jl : arch.at("layers")) {
    const std::string kind = jl.at("kind").get<std::string>();
    if (kind == "conv1d")
      m.conv1d(jl.at("out_channels").get<int>(), jl.at("kernel").get<int>(),
               jl.at("stride").get<int>());
    else if (kind == "relu")
      m.relu();
    else if (kind == "sigmoid")
      m.sigmoid();
    else if (kind == "global_average_pool")
      m.global_average_pool();
    else if (kind == "flatten")
      m.flatten();
    else if (kind == "dense")
      m.dense(jl.at("units").get<int>());
    else
      throw std::runtime_error("load_model: unknown layer kind " + kind);
  }
  for (auto& l : m.layers()) {
    for (double& w : l.W) w = read_le<double>(is);
    for (double& b : l.b) b = read_le<double>(is);
  }
  return LoadedModel{std::move(m), header.value("meta", nlohmann::json::object())};
}

}  // namespace sapg::io
