#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sapg/container.hpp"
#include "sapg/geometry.hpp"
#include "sapg/sonar.hpp"

namespace sapg {

// A simulated run on disk: manifest.json (seed, config hash, counts),
// index.json (per frame: time, vehicle pose, DVL ranges, frame file) and one
// binary sonar frame per timestamp under frames/.
struct DatasetFrame {
  double time = 0.0;
  Pose pose;  // vehicle body in world
  std::array<std::optional<double>, 4> dvl;
  std::string frame_file;  // relative to the dataset directory
};

struct Dataset {
  std::string dir;
  nlohmann::json manifest;
  std::vector<DatasetFrame> frames;

  SonarImage load_frame(size_t i) const {
    return io::load_sonar_frame(dir + "/" + frames[i].frame_file);
  }
};

namespace io {

inline nlohmann::json pose_to_json(const Pose& p) {
  nlohmann::json j;
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r[i * 3 + k] = p.rotation(i, k);
  j["r"] = r;  // row-major
  j["t"] = {p.translation[0], p.translation[1], p.translation[2]};
  return j;
}

inline Pose pose_from_json(const nlohmann::json& j) {
  Pose p;
  const auto r = j.at("r").get<std::vector<double>>();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) p.rotation(i, k) = r[i * 3 + k];
  p.translation = Vec3(j.at("t")[0], j.at("t")[1], j.at("t")[2]);
  return p;
}

inline void save_dataset_index(const Dataset& ds) {
  nlohmann::json idx;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : ds.frames) {
    nlohmann::json jf;
    jf["time"] = f.time;
    jf["file"] = f.frame_file;
    jf["pose"] = pose_to_json(f.pose);
    nlohmann::json dvl = nlohmann::json::array();
    for (const auto& r : f.dvl)
      dvl.push_back(r ? nlohmann::json(*r) : nlohmann::json(nullptr));
    jf["dvl"] = dvl;
    frames.push_back(jf);
  }
  idx["frames"] = frames;
  auto os = open_out(ds.dir + "/index.json");
  const std::string s = idx.dump(1);
  os.write(s.data(), static_cast<std::streamsize>(s.size()));

  auto om = open_out(ds.dir + "/manifest.json");
  const std::string m = ds.manifest.dump(1);
  om.write(m.data(), static_cast<std::streamsize>(m.size()));
}

inline Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  ds.dir = dir;
  {
    auto is = open_in(dir + "/manifest.json");
    is >> ds.manifest;
  }
  nlohmann::json idx;
  {
    auto is = open_in(dir + "/index.json");
    is >> idx;
  }
  for (const auto& jf : idx.at("frames")) {
    DatasetFrame f;
    f.time = jf.at("time").get<double>();
    f.frame_file = jf.at("file").get<std::string>();
    f.pose = pose_from_json(jf.at("pose"));
    const auto& dvl = jf.at("dvl");
    for (int i = 0; i < 4; ++i)
      if (!dvl[i].is_null()) f.dvl[i] = dvl[i].get<double>();
    ds.frames.push_back(std::move(f));
  }
  return ds;
}

inline std::string frame_file_name(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frames/%06zu.bin", i);
  return std::string(buf);
}

}  // namespace io

// Dataset split selection: the first half of the frames (by time order)
// trains, the second half evaluates.
enum class Split { All, Train, Eval };

inline Split split_from_string(const std::string& s) {
  if (s == "all") return Split::All;
  if (s == "train") return Split::Train;
  if (s == "eval") return Split::Eval;
  throw std::invalid_argument("unknown split: " + s);
}

inline const char* split_name(Split s) {
  switch (s) {
    case Split::All: return "all";
    case Split::Train: return "train";
    case Split::Eval: return "eval";
  }
  return "?";
}

inline std::pair<size_t, size_t> split_range(size_t frame_count, Split split) {
  const size_t mid = frame_count / 2;
  switch (split) {
    case Split::All: return {0, frame_count};
    case Split::Train: return {0, mid};
    case Split::Eval: return {mid, frame_count};
  }
  return {0, frame_count};
}

}  // namespace sapg
