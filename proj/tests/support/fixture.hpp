#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

#include "nightsim/image_io.hpp"
#include "support/scene.hpp"

namespace nightsim::testing {

// Writes `count` road scenes as PNG + PFM pairs into `dir` and returns the
// manifest "entries" array that references them by relative path.
inline nlohmann::json write_scene_entries(const std::filesystem::path& dir,
                                          int count, int width = 96,
                                          int height = 64) {
  std::filesystem::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    const double h_c = 1.2 + 0.05 * (i % 7);
    const double wall = 20.0 + 2.0 * (i % 5);
    const SyntheticScene s = make_road_scene(width, height, h_c, wall);
    const std::string stem = "scene_" + std::to_string(i);
    io::write_png(dir / (stem + ".png"), s.image);
    io::write_pfm(dir / (stem + ".pfm"), static_cast<const Plane&>(s.depth));
    entries.push_back({{"image_path", stem + ".png"},
                       {"depth_path", stem + ".pfm"},
                       {"camera_height_m", h_c},
                       {"intrinsics",
                        {{"fx", s.k.fx}, {"fy", s.k.fy}, {"cx", s.k.cx},
                         {"cy", s.k.cy}}}});
  }
  return entries;
}

// Temporary directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("nightsim_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace nightsim::testing
