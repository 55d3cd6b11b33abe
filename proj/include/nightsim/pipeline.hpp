#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nightsim/bpg.hpp"
#include "nightsim/config.hpp"
#include "nightsim/image_io.hpp"
#include "nightsim/ing.hpp"
#include "nightsim/light_bank.hpp"
#include "nightsim/random.hpp"
#include "nightsim/raster.hpp"
#include "nightsim/rerender.hpp"

// Per-image compensation (gating, BPG, re-rendering, ING) and batch jobs.
namespace nightsim::pipeline {

enum class Ramp { kStep, kLinear };

std::string to_string(Ramp ramp);
Ramp ramp_from_string(const std::string& name);

struct GateSchedule {
  std::int64_t start_step = 20000;
  double bpg_rate = 0.5;
  double ing_rate = 0.5;
  Ramp ramp = Ramp::kStep;
  // Steps over which a linear ramp climbs from 0 to the full rate.
  std::int64_t ramp_length = 0;

  static GateSchedule from_config(const CompensationConfig& cfg);
  void validate() const;
  // Rate in effect at `step` for a configured full rate.
  double effective_rate(double rate, std::int64_t step) const;
  // First step at which both gates run at their full rate.
  std::int64_t ramped_step() const;
};

struct GateDecision {
  bool apply_bpg = false;
  bool apply_ing = false;
};

// Independent Bernoulli draws from stream.child("bpg") and
// stream.child("ing"). Throws RangeError for a negative step.
GateDecision gate(const RandomStream& stream, std::int64_t step,
                  const GateSchedule& sched);

// One manifest row.
struct Entry {
  std::filesystem::path image_path;
  std::filesystem::path depth_path;
  double depth_png_scale = 1.0 / 256.0;
  DepthUnit depth_unit = DepthUnit::kUnscaled;
  Intrinsics intrinsics;
  std::optional<double> camera_height_m;
};

struct Frame {
  Image image;
  DepthMap depth;
  Intrinsics k;
  double camera_height_m = 1.5;
  std::size_t clamped_pixels = 0;
};

// Loads and validates an entry; the camera height falls back to the config.
Frame load_frame(const Entry& entry, const CompensationConfig& cfg,
                 const io::DecodeOptions& decode = {});

struct Context {
  CompensationConfig config;
  GateSchedule schedule;
  std::int64_t step = 20000;
  const lights::LightBank* bank = nullptr;  // may be null or empty
  std::filesystem::path bank_dir;           // recorded in provenance only
  bool procedural_flares = true;
};

// Every scalar that shapes one output. Rendering from a stored record needs
// no random draws except the per-pixel noise, which is replayed from the
// recorded stream path.
struct CompensationParams {
  GateDecision gates;
  std::int64_t step = 0;
  rerender::ScaleEstimate scale;
  bool rerendered = false;
  std::optional<bpg::BpgSample> bpg;
  std::optional<lights::SourceChoice> source;
  std::array<double, 3> light_color{0, 0, 0};  // derived, set after render
  std::optional<ing::IngSample> ing;
  std::uint64_t noise_seed = 0;
  std::vector<std::string> noise_path;
};

// Stream of entry `index`: path ["entry", index] under the job seed.
RandomStream entry_stream(std::uint64_t seed, std::size_t index);

CompensationParams sample_params(const Frame& frame, const RandomStream& stream,
                                 const Context& ctx);

struct RenderStats {
  std::size_t degenerate_reflection_pixels = 0;
  // Alpha-weighted mean color of the realized light source.
  std::array<double, 3> light_color{0, 0, 0};
};

Image render(const Frame& frame, const CompensationParams& params,
             const Context& ctx, RenderStats* stats = nullptr);

struct Compensated {
  Image image;
  CompensationParams params;
  RenderStats stats;
};

Compensated compensate_one(const Frame& frame, const RandomStream& stream,
                           const Context& ctx);

nlohmann::json params_to_json(const CompensationParams& p);
CompensationParams params_from_json(const nlohmann::json& j);

struct JobManifest {
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> step;
  CompensationConfig config;
  GateSchedule schedule;
  bool schedule_given = false;
  std::optional<std::filesystem::path> light_bank;
  bool procedural_flares = true;
  bool assume_linear = false;
  std::vector<Entry> entries;
};

// Relative paths resolve against `base_dir` (the manifest's directory).
JobManifest manifest_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir);
JobManifest load_manifest(const std::filesystem::path& path);
// One message per referenced file that does not exist.
std::vector<std::string> validate_manifest(const JobManifest& m);

struct EntryResult {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  std::filesystem::path output_image;
  std::filesystem::path provenance;
};

struct BatchSummary {
  std::vector<EntryResult> entries;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// Output stems; a stem shared by several entries gets "_<index>" appended.
std::vector<std::string> output_stems(const JobManifest& m);

// Writes `<stem>_lrn.png`, `<stem>_prov.json` per entry and summary.json.
// Failing entries are recorded and the batch continues.
BatchSummary run_batch(const JobManifest& m, int workers);

}  // namespace nightsim::pipeline
