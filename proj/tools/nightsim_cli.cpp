// nightsim: night-time compensation of day images, loss and metric reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nightsim/depth_metrics.hpp"
#include "nightsim/error.hpp"
#include "nightsim/image_io.hpp"
#include "nightsim/light_bank.hpp"
#include "nightsim/pipeline.hpp"
#include "nightsim/selfsup_loss.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nightsim;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void emit(const json& report, const std::string& output) {
  const std::string text = report.dump(2) + "\n";
  if (output.empty() || output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(output);
  if (!out) throw IoError("cannot write " + output);
  out << text;
}

fs::path resolve(const std::string& p, const fs::path& base) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

Intrinsics intrinsics_from(const json& j) {
  Intrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(),
               j.at("cx").get<double>(), j.at("cy").get<double>()};
  k.validate();
  return k;
}

// ---- compensate ----

struct CompensateArgs {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string config;
  int workers = 1;
  std::string light_bank;
  std::optional<bool> procedural_flares;
  std::string calibration;
  std::string noise_family;
  bool assume_linear = false;
  std::optional<std::int64_t> step;
  std::string output_dir;
};

int run_compensate(const CompensateArgs& a) {
  pipeline::JobManifest m = pipeline::load_manifest(a.manifest);
  if (a.seed) m.seed = *a.seed;
  if (!a.config.empty()) {
    m.config = load_config(a.config);
    m.schedule.bpg_rate = m.config.bpg_rate;
    m.schedule.ing_rate = m.config.ing_rate;
  }
  if (!a.calibration.empty()) {
    m.config.calibration = CalibrationTable::load(a.calibration);
  }
  if (!a.noise_family.empty()) {
    m.config.read_noise_family = noise_family_from_string(a.noise_family);
  }
  if (!a.light_bank.empty()) m.light_bank = fs::path(a.light_bank);
  if (a.procedural_flares) m.procedural_flares = *a.procedural_flares;
  if (a.assume_linear) m.assume_linear = true;
  if (a.step) m.step = *a.step;
  if (!a.output_dir.empty()) m.output_dir = a.output_dir;
  m.config.validate();

  for (const std::string& p : pipeline::validate_manifest(m)) {
    std::cerr << "warning: " << p << "\n";
  }
  const pipeline::BatchSummary s = pipeline::run_batch(m, a.workers);
  for (const std::string& w : s.warnings) std::cerr << "warning: " << w << "\n";
  for (const pipeline::EntryResult& r : s.entries) {
    if (!r.ok) std::cerr << "entry " << r.index << " failed: " << r.error << "\n";
  }
  std::cout << "compensated " << s.succeeded << " of " << s.entries.size()
            << " entries into " << m.output_dir.string() << "\n";
  return s.failed == 0 ? 0 : 1;
}

// ---- loss-eval ----

Plane plane_or_constant(const json& j, int w, int h, const fs::path& base) {
  if (j.is_number()) return Plane(w, h, j.get<float>());
  Plane p = io::load_plane(resolve(j.get<std::string>(), base), 1.0);
  if (!p.same_shape(w, h)) {
    throw DimensionMismatchError("illumination map has the wrong size");
  }
  return p;
}

loss::Pose pose_from(const json& j) {
  loss::Pose pose;
  if (j.contains("rotation")) {
    const json& r = j.at("rotation");
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        pose.rotation(row, col) = r.at(row).at(col).get<double>();
      }
    }
  }
  if (j.contains("translation")) {
    const json& t = j.at("translation");
    pose.translation = {t.at(0).get<double>(), t.at(1).get<double>(),
                        t.at(2).get<double>()};
  }
  pose.validate();
  return pose;
}

loss::ScaleInputs scale_from(const json& j, const Intrinsics& k,
                             const fs::path& base, bool assume_linear) {
  loss::ScaleInputs in;
  const io::DecodeOptions decode{assume_linear};
  in.target =
      io::load_image(resolve(j.at("target").get<std::string>(), base), decode)
          .image;
  in.depth = io::load_depth(resolve(j.at("depth").get<std::string>(), base),
                            j.value("depth_png_scale", 1.0 / 256.0));
  require_valid_pair(in.target, in.depth);
  if (j.contains("disparity")) {
    in.disparity = io::load_plane(
        resolve(j.at("disparity").get<std::string>(), base), 1.0);
  } else {
    in.disparity = Plane(in.depth.width(), in.depth.height());
    for (std::size_t i = 0; i < in.depth.size(); ++i) {
      in.disparity[i] = 1.f / in.depth[i];
    }
  }
  in.k = k;
  const int w = in.target.width();
  const int h = in.target.height();
  for (const json& s : j.at("sources")) {
    loss::SourceFrame f;
    f.image =
        io::load_image(resolve(s.at("image").get<std::string>(), base), decode)
            .image;
    f.pose = pose_from(s.value("pose", json::object()));
    f.illumination = loss::IlluminationChange::identity(w, h);
    if (s.contains("illumination")) {
      const json& il = s.at("illumination");
      if (il.contains("c")) f.illumination.c = plane_or_constant(il["c"], w, h, base);
      if (il.contains("b")) f.illumination.b = plane_or_constant(il["b"], w, h, base);
    }
    f.illumination.validate();
    in.sources.push_back(std::move(f));
  }
  return in;
}

// Four scales by area downsampling of a full-resolution instance.
std::vector<loss::ScaleInputs> build_pyramid(const loss::ScaleInputs& full) {
  std::vector<loss::ScaleInputs> scales;
  for (int l = 0; l < loss::kScaleCount; ++l) {
    const int f = 1 << l;
    if (f == 1) {
      scales.push_back(full);
      continue;
    }
    loss::ScaleInputs s;
    s.target = area_downsample(full.target, f);
    s.depth = area_downsample(full.depth, f);
    s.disparity = area_downsample(full.disparity, f);
    s.k = full.k.resized(static_cast<double>(s.target.width()) /
                         full.target.width());
    for (const loss::SourceFrame& src : full.sources) {
      s.sources.push_back({area_downsample(src.image, f), src.pose,
                           {area_downsample(src.illumination.c, f),
                            area_downsample(src.illumination.b, f)}});
    }
    scales.push_back(std::move(s));
  }
  return scales;
}

int run_loss_eval(const std::string& spec_path, const std::string& output,
                  bool assume_linear) {
  const json spec = read_json(spec_path);
  const fs::path base = fs::path(spec_path).parent_path();
  const Intrinsics k = intrinsics_from(spec.at("intrinsics"));
  const double alpha = spec.value("alpha", loss::kDefaultAlpha);
  const double lambda = spec.value("lambda", loss::kDefaultSmoothnessWeight);

  std::vector<loss::ScaleInputs> scales;
  if (spec.contains("scales")) {
    Intrinsics scale_k = k;
    for (const json& s : spec.at("scales")) {
      if (s.contains("intrinsics")) scale_k = intrinsics_from(s["intrinsics"]);
      scales.push_back(scale_from(s, scale_k, base, assume_linear));
    }
  } else {
    scales = build_pyramid(scale_from(spec, k, base, assume_linear));
  }
  const loss::LossReport r = loss::evaluate_loss(scales, alpha, lambda);
  json per_scale = json::array();
  for (std::size_t i = 0; i < r.scales.size(); ++i) {
    per_scale.push_back({{"scale", 1.0 / (1 << i)},
                         {"L_ss", r.scales[i].l_ss},
                         {"L_g", r.scales[i].l_g}});
  }
  emit({{"alpha", alpha},
        {"lambda", lambda},
        {"scales", per_scale},
        {"L_total", r.total}},
       output);
  return 0;
}

// ---- metrics ----

json report_json(const metrics::MetricReport& r) {
  return {{"abs_rel", r.abs_rel},   {"sq_rel", r.sq_rel},
          {"rmse", r.rmse},         {"rmse_log", r.rmse_log},
          {"delta1", r.delta1},     {"delta2", r.delta2},
          {"delta3", r.delta3},     {"valid_pixel_count", r.valid_pixel_count},
          {"median_ratio", r.median_ratio}};
}

struct MetricsArgs {
  std::string manifest;
  std::string output;
  std::string clip_pred;
  std::optional<double> max_depth;
  std::optional<double> min_depth;
  std::string crop;
  bool no_median_scale = false;
};

int run_metrics(const MetricsArgs& a) {
  const json spec = read_json(a.manifest);
  const fs::path base = fs::path(a.manifest).parent_path();
  metrics::EvalOptions opts;
  if (spec.contains("options")) {
    const json& o = spec.at("options");
    opts.min_depth = o.value("min_depth", opts.min_depth);
    opts.max_depth = o.value("max_depth", opts.max_depth);
    opts.median_scale = o.value("median_scale", opts.median_scale);
    if (o.contains("crop")) {
      opts.crop = metrics::crop_from_string(o["crop"].get<std::string>());
    }
    if (o.contains("clip_pred")) {
      opts.clip =
          metrics::clip_mode_from_string(o["clip_pred"].get<std::string>());
    }
  }
  if (!a.clip_pred.empty()) {
    opts.clip = metrics::clip_mode_from_string(a.clip_pred);
  }
  if (a.max_depth) opts.max_depth = *a.max_depth;
  if (a.min_depth) opts.min_depth = *a.min_depth;
  if (!a.crop.empty()) opts.crop = metrics::crop_from_string(a.crop);
  if (a.no_median_scale) opts.median_scale = false;
  opts.validate();

  std::vector<metrics::MetricReport> frames;
  json per_frame = json::array();
  int failures = 0;
  for (const json& f : spec.at("frames")) {
    const std::string pred_path = f.at("pred").get<std::string>();
    try {
      const DepthMap pred =
          io::load_depth(resolve(pred_path, base),
                         f.value("pred_png_scale", 1.0 / 256.0));
      const Plane gt = io::load_plane(resolve(f.at("gt").get<std::string>(), base),
                                      f.value("gt_png_scale", 1.0 / 256.0));
      const metrics::MetricReport r =
          metrics::evaluate(pred, metrics::SparseDepth::from_plane(gt), opts);
      frames.push_back(r);
      json row = report_json(r);
      row["pred"] = pred_path;
      per_frame.push_back(row);
    } catch (const Error& e) {
      ++failures;
      per_frame.push_back({{"pred", pred_path}, {"error", e.what()}});
    }
  }
  emit({{"options",
         {{"min_depth", opts.min_depth},
          {"max_depth", opts.max_depth},
          {"median_scale", opts.median_scale},
          {"crop", metrics::to_string(opts.crop)},
          {"clip_pred", metrics::to_string(opts.clip)}}},
        {"aggregation", "per_frame_mean"},
        {"frames", per_frame},
        {"aggregate", report_json(metrics::aggregate(frames))}},
       a.output);
  return failures == 0 ? 0 : 1;
}

// ---- flare-synth ----

int run_flare_synth(std::uint64_t seed, int count, int size,
                    const std::string& output_dir) {
  fs::create_directories(output_dir);
  const RandomStream root = RandomStream(seed).child("flare-synth");
  for (int i = 0; i < count; ++i) {
    RandomStream s = root.child(static_cast<std::uint64_t>(i));
    const lights::LightSourceImage flare = lights::synthesize_flare(s, size);
    char name[32];
    std::snprintf(name, sizeof(name), "flare_%04d.png", i);
    io::write_png_rgba(fs::path(output_dir) / name, flare.rgb, flare.alpha, 8,
                       /*assume_linear=*/true);
  }
  std::cout << "wrote " << count << " flares to " << output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Night-time distribution compensation for day images"};
  app.require_subcommand(1);

  CompensateArgs comp;
  auto* c = app.add_subcommand("compensate", "Compensate a manifest of images");
  c->add_option("manifest", comp.manifest, "Job manifest (JSON)")->required();
  c->add_option("--seed", comp.seed, "Override the manifest seed");
  c->add_option("--config", comp.config, "Compensation config (JSON)");
  c->add_option("--workers", comp.workers, "Worker threads")
      ->check(CLI::PositiveNumber);
  c->add_option("--light-bank", comp.light_bank, "Directory of light PNGs");
  c->add_flag("--procedural-flares,!--no-procedural-flares",
              comp.procedural_flares,
              "Fall back to procedural flares when the bank is empty");
  c->add_option("--calibration", comp.calibration, "Noise calibration (JSON)");
  c->add_option("--noise-family", comp.noise_family, "Read-noise family")
      ->check(CLI::IsMember({"gaussian", "tukey"}));
  c->add_flag("--assume-linear", comp.assume_linear,
              "Treat PNG values as linear light");
  c->add_option("--step", comp.step, "Training step used for gating");
  c->add_option("--output-dir", comp.output_dir, "Override output directory");

  std::string loss_spec;
  std::string loss_out;
  bool loss_linear = false;
  auto* l = app.add_subcommand("loss-eval", "Evaluate the self-supervised loss");
  l->add_option("spec", loss_spec, "Loss input description (JSON)")->required();
  l->add_option("-o,--output", loss_out, "Report path (default stdout)");
  l->add_flag("--assume-linear", loss_linear,
              "Treat PNG values as linear light");

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "Depth metrics over a manifest");
  m->add_option("manifest", met.manifest, "Prediction/GT manifest (JSON)")
      ->required();
  m->add_option("-o,--output", met.output, "Report path (default stdout)");
  m->add_option("--clip-pred", met.clip_pred, "Out-of-range predictions")
      ->check(CLI::IsMember({"clamp", "mask"}));
  m->add_option("--max-depth", met.max_depth, "GT depth cap in meters");
  m->add_option("--min-depth", met.min_depth, "GT depth floor in meters");
  m->add_option("--crop", met.crop, "Dataset pre-crop")
      ->check(CLI::IsMember({"none", "nuscenes", "robotcar"}));
  m->add_flag("--no-median-scale", met.no_median_scale,
              "Disable median scaling");

  std::uint64_t flare_seed = 0;
  int flare_count = 8;
  int flare_size = 256;
  std::string flare_dir = "flares";
  auto* f = app.add_subcommand("flare-synth", "Write procedural flare PNGs");
  f->add_option("--seed", flare_seed, "Random seed");
  f->add_option("--count", flare_count, "Number of flares")
      ->check(CLI::PositiveNumber);
  f->add_option("--size", flare_size, "Side length in pixels")
      ->check(CLI::Range(16, 8192));
  f->add_option("--output-dir", flare_dir, "Destination directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c->parsed()) return run_compensate(comp);
    if (l->parsed()) return run_loss_eval(loss_spec, loss_out, loss_linear);
    if (m->parsed()) return run_metrics(met);
    if (f->parsed()) {
      return run_flare_synth(flare_seed, flare_count, flare_size, flare_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
