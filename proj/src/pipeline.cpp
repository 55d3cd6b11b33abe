#include "nightsim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <thread>

#include "nightsim/error.hpp"

namespace nightsim::pipeline {

using nlohmann::json;

namespace {

json vec_json(const Eigen::Vector3d& v) {
  return json::array({v.x(), v.y(), v.z()});
}

Eigen::Vector3d vec_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json augmentation_json(const lights::AugmentationParams& a) {
  return {{"rotation", a.rotation},     {"flip_h", a.flip_h},
          {"brightness", a.brightness}, {"contrast", a.contrast},
          {"saturation", a.saturation}, {"blur_sigma", a.blur_sigma}};
}

lights::AugmentationParams augmentation_from(const json& j) {
  lights::AugmentationParams a;
  a.rotation = j.at("rotation").get<double>();
  a.flip_h = j.at("flip_h").get<bool>();
  a.brightness = j.at("brightness").get<double>();
  a.contrast = j.at("contrast").get<double>();
  a.saturation = j.at("saturation").get<double>();
  a.blur_sigma = j.at("blur_sigma").get<double>();
  return a;
}

json intrinsics_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

Intrinsics intrinsics_from(const json& j) {
  Intrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  return k;
}

std::filesystem::path resolve(const std::filesystem::path& p,
                              const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string to_string(Ramp ramp) {
  return ramp == Ramp::kStep ? "step" : "linear";
}

Ramp ramp_from_string(const std::string& name) {
  if (name == "step") return Ramp::kStep;
  if (name == "linear") return Ramp::kLinear;
  throw ConfigError("unknown ramp '" + name + "'");
}

GateSchedule GateSchedule::from_config(const CompensationConfig& cfg) {
  GateSchedule s;
  s.bpg_rate = cfg.bpg_rate;
  s.ing_rate = cfg.ing_rate;
  return s;
}

void GateSchedule::validate() const {
  if (start_step < 0) throw ConfigError("start_step must be nonnegative");
  if (ramp_length < 0) throw ConfigError("ramp_length must be nonnegative");
  if (!(bpg_rate >= 0.0 && bpg_rate <= 1.0) ||
      !(ing_rate >= 0.0 && ing_rate <= 1.0)) {
    throw ConfigError("gate rates must be in [0,1]");
  }
}

double GateSchedule::effective_rate(double rate, std::int64_t step) const {
  if (step < start_step) return 0.0;
  if (ramp == Ramp::kStep || ramp_length == 0) return rate;
  const double progress = static_cast<double>(step - start_step) /
                          static_cast<double>(ramp_length);
  return rate * std::min(1.0, progress);
}

std::int64_t GateSchedule::ramped_step() const {
  return ramp == Ramp::kLinear ? start_step + ramp_length : start_step;
}

GateDecision gate(const RandomStream& stream, std::int64_t step,
                  const GateSchedule& sched) {
  if (step < 0) throw RangeError("step must be nonnegative");
  RandomStream b = stream.child("bpg");
  RandomStream i = stream.child("ing");
  // Both draws happen regardless of the rates so that all gates consume
  // the same stream positions.
  const double ub = b.next_double();
  const double ui = i.next_double();
  return {ub < sched.effective_rate(sched.bpg_rate, step),
          ui < sched.effective_rate(sched.ing_rate, step)};
}

Frame load_frame(const Entry& entry, const CompensationConfig& cfg,
                 const io::DecodeOptions& decode) {
  entry.intrinsics.validate();
  Frame f;
  io::LoadedImage img = io::load_image(entry.image_path, decode);
  f.image = std::move(img.image);
  f.clamped_pixels = img.clamped;
  f.depth = io::load_depth(entry.depth_path, entry.depth_png_scale,
                           entry.depth_unit);
  f.k = entry.intrinsics;
  f.camera_height_m = entry.camera_height_m.value_or(cfg.camera_height_m);
  if (!(f.camera_height_m > 0.0)) {
    throw ConfigError("camera height must be positive");
  }
  require_valid_pair(f.image, f.depth);
  return f;
}

RandomStream entry_stream(std::uint64_t seed, std::size_t index) {
  const std::vector<std::string> path = {"entry", std::to_string(index)};
  return RandomStream::from_path(seed, path);
}

CompensationParams sample_params(const Frame& frame, const RandomStream& stream,
                                 const Context& ctx) {
  const CompensationConfig& cfg = ctx.config;
  CompensationParams p;
  p.step = ctx.step;
  p.gates = gate(stream.child("gate"), ctx.step, ctx.schedule);

  if (p.gates.apply_bpg) {
    p.scale.camera_height = frame.camera_height_m;
    if (frame.depth.unit() == DepthUnit::kMeters) {
      p.scale.s = 1.0;
    } else {
      const rerender::PointCloud unscaled =
          rerender::structured_point_cloud(frame.depth, frame.k, 1.0);
      rerender::ScaleOptions opts;
      opts.cone_deg = cfg.ground_cone_deg;
      opts.min_ground_pixels = cfg.min_ground_pixels;
      opts.invert = cfg.invert_scale;
      p.scale = rerender::estimate_scale(
          frame.depth, frame.k, rerender::point_cloud_normals(unscaled),
          frame.camera_height_m, opts);
    }
    p.rerendered = cfg.rerender && !p.scale.low_confidence;

    const RandomStream bpg_stream = stream.child("bpg");
    const lights::LightBank empty;
    const lights::LightBank& bank = ctx.bank ? *ctx.bank : empty;
    RandomStream source_stream = bpg_stream.child("source");
    p.source = lights::choose_standard_source(
        bank, source_stream, frame.image.width(), frame.image.height(),
        cfg.augmentation, ctx.procedural_flares);
    const DepthMap depth_m = frame.depth.scaled(p.scale.s, DepthUnit::kMeters);
    p.bpg = bpg::sample_bpg(bpg_stream.child("params"), cfg, depth_m, frame.k);
  }

  if (p.gates.apply_ing) {
    const RandomStream ing_stream = stream.child("ing");
    RandomStream params = ing_stream.child("params");
    p.ing = ing::sample_ing(params, cfg);
    const RandomStream noise = ing_stream.child("noise");
    p.noise_seed = noise.seed();
    p.noise_path = noise.path();
  }
  return p;
}

Image render(const Frame& frame, const CompensationParams& params,
             const Context& ctx, RenderStats* stats) {
  const CompensationConfig& cfg = ctx.config;
  RenderStats local;
  Image out = frame.image;

  if (params.bpg) {
    if (!params.source) throw ArgumentError("BPG record without a source");
    const bpg::BpgSample& b = *params.bpg;
    const lights::LightBank empty;
    const lights::LightBank& bank = ctx.bank ? *ctx.bank : empty;
    const lights::LightSourceImage source =
        lights::realize_source(bank, *params.source);
    local.light_color = source.mean_color();

    std::vector<bpg::PlacedSource> placed;
    for (const bpg::LightPlacement& pl : b.placements) {
      placed.push_back({&source, b.intensity.s_f, pl.pixel});
    }
    out = bpg::composite(bpg::darken(out, b.s_d), placed, b.g_f);

    if (params.rerendered) {
      const double s = params.scale.s;
      const rerender::PointCloud points =
          rerender::structured_point_cloud(frame.depth, frame.k, s);
      const rerender::SurfaceNormalMap normals =
          rerender::surface_normals(frame.depth, s, frame.k);
      const rerender::MaterialMaps mats =
          rerender::coarse_material(frame.image, cfg.k_d, cfg.k_s);
      std::vector<Image> reflections;
      for (const bpg::LightPlacement& pl : b.placements) {
        const rerender::PointLight light{pl.position, local.light_color,
                                         b.intensity.s_f};
        rerender::Reflection r =
            rerender::phong_reflection(points, normals, mats, light, cfg.g_r);
        local.degenerate_reflection_pixels += r.degenerate_pixels;
        reflections.push_back(std::move(r.image));
      }
      out = rerender::rerender_total(out, reflections);
    }
  }

  if (params.ing) {
    const RandomStream noise =
        RandomStream::from_path(params.noise_seed, params.noise_path);
    out = ing::apply_ing(out, *params.ing, noise);
  }
  if (stats) *stats = local;
  return out;
}

Compensated compensate_one(const Frame& frame, const RandomStream& stream,
                           const Context& ctx) {
  Compensated c;
  c.params = sample_params(frame, stream, ctx);
  c.image = render(frame, c.params, ctx, &c.stats);
  c.params.light_color = c.stats.light_color;
  return c;
}

json params_to_json(const CompensationParams& p) {
  json j;
  j["step"] = p.step;
  j["gates"] = {{"bpg", p.gates.apply_bpg}, {"ing", p.gates.apply_ing}};
  if (p.bpg) {
    const bpg::BpgSample& b = *p.bpg;
    j["scale"] = {{"s", p.scale.s},
                  {"camera_height_unscaled", p.scale.camera_height_unscaled},
                  {"camera_height_m", p.scale.camera_height},
                  {"ground_pixel_count", p.scale.ground_pixel_count},
                  {"low_confidence", p.scale.low_confidence},
                  {"ground_normal", vec_json(p.scale.ground_normal)}};
    j["rerendered"] = p.rerendered;
    json placements = json::array();
    for (const bpg::LightPlacement& pl : b.placements) {
      placements.push_back({{"pixel", {pl.pixel.x(), pl.pixel.y()}},
                            {"z", pl.z},
                            {"position", vec_json(pl.position)},
                            {"attempts", pl.attempts},
                            {"near_field_fallback", pl.near_field_fallback}});
    }
    j["bpg"] = {{"s_d", b.s_d},
                {"g_f", b.g_f},
                {"F", b.intensity.f},
                {"s_F", b.intensity.s_f},
                {"N_F", b.intensity.n_f},
                {"placements", placements}};
  }
  if (p.source) {
    const lights::SourceChoice& s = *p.source;
    j["source"] = {
        {"origin", s.origin == lights::SourceOrigin::kBankFile ? "bank"
                                                               : "procedural"},
        {"bank_index", s.bank_index},
        {"flare_seed", s.flare_seed},
        {"flare_path", s.flare_path},
        {"side", s.side},
        {"augmentation", augmentation_json(s.augmentation)},
        {"light_color", p.light_color}};
  }
  if (p.ing) {
    const ing::IngSample& n = *p.ing;
    j["ing"] = {{"K", n.k},
                {"s_n", n.s_n},
                {"bit_depth", n.bit_depth},
                {"g_n", n.g_n},
                {"read_noise",
                 {{"family", to_string(n.read.family)},
                  {"sigma", n.read.sigma},
                  {"lambda", n.read.lambda},
                  {"calibration_index", n.read.entry_index},
                  {"camera_id", n.read.camera_id}}},
                {"noise_stream",
                 {{"seed", p.noise_seed}, {"path", p.noise_path}}}};
  }
  return j;
}

CompensationParams params_from_json(const json& j) {
  CompensationParams p;
  p.step = j.at("step").get<std::int64_t>();
  p.gates.apply_bpg = j.at("gates").at("bpg").get<bool>();
  p.gates.apply_ing = j.at("gates").at("ing").get<bool>();
  if (j.contains("bpg")) {
    const json& sc = j.at("scale");
    p.scale.s = sc.at("s").get<double>();
    p.scale.camera_height_unscaled =
        sc.at("camera_height_unscaled").get<double>();
    p.scale.camera_height = sc.at("camera_height_m").get<double>();
    p.scale.ground_pixel_count = sc.at("ground_pixel_count").get<std::size_t>();
    p.scale.low_confidence = sc.at("low_confidence").get<bool>();
    p.scale.ground_normal = vec_from(sc.at("ground_normal"));
    p.rerendered = j.at("rerendered").get<bool>();
    const json& b = j.at("bpg");
    bpg::BpgSample s;
    s.s_d = b.at("s_d").get<double>();
    s.g_f = b.at("g_f").get<double>();
    s.intensity.f = b.at("F").get<double>();
    s.intensity.s_f = b.at("s_F").get<double>();
    s.intensity.n_f = b.at("N_F").get<int>();
    for (const json& pj : b.at("placements")) {
      bpg::LightPlacement pl;
      pl.pixel = {pj.at("pixel").at(0).get<int>(),
                  pj.at("pixel").at(1).get<int>()};
      pl.z = pj.at("z").get<double>();
      pl.position = vec_from(pj.at("position"));
      pl.attempts = pj.at("attempts").get<int>();
      pl.near_field_fallback = pj.at("near_field_fallback").get<bool>();
      s.placements.push_back(pl);
    }
    p.bpg = s;
  }
  if (j.contains("source")) {
    const json& sj = j.at("source");
    lights::SourceChoice s;
    s.origin = sj.at("origin").get<std::string>() == "bank"
                   ? lights::SourceOrigin::kBankFile
                   : lights::SourceOrigin::kProcedural;
    s.bank_index = sj.at("bank_index").get<std::size_t>();
    s.flare_seed = sj.at("flare_seed").get<std::uint64_t>();
    s.flare_path = sj.at("flare_path").get<std::vector<std::string>>();
    s.side = sj.at("side").get<int>();
    s.augmentation = augmentation_from(sj.at("augmentation"));
    p.light_color = sj.at("light_color").get<std::array<double, 3>>();
    p.source = s;
  }
  if (j.contains("ing")) {
    const json& nj = j.at("ing");
    ing::IngSample n;
    n.k = nj.at("K").get<double>();
    n.s_n = nj.at("s_n").get<double>();
    n.bit_depth = nj.at("bit_depth").get<int>();
    n.g_n = nj.at("g_n").get<double>();
    const json& rj = nj.at("read_noise");
    n.read.family = noise_family_from_string(rj.at("family").get<std::string>());
    n.read.sigma = rj.at("sigma").get<double>();
    n.read.lambda = rj.at("lambda").get<double>();
    n.read.entry_index = rj.at("calibration_index").get<std::size_t>();
    n.read.camera_id = rj.at("camera_id").get<std::string>();
    p.noise_seed = nj.at("noise_stream").at("seed").get<std::uint64_t>();
    p.noise_path =
        nj.at("noise_stream").at("path").get<std::vector<std::string>>();
    p.ing = n;
  }
  return p;
}

JobManifest manifest_from_json(const json& j,
                               const std::filesystem::path& base_dir) {
  JobManifest m;
  try {
    m.output_dir = resolve(j.value("output_dir", std::string("out")), base_dir);
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("step")) m.step = j.at("step").get<std::int64_t>();
    if (j.contains("config")) {
      const json& c = j.at("config");
      if (c.is_string()) {
        m.config = load_config(resolve(c.get<std::string>(), base_dir));
      } else {
        from_json(c, m.config);
      }
    }
    m.schedule = GateSchedule::from_config(m.config);
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      m.schedule_given = true;
      m.schedule.start_step = s.value("start_step", m.schedule.start_step);
      m.schedule.ramp_length = s.value("ramp_length", m.schedule.ramp_length);
      if (s.contains("ramp")) {
        m.schedule.ramp = ramp_from_string(s.at("ramp").get<std::string>());
      }
    }
    if (j.contains("light_bank")) {
      m.light_bank = resolve(j.at("light_bank").get<std::string>(), base_dir);
    }
    m.procedural_flares = j.value("procedural_flares", true);
    m.assume_linear = j.value("assume_linear", false);
    for (const json& e : j.value("entries", json::array())) {
      Entry entry;
      entry.image_path = resolve(e.at("image_path").get<std::string>(),
                                 base_dir);
      entry.depth_path = resolve(e.at("depth_path").get<std::string>(),
                                 base_dir);
      entry.depth_png_scale = e.value("depth_png_scale", entry.depth_png_scale);
      if (e.contains("depth_unit")) {
        const std::string unit = e.at("depth_unit").get<std::string>();
        if (unit == "meters") {
          entry.depth_unit = DepthUnit::kMeters;
        } else if (unit != "unscaled") {
          throw ConfigError("unknown depth_unit '" + unit + "'");
        }
      }
      entry.intrinsics = intrinsics_from(e.at("intrinsics"));
      if (e.contains("camera_height_m")) {
        entry.camera_height_m = e.at("camera_height_m").get<double>();
      }
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  m.schedule.validate();
  return m;
}

JobManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

std::vector<std::string> validate_manifest(const JobManifest& m) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    for (const auto* p : {&m.entries[i].image_path, &m.entries[i].depth_path}) {
      if (!std::filesystem::exists(*p)) {
        problems.push_back("entry " + std::to_string(i) + ": missing " +
                           p->string());
      }
    }
  }
  if (m.light_bank && !std::filesystem::is_directory(*m.light_bank)) {
    problems.push_back("light bank directory missing: " +
                       m.light_bank->string());
  }
  return problems;
}

json BatchSummary::to_json() const {
  json entries_json = json::array();
  for (const EntryResult& r : entries) {
    json e = {{"index", r.index}, {"ok", r.ok}};
    if (r.ok) {
      e["output"] = r.output_image.filename().string();
      e["provenance"] = r.provenance.filename().string();
    } else {
      e["error"] = r.error;
    }
    entries_json.push_back(e);
  }
  return {{"succeeded", succeeded},
          {"failed", failed},
          {"warnings", warnings},
          {"entries", entries_json}};
}

std::vector<std::string> output_stems(const JobManifest& m) {
  std::map<std::string, int> counts;
  for (const Entry& e : m.entries) ++counts[e.image_path.stem().string()];
  std::vector<std::string> stems;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    std::string stem = m.entries[i].image_path.stem().string();
    if (counts[stem] > 1) stem += "_" + std::to_string(i);
    stems.push_back(stem);
  }
  return stems;
}

BatchSummary run_batch(const JobManifest& m, int workers) {
  BatchSummary summary;
  summary.entries.resize(m.entries.size());
  std::filesystem::create_directories(m.output_dir);

  lights::LightBank bank;
  if (m.light_bank) {
    try {
      bank = lights::LightBank::load(*m.light_bank);
    } catch (const Error& e) {
      if (!m.procedural_flares) throw;
      summary.warnings.push_back(std::string(e.what()) +
                                 "; using procedural flares");
    }
    for (const std::string& w : bank.warnings()) summary.warnings.push_back(w);
  }

  Context ctx;
  ctx.config = m.config;
  ctx.schedule = m.schedule;
  ctx.step = m.step.value_or(m.schedule.ramped_step());
  ctx.bank = &bank;
  ctx.procedural_flares = m.procedural_flares;
  if (m.light_bank) ctx.bank_dir = *m.light_bank;
  ctx.config.validate();

  const io::DecodeOptions decode{m.assume_linear};
  const std::vector<std::string> stems = output_stems(m);

  auto process = [&](std::size_t i) {
    EntryResult& r = summary.entries[i];
    r.index = i;
    try {
      const Frame frame = load_frame(m.entries[i], ctx.config, decode);
      const Compensated c = compensate_one(frame, entry_stream(m.seed, i), ctx);
      r.output_image = m.output_dir / (stems[i] + "_lrn.png");
      r.provenance = m.output_dir / (stems[i] + "_prov.json");
      io::write_png(r.output_image, c.image, 8, m.assume_linear);
      json prov = {
          {"seed", m.seed},
          {"entry_index", i},
          {"stream_path", entry_stream(m.seed, i).path_string()},
          {"image_path", m.entries[i].image_path.string()},
          {"depth_path", m.entries[i].depth_path.string()},
          {"camera_height_m", frame.camera_height_m},
          {"intrinsics", intrinsics_json(frame.k)},
          {"assume_linear", m.assume_linear},
          {"clamped_input_pixels", frame.clamped_pixels},
          {"degenerate_reflection_pixels",
           c.stats.degenerate_reflection_pixels},
          {"schedule",
           {{"start_step", ctx.schedule.start_step},
            {"ramp", to_string(ctx.schedule.ramp)},
            {"ramp_length", ctx.schedule.ramp_length},
            {"bpg_rate", ctx.schedule.bpg_rate},
            {"ing_rate", ctx.schedule.ing_rate}}},
          {"light_bank", ctx.bank_dir.string()},
          {"procedural_flares", ctx.procedural_flares},
          {"config", ctx.config},
          {"params", params_to_json(c.params)}};
      write_text(r.provenance, prov.dump(2) + "\n");
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
  };

  const std::size_t n = m.entries.size();
  const std::size_t threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) process(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (const EntryResult& r : summary.entries) {
    if (r.ok) {
      ++summary.succeeded;
    } else {
      ++summary.failed;
    }
  }
  write_text(m.output_dir / "summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace nightsim::pipeline
