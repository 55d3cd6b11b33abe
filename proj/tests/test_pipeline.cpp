#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nightsim/error.hpp"
#include "nightsim/pipeline.hpp"
#include "support/fixture.hpp"
#include "support/scene.hpp"
#include "support/stats.hpp"

namespace nightsim::pipeline {
namespace {

namespace fs = std::filesystem;

Frame scene_frame(int w = 64, int h = 48) {
  const testing::SyntheticScene s = testing::make_road_scene(w, h);
  Frame f;
  f.image = s.image;
  f.depth = s.depth;
  f.k = s.k;
  f.camera_height_m = 1.5;
  return f;
}

Context forced_context(double bpg_rate, double ing_rate) {
  Context ctx;
  ctx.config.bpg_rate = bpg_rate;
  ctx.config.ing_rate = ing_rate;
  ctx.schedule = GateSchedule::from_config(ctx.config);
  ctx.step = 50000;
  return ctx;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean(const Image& img) {
  double s = 0;
  for (float v : img.data()) s += v;
  return s / img.size();
}

TEST(GateTest, ClosedBeforeStartStep) {
  const GateSchedule sched;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const GateDecision d = gate(entry_stream(1, i), static_cast<std::int64_t>(i * 19), sched);
    ASSERT_FALSE(d.apply_bpg);
    ASSERT_FALSE(d.apply_ing);
  }
  EXPECT_THROW(gate(entry_stream(1, 0), -1, sched), RangeError);
}

TEST(GateTest, FullRatesAlwaysOpen) {
  GateSchedule sched;
  sched.bpg_rate = sched.ing_rate = 1.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const GateDecision d = gate(entry_stream(2, i), 1000000, sched);
    EXPECT_TRUE(d.apply_bpg);
    EXPECT_TRUE(d.apply_ing);
  }
}

TEST(GateTest, RateAndIndependence) {
  const GateSchedule sched;
  std::vector<double> b, g;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const GateDecision d = gate(entry_stream(3, i), 20000 + static_cast<std::int64_t>(i), sched);
    b.push_back(d.apply_bpg);
    g.push_back(d.apply_ing);
  }
  EXPECT_NEAR(testing::sample_mean(b), 0.5, 0.005);
  EXPECT_NEAR(testing::sample_mean(g), 0.5, 0.005);
  EXPECT_LT(std::abs(testing::correlation(b, g)), 0.01);
}

TEST(GateTest, LinearRampInterpolates) {
  GateSchedule sched;
  sched.ramp = Ramp::kLinear;
  sched.ramp_length = 1000;
  EXPECT_EQ(sched.effective_rate(0.5, 19999), 0.0);
  EXPECT_DOUBLE_EQ(sched.effective_rate(0.5, 20500), 0.25);
  EXPECT_DOUBLE_EQ(sched.effective_rate(0.5, 25000), 0.5);
  EXPECT_EQ(sched.ramped_step(), 21000);
  sched.bpg_rate = 1.5;
  EXPECT_THROW(sched.validate(), ConfigError);
  EXPECT_EQ(ramp_from_string(to_string(Ramp::kLinear)), Ramp::kLinear);
}

TEST(CompensateTest, GatesOffIsIdentity) {
  const Frame f = scene_frame();
  const Compensated c = compensate_one(f, entry_stream(4, 0), forced_context(0, 0));
  EXPECT_EQ(c.image, f.image);
  EXPECT_FALSE(c.params.bpg);
  EXPECT_FALSE(c.params.ing);
}

TEST(CompensateTest, DeterministicUnderSeed) {
  const Frame f = scene_frame();
  const Context ctx = forced_context(1, 1);
  const Compensated a = compensate_one(f, entry_stream(5, 3), ctx);
  const Compensated b = compensate_one(f, entry_stream(5, 3), ctx);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(params_to_json(a.params).dump(), params_to_json(b.params).dump());
  const Compensated other = compensate_one(f, entry_stream(5, 4), ctx);
  EXPECT_NE(a.image, other.image);
}

TEST(CompensateTest, BpgBrightensSomewhere) {
  const Frame f = scene_frame();
  const Context ctx = forced_context(1, 0);
  const Compensated c = compensate_one(f, entry_stream(6, 0), ctx);
  ASSERT_TRUE(c.params.bpg);
  const Image dark = bpg::darken(f.image, c.params.bpg->s_d);
  double brightest = 0;
  for (std::size_t i = 0; i < dark.size(); ++i) {
    ASSERT_GE(c.image[i], dark[i] - 1e-6);
    brightest = std::max(brightest, double(c.image[i]) - dark[i]);
  }
  EXPECT_GT(brightest, 0.05);
  EXPECT_GT(c.params.light_color[0] + c.params.light_color[1] +
                c.params.light_color[2],
            0.0);
}

TEST(CompensateTest, ZeroLightRasterGivesNoisyDarkenedInput) {
  const Frame f = scene_frame();
  lights::LightSourceImage zero{Image(32, 32, 0.f), Plane(32, 32, 0.f),
                                lights::SourceOrigin::kBankFile};
  const lights::LightBank bank = lights::LightBank::from_images({zero});
  Context ctx = forced_context(1, 0);
  ctx.bank = &bank;
  const Compensated c = compensate_one(f, entry_stream(7, 0), ctx);
  ASSERT_TRUE(c.params.bpg);
  const Image dark = bpg::darken(f.image, c.params.bpg->s_d);
  for (std::size_t i = 0; i < dark.size(); ++i) ASSERT_NEAR(c.image[i], dark[i], 1e-6);

  ctx = forced_context(1, 1);
  ctx.bank = &bank;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Compensated n = compensate_one(f, entry_stream(8, i), ctx);
    ASSERT_TRUE(n.params.ing);
    EXPECT_LE(mean(n.image), n.params.bpg->s_d * mean(f.image) * 1.01);
  }
}

TEST(CompensateTest, ProvenanceReplaysImage) {
  const Frame f = scene_frame();
  const Context ctx = forced_context(1, 1);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const Compensated c = compensate_one(f, entry_stream(9, i), ctx);
    const std::string text = params_to_json(c.params).dump();
    const CompensationParams back = params_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(params_to_json(back).dump(), text);
    const Image replay = render(f, back, ctx);
    ASSERT_TRUE(replay.same_shape(c.image));
    for (std::size_t p = 0; p < replay.size(); ++p) {
      ASSERT_NEAR(replay[p], c.image[p], 1e-6);
    }
  }
}

TEST(CompensateTest, LowConfidenceSkipsRerender) {
  Frame f = scene_frame();
  f.depth = DepthMap(64, 48, 12.f);  // a wall, no ground
  const Compensated c = compensate_one(f, entry_stream(10, 0), forced_context(1, 0));
  ASSERT_TRUE(c.params.bpg);
  EXPECT_TRUE(c.params.scale.low_confidence);
  EXPECT_FALSE(c.params.rerendered);
}

TEST(CompensateTest, RoadSceneIsRerendered) {
  const Frame f = scene_frame(96, 64);
  const Compensated c = compensate_one(f, entry_stream(11, 0), forced_context(1, 0));
  EXPECT_FALSE(c.params.scale.low_confidence);
  EXPECT_TRUE(c.params.rerendered);
  EXPECT_NEAR(c.params.scale.s, 1.0, 0.02);
}

class BatchTest : public ::testing::Test {
 protected:
  BatchTest() : dir_(::testing::UnitTest::GetInstance()->current_test_info()->name()) {}

  JobManifest manifest(int count, const std::string& out = "out") {
    nlohmann::json j;
    j["output_dir"] = out;
    j["seed"] = 42;
    j["entries"] = testing::write_scene_entries(dir_.path() / "data", count, 48, 32);
    for (auto& e : j["entries"]) {
      e["image_path"] = "data/" + e["image_path"].get<std::string>();
      e["depth_path"] = "data/" + e["depth_path"].get<std::string>();
    }
    std::ofstream(dir_.path() / "manifest.json") << j.dump(2);
    return load_manifest(dir_.path() / "manifest.json");
  }

  testing::ScratchDir dir_;
};

TEST_F(BatchTest, WorkerCountDoesNotChangeBytes) {
  JobManifest m = manifest(6);
  m.output_dir = dir_.path() / "w1";
  const BatchSummary s1 = run_batch(m, 1);
  m.output_dir = dir_.path() / "w8";
  const BatchSummary s8 = run_batch(m, 8);
  EXPECT_EQ(s1.succeeded, 6u);
  EXPECT_EQ(s8.failed, 0u);
  for (const EntryResult& r : s1.entries) {
    const fs::path other = dir_.path() / "w8" / r.output_image.filename();
    EXPECT_EQ(slurp(r.output_image), slurp(other));
    EXPECT_EQ(slurp(r.provenance),
              slurp(dir_.path() / "w8" / r.provenance.filename()));
  }
  EXPECT_EQ(slurp(dir_.path() / "w1" / "summary.json"),
            slurp(dir_.path() / "w8" / "summary.json"));
}

TEST_F(BatchTest, MissingDepthFailsOnlyThatEntry) {
  JobManifest m = manifest(3);
  fs::remove(m.entries[1].depth_path);
  EXPECT_EQ(validate_manifest(m).size(), 1u);
  const BatchSummary s = run_batch(m, 2);
  EXPECT_EQ(s.succeeded, 2u);
  EXPECT_EQ(s.failed, 1u);
  EXPECT_FALSE(s.entries[1].ok);
  EXPECT_FALSE(s.entries[1].error.empty());
  EXPECT_TRUE(fs::exists(s.entries[0].output_image));
}

TEST_F(BatchTest, EmptyManifest) {
  JobManifest m = manifest(0);
  const BatchSummary s = run_batch(m, 4);
  EXPECT_TRUE(s.entries.empty());
  EXPECT_EQ(s.failed, 0u);
  EXPECT_TRUE(fs::exists(m.output_dir / "summary.json"));
}

TEST_F(BatchTest, ProvenanceRecordsSeedAndInputs) {
  JobManifest m = manifest(2);
  const BatchSummary s = run_batch(m, 1);
  const nlohmann::json prov = nlohmann::json::parse(slurp(s.entries[1].provenance));
  EXPECT_EQ(prov.at("seed").get<std::uint64_t>(), 42u);
  EXPECT_EQ(prov.at("entry_index").get<std::size_t>(), 1u);
  EXPECT_TRUE(prov.contains("params"));
  EXPECT_TRUE(prov.contains("config"));
}

TEST(OutputStemsTest, DuplicatesGetIndexSuffix) {
  JobManifest m;
  for (const char* p : {"a/x.png", "b/x.png", "c/y.png"}) {
    Entry e;
    e.image_path = p;
    m.entries.push_back(e);
  }
  const std::vector<std::string> s = output_stems(m);
  EXPECT_EQ(s[0], "x_0");
  EXPECT_EQ(s[1], "x_1");
  EXPECT_EQ(s[2], "y");
}

TEST(ManifestTest, RejectsUnknownDepthUnit) {
  const nlohmann::json j = {
      {"entries",
       {{{"image_path", "a.png"},
         {"depth_path", "a.pfm"},
         {"depth_unit", "feet"},
         {"intrinsics", {{"fx", 1}, {"fy", 1}, {"cx", 0}, {"cy", 0}}}}}}};
  EXPECT_THROW(manifest_from_json(j, {}), ConfigError);
  EXPECT_THROW(manifest_from_json(nlohmann::json{{"entries", {{{"image_path", "a"}}}}}, {}),
               ConfigError);
}

}  // namespace
}  // namespace nightsim::pipeline
