#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "omnidepth/error.hpp"
#include "omnidepth/evalio.hpp"
#include "omnidepth/image_io.hpp"
#include "omnidepth/synth.hpp"

namespace omnidepth {
namespace {

namespace fs = std::filesystem;

DepthMap constant_map(int w, int h, double d) {
  DepthMap m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.depth[i] = d, m.valid[i] = 1;
  return m;
}

TEST(Metrics, IdenticalMaps) {
  const DepthMap m = constant_map(8, 4, 2.0);
  const Metrics r = compute_metrics(m, m);
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_TRUE(std::isinf(r.psnr));
  EXPECT_EQ(r.valid_count, 32u);
  EXPECT_EQ(r.valid_fraction, 1.0);
}

TEST(Metrics, PsnrDefinition) {
  EXPECT_NEAR(psnr_from_mse(0.01), 20.0, 1e-12);
  EXPECT_NEAR(psnr_from_mse(0.00193), 27.144, 1e-3);
  EXPECT_THROW(psnr_from_mse(-1.0), InvalidArgument);
}

TEST(Metrics, NormalizedByGroundTruthPeak) {
  DepthMap gt = constant_map(4, 2, 2.0);
  gt.depth[0] = 10.0;  // peak
  DepthMap est = gt;
  est.depth[1] += 1.0;  // normalized error 0.1 on one of 8 pixels
  const Metrics r = compute_metrics(est, gt);
  EXPECT_EQ(r.normalization, 10.0);
  EXPECT_NEAR(r.mse, 0.01 / 8.0, 1e-15);
}

TEST(Metrics, JointValidity) {
  DepthMap gt = constant_map(4, 2, 1.0);
  DepthMap est = constant_map(4, 2, 1.0);
  est.valid[0] = 0;
  est.depth[0] = 100.0;
  gt.valid[1] = 0;
  gt.depth[1] = 100.0;
  const Metrics r = compute_metrics(est, gt);
  EXPECT_EQ(r.valid_count, 6u);
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_NEAR(r.valid_fraction, 0.75, 1e-15);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(compute_metrics(constant_map(4, 2, 1), constant_map(8, 4, 1)),
               InvalidArgument);
  DepthMap none(4, 2);
  EXPECT_THROW(compute_metrics(none, constant_map(4, 2, 1)), DataError);
}

TEST(Ply, EmptyMapWritesValidFile) {
  const fs::path p = fs::temp_directory_path() / "omnidepth_empty.ply";
  DepthMap m(8, 4);
  EquirectImage img(8, 4);
  EXPECT_EQ(export_ply(m, img, p), 0u);
  EXPECT_TRUE(read_ply(p).empty());
}

TEST(Ply, SinglePixel) {
  const fs::path p = fs::temp_directory_path() / "omnidepth_single.ply";
  DepthMap m(8, 4);
  m.depth[m.index(0, 2)] = 2.0;
  m.valid[m.index(0, 2)] = 1;
  EquirectImage img(8, 4);
  img.at(0, 2, 0) = 1.0f;
  img.at(0, 2, 2) = 0.5f;
  ASSERT_EQ(export_ply(m, img, p), 1u);
  const auto pts = read_ply(p);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR((pts[0].position - Vec3(2, 0, 0)).norm(), 0.0, 1e-6);
  EXPECT_EQ(pts[0].rgb[0], 255);
  EXPECT_EQ(pts[0].rgb[1], 0);
  EXPECT_EQ(pts[0].rgb[2], 128);
}

TEST(Ply, FiltersKeepCount) {
  DepthMap m = constant_map(16, 8, 1.0);
  m.valid[5] = 0;
  EquirectImage img(16, 8);
  PlyOptions opts;
  opts.gaussian = true;
  opts.median = true;
  const auto pts = point_cloud(m, img, opts);
  EXPECT_EQ(pts.size(), m.valid_count());
  for (const auto& p : pts) EXPECT_NEAR(p.position.norm(), 1.0, 1e-9);
}

const synth::Dataset& small_rig() {
  static const synth::Dataset data = [] {
    synth::SceneSpec scene = synth::default_scene();
    scene.supersample = 1;
    return synth::render_dataset(scene, synth::named_layout("classroom"), {64, 32});
  }();
  return data;
}

AblationConfig fast_config() {
  AblationConfig cfg;
  cfg.scene = "classroom";
  cfg.sweep.candidate_count = 16;
  cfg.sweep.d_max = 8.0;
  cfg.sweep.postfilter = false;
  cfg.timing = false;
  return cfg;
}

TEST(Ablation, GridShape) {
  const synth::Dataset& d = small_rig();
  const AblationGrid grid{{2, 4}, {3, 5}, {true, false}};
  const auto rows = run_ablation(d.images, d.rig, d.depths[0], grid, fast_config());
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0].cameras, 2);
  EXPECT_EQ(rows[0].window, 3);
  EXPECT_TRUE(rows[0].scaling);
  for (const auto& r : rows) {
    EXPECT_EQ(r.scene, "classroom");
    EXPECT_EQ(r.runtime_s, 0.0);
    EXPECT_GT(r.metrics.valid_count, 0u);
  }
}

TEST(Ablation, EmptyGrid) {
  const synth::Dataset& d = small_rig();
  EXPECT_TRUE(run_ablation(d.images, d.rig, d.depths[0], {}, fast_config()).empty());
}

TEST(Ablation, InvalidCells) {
  const synth::Dataset& d = small_rig();
  EXPECT_THROW(run_ablation(d.images, d.rig, d.depths[0], {{5}, {3}, {true}}, fast_config()),
               InvalidArgument);
  EXPECT_THROW(run_ablation(d.images, d.rig, d.depths[0], {{2}, {4}, {true}}, fast_config()),
               InvalidArgument);
}

TEST(Ablation, CsvDeterministic) {
  const synth::Dataset& d = small_rig();
  const AblationGrid grid{{2, 3}, {3}, {true, false}};
  std::ostringstream a, b;
  write_ablation_csv(run_ablation(d.images, d.rig, d.depths[0], grid, fast_config()), a);
  write_ablation_csv(run_ablation(d.images, d.rig, d.depths[0], grid, fast_config()), b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("scene,cameras,window,scaling,mse_x100,psnr_db,valid_fraction,runtime_s\n", 0),
            0u);
  std::ostringstream table;
  write_ablation_table(run_ablation(d.images, d.rig, d.depths[0], grid, fast_config()), table);
  EXPECT_FALSE(table.str().empty());
}

TEST(Ablation, DirectoryNeedsGroundTruth) {
  const fs::path dir = fs::temp_directory_path() / "omnidepth_ablate_missing";
  fs::remove_all(dir);
  fs::create_directories(dir);
  EXPECT_THROW(run_ablation(dir, {{2}, {3}, {true}}, fast_config()), DataError);
}

TEST(ImageIo, PfmRoundtrip) {
  DepthMap m(6, 3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.depth[i] = 0.5 + 0.25 * i;
    m.valid[i] = i % 4 != 0;
  }
  const fs::path p = fs::temp_directory_path() / "omnidepth_rt.pfm";
  write_pfm(m, p);
  const DepthMap back = read_pfm(p);
  EXPECT_EQ(back.valid, m.valid);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.valid[i]) EXPECT_FLOAT_EQ(back.depth[i], m.depth[i]);
  }
}

TEST(ImageIo, PngRoundtrip16) {
  EquirectImage img(8, 4);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = (i % 11) / 10.0f;
  const fs::path p = fs::temp_directory_path() / "omnidepth_rt.png";
  save_png(img, p, 16);
  const EquirectImage back = load_image(p);
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], img.data()[i], 1.0 / 65535.0);
  }
  EXPECT_THROW(load_image("/nonexistent.png"), DataError);
}

}  // namespace
}  // namespace omnidepth
