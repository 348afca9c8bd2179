#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "omnidepth/correspondence.hpp"
#include "omnidepth/error.hpp"
#include "omnidepth/synth.hpp"
#include "test_util.hpp"

namespace omnidepth {
namespace {

namespace fs = std::filesystem;

// Two renders from the same center, the second yawed by 10 degrees.
struct RotatedPair {
  EquirectImage images[2];
  Mat3 rotation;  // X_1 = rotation * X_0
};

const RotatedPair& rotated_pair() {
  static const RotatedPair pair = [] {
    synth::SceneSpec scene = synth::default_scene();
    scene.supersample = 2;
    synth::CameraPose a, b;
    b.rotation = rotation_from_rpy_deg(0, 0, 10);
    RotatedPair p;
    p.images[0] = synth::render_view(scene, a, {256, 128}).image;
    p.images[1] = synth::render_view(scene, b, {256, 128}).image;
    p.rotation = b.rotation.transpose() * a.rotation;
    return p;
  }();
  return pair;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("omnidepth_corr_" + name);
}

TEST(DetectFeatures, ConstantImageHasNone) {
  EquirectImage img(128, 64);
  for (float& x : img.data()) x = 0.5f;
  EXPECT_TRUE(detect_features(img).empty());
}

TEST(DetectFeatures, BandBudgets) {
  const EquirectImage& img = rotated_pair().images[0];
  DetectorConfig cfg;
  cfg.max_features = 500;
  const auto feats = detect_features(img, cfg);
  ASSERT_GE(feats.size(), 100u);
  EXPECT_LE(feats.size(), 500u);

  const BandLayout layout = band_layout(img.height(), cfg);
  const auto budget = band_budgets(layout, img.height(), cfg.max_features);
  int total = 0;
  for (int b : budget) total += b;
  EXPECT_EQ(total, cfg.max_features);

  std::vector<int> count(layout.bands, 0);
  for (const Feature& f : feats) {
    const int band = layout.band_of_row(static_cast<int>(std::lround(f.pixel.v)));
    ASSERT_GE(band, 0);
    ++count[band];
  }
  // Rescale the budget to the number actually detected.
  const double ratio = double(feats.size()) / total;
  for (int b = 0; b < layout.bands; ++b) {
    const double expected = budget[b] * ratio;
    EXPECT_LE(count[b], 3.0 * expected + 1) << "band " << b;
    EXPECT_GE(count[b], expected / 3.0 - 1) << "band " << b;
  }
}

TEST(DetectFeatures, Deterministic) {
  const EquirectImage& img = rotated_pair().images[0];
  const auto a = detect_features(img);
  const auto b = detect_features(img);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pixel.u, b[i].pixel.u);
    EXPECT_EQ(a[i].pixel.v, b[i].pixel.v);
    EXPECT_EQ(a[i].descriptor, b[i].descriptor);
  }
}

TEST(DetectFeatures, BearingMatchesPixel) {
  const EquirectImage& img = rotated_pair().images[0];
  for (const Feature& f : detect_features(img)) {
    const Vec3 b = pixel_to_bearing(f.pixel, img.dims()).vec();
    EXPECT_NEAR((b - f.bearing.vec()).norm(), 0.0, 1e-12);
  }
}

TEST(Hamming, Counts) {
  Descriptor a{}, b{};
  EXPECT_EQ(hamming(a, b), 0);
  b[0] = 0xFF;
  b[3] = 1ull << 63;
  EXPECT_EQ(hamming(a, b), 9);
}

std::vector<Feature> random_features(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Feature> out(n);
  for (int i = 0; i < n; ++i) {
    for (auto& w : out[i].descriptor) w = rng();
    out[i].pixel = {double(i), 10.0};
    out[i].bearing = pixel_to_bearing(out[i].pixel, {64, 32});
  }
  return out;
}

TEST(MatchFeatures, SelfMatch) {
  const auto f = random_features(30, 1);
  const CorrespondenceSet m = match_features(f, f);
  ASSERT_EQ(m.size(), f.size());
  for (const Match& x : m.matches) {
    EXPECT_EQ(x.distance, 0);
    EXPECT_EQ(x.index_a, x.index_b);
  }
}

TEST(MatchFeatures, MutualBestOnly) {
  const auto a = random_features(20, 2);
  const auto b = random_features(20, 3);
  const CorrespondenceSet m = match_features(a, b);
  // Brute-force mutual best.
  auto best = [](const Descriptor& d, const std::vector<Feature>& set) {
    int idx = -1, dist = 1 << 30;
    for (int i = 0; i < static_cast<int>(set.size()); ++i) {
      const int h = hamming(d, set[i].descriptor);
      if (h < dist) dist = h, idx = i;
    }
    return idx;
  };
  int expected = 0;
  for (int i = 0; i < 20; ++i) {
    const int j = best(a[i].descriptor, b);
    if (best(b[j].descriptor, a) == i) ++expected;
  }
  EXPECT_EQ(static_cast<int>(m.size()), expected);
  int last = -1;
  for (const Match& x : m.matches) {
    EXPECT_EQ(best(a[x.index_a].descriptor, b), x.index_b);
    EXPECT_EQ(best(b[x.index_b].descriptor, a), x.index_a);
    EXPECT_GE(x.distance, last);
    last = x.distance;
  }
}

TEST(MatchFeatures, EmptyInput) {
  EXPECT_TRUE(match_features({}, random_features(5, 4)).empty());
}

TEST(MatchFeatures, SerialEqualsParallel) {
  const auto a = random_features(200, 5);
  const auto b = random_features(200, 6);
  EXPECT_EQ(match_features(a, b, 0, 1, Exec::kSerial),
            match_features(a, b, 0, 1, Exec::kParallel));
}

TEST(MatchFeatures, RotatedRendersAgreeWithGroundTruth) {
  const RotatedPair& data = rotated_pair();
  const auto fa = detect_features(data.images[0]);
  const auto fb = detect_features(data.images[1]);
  const CorrespondenceSet m = match_features(fa, fb);
  ASSERT_GE(m.size(), 20u);
  const Mat3 r = data.rotation;
  int good = 0;
  for (const Match& x : m.matches) {
    if (testing::angle_deg(r * x.a.vec(), x.b.vec()) < 1.0) ++good;
  }
  EXPECT_GE(good, 0.5 * m.size()) << good << " of " << m.size();
}

TEST(CorrespondenceFile, EmptyFile) {
  const fs::path p = temp_file("empty.txt");
  std::ofstream(p) << "# nothing\n";
  EXPECT_TRUE(load_correspondences(p).empty());
}

TEST(CorrespondenceFile, Renormalizes) {
  const fs::path p = temp_file("norm.txt");
  std::ofstream(p) << "0 1 2 0 0 0 3 4\n";
  const CorrespondenceSet s = load_correspondences(p);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR((s.matches[0].a.vec() - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((s.matches[0].b.vec() - Vec3(0, 0.6, 0.8)).norm(), 0.0, 1e-15);
  EXPECT_EQ(s.views, (std::vector<int>{0, 1}));
}

TEST(CorrespondenceFile, MalformedNamesLine) {
  const fs::path p = temp_file("bad.txt");
  std::ofstream(p) << "0 1 1 0 0 0 1 0\n0 1 1 0 zz 0 1 0\n";
  try {
    load_correspondences(p);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(CorrespondenceFile, Roundtrip) {
  const RotatedPair& data = rotated_pair();
  const CorrespondenceSet m = match_features(detect_features(data.images[0]),
                                             detect_features(data.images[1]));
  CorrespondenceSet stripped;
  for (Match x : m.matches) {
    x.index_a = x.index_b = -1;
    stripped.matches.push_back(x);
  }
  stripped.views = m.views;
  const fs::path p = temp_file("roundtrip.txt");
  save_correspondences(stripped, p);
  EXPECT_EQ(load_correspondences(p), stripped);
}

TEST(CorrespondenceSet, PairFlipsReversedRows) {
  CorrespondenceSet s;
  Match m;
  m.view_a = 2;
  m.view_b = 0;
  m.a = Bearing::normalized(1, 0, 0);
  m.b = Bearing::normalized(0, 1, 0);
  s.matches.push_back(m);
  s.views = {0, 2};
  const CorrespondenceSet p = s.pair(0, 2);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.matches[0].view_a, 0);
  EXPECT_EQ(p.matches[0].a, m.b);
  EXPECT_EQ(p.matches[0].b, m.a);
}

}  // namespace
}  // namespace omnidepth
