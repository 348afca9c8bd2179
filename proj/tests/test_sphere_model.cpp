#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "omnidepth/error.hpp"
#include "omnidepth/sphere_model.hpp"
#include "test_util.hpp"

namespace omnidepth {
namespace {

constexpr ImageDims kDims{512, 256};

void expect_vec(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR((a - b).norm(), 0.0, tol) << a.transpose() << " vs " << b.transpose();
}

TEST(PixelToBearing, Equator) {
  expect_vec(pixel_to_bearing({0, 128}, kDims).vec(), Vec3(1, 0, 0), 1e-12);
  expect_vec(pixel_to_bearing({128, 128}, kDims).vec(), Vec3(0, 1, 0), 1e-12);
}

TEST(PixelToBearing, UpperHemisphere) {
  const double s = std::sqrt(0.5);
  expect_vec(pixel_to_bearing({256, 64}, kDims).vec(), Vec3(-s, 0, s), 1e-12);
}

TEST(PixelToBearing, NonFiniteThrows) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(pixel_to_bearing({nan, 10}, kDims), InvalidArgument);
  EXPECT_THROW(pixel_to_bearing({1, INFINITY}, kDims), InvalidArgument);
}

TEST(BearingToPixel, Inverse) {
  const PixelCoord p = bearing_to_pixel(Vec3(0, 1, 0), kDims);
  EXPECT_NEAR(p.u, 128.0, 1e-9);
  EXPECT_NEAR(p.v, 128.0, 1e-9);
}

TEST(BearingToPixel, PoleConvention) {
  const PixelCoord p = bearing_to_pixel(Vec3(0, 0, 1), kDims);
  EXPECT_EQ(p.u, 0.0);
  EXPECT_EQ(p.v, 0.0);
}

TEST(BearingToPixel, ScaleInvariant) {
  const Vec3 d(0.3, -0.7, 0.2);
  const PixelCoord a = bearing_to_pixel(d, kDims);
  const PixelCoord b = bearing_to_pixel(17.0 * d, kDims);
  EXPECT_NEAR(a.u, b.u, 1e-9);
  EXPECT_NEAR(a.v, b.v, 1e-9);
}

TEST(BearingToPixel, ZeroVectorThrows) {
  EXPECT_THROW(bearing_to_pixel(Vec3::Zero(), kDims), InvalidArgument);
  EXPECT_THROW(Bearing::normalized(0, 0, 0), InvalidArgument);
}

TEST(Roundtrip, PixelBearingPixel) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, kDims.width);
  std::uniform_real_distribution<double> v(1.0, kDims.height - 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const PixelCoord p{u(rng), v(rng)};
    const PixelCoord q = bearing_to_pixel(pixel_to_bearing(p, kDims), kDims);
    double du = std::abs(p.u - q.u);
    du = std::min(du, kDims.width - du);
    worst = std::max({worst, du, std::abs(p.v - q.v)});
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Roundtrip, BearingPixelBearing) {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 b = testing::random_unit(rng);
    if (std::abs(b.z()) > 1.0 - 1e-9) continue;
    const Vec3 c = pixel_to_bearing(bearing_to_pixel(b, kDims), kDims).vec();
    worst = std::max(worst, (b - c).norm());
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(NormalizePixel, WrapsAndClamps) {
  const PixelCoord p = normalize_pixel({-1.5, -3.0}, kDims);
  EXPECT_NEAR(p.u, 510.5, 1e-12);
  EXPECT_GE(p.v, 0.0);
  const PixelCoord q = normalize_pixel({1024.25, 400.0}, kDims);
  EXPECT_NEAR(q.u, 0.25, 1e-12);
  EXPECT_LT(q.v, kDims.height);
}

EquirectImage random_image(int w, int h, std::uint64_t seed) {
  EquirectImage img(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& x : img.data()) x = u(rng);
  return img;
}

TEST(SampleBilinear, IntegerPixelExact) {
  const EquirectImage img = random_image(32, 16, 3);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(sample_bilinear(img, {double(x), double(y)}, c), img.at(x, y, c));
      }
    }
  }
}

TEST(SampleBilinear, ConstantImage) {
  EquirectImage img(32, 16);
  for (float& x : img.data()) x = 0.375f;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_NEAR(sample_bilinear(img, {u(rng), u(rng)}, 1), 0.375, 1e-12);
  }
}

TEST(SampleBilinear, SeamBlend) {
  EquirectImage img(2, 2, true);
  for (int y = 0; y < 2; ++y) {
    for (int c = 0; c < 3; ++c) {
      img.at(0, y, c) = 0.2f;
      img.at(1, y, c) = 0.8f;
    }
  }
  EXPECT_NEAR(sample_bilinear(img, {1.5, 0.0}, 0), 0.5, 1e-6);
  EXPECT_NEAR(sample_bilinear(img, {1.5, 1.0}, 2), 0.5, 1e-6);
}

TEST(SampleBilinear, SeamContinuity) {
  const EquirectImage img = random_image(64, 32, 5);
  for (int y = 0; y < 32; ++y) {
    for (int c = 0; c < 3; ++c) {
      const double left = sample_bilinear(img, {64.0 - 1e-9, double(y)}, c);
      const double right = sample_bilinear(img, {0.0, double(y)}, c);
      EXPECT_NEAR(left, right, 1e-6);
      EXPECT_NEAR(sample_bilinear(img, {-0.25, double(y)}, c),
                  sample_bilinear(img, {63.75, double(y)}, c), 1e-12);
    }
  }
}

TEST(EquirectImage, AspectEnforced) {
  EXPECT_THROW(EquirectImage(100, 100), InvalidArgument);
  EXPECT_NO_THROW(EquirectImage(100, 75, true));
}

TEST(EquirectImage, ValidateRejectsOutOfRange) {
  EquirectImage img(4, 2);
  EXPECT_NO_THROW(img.validate());
  img.at(1, 1, 2) = 1.5f;
  EXPECT_THROW(img.validate(), DataError);
}

TEST(Rotation, RpyRoundtrip) {
  const Mat3 r = rotation_from_rpy_deg(10, 20, 30);
  EXPECT_NEAR((r.transpose() * r - Mat3::Identity()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  const Vec3 rpy = rpy_deg_from_rotation(r);
  expect_vec(rpy, Vec3(10, 20, 30), 1e-9);
}

TEST(Rotation, YawAboutZ) {
  const Mat3 r = rotation_from_rpy_deg(0, 0, 90);
  expect_vec(r * Vec3(1, 0, 0), Vec3(0, 1, 0), 1e-12);
}

TEST(Skew, CrossProduct) {
  const Vec3 a(1, -2, 3), b(0.5, 4, -1);
  expect_vec(skew(a) * b, a.cross(b), 1e-12);
}

}  // namespace
}  // namespace omnidepth
