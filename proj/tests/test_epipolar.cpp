#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "omnidepth/epipolar.hpp"
#include "omnidepth/error.hpp"
#include "test_util.hpp"

namespace omnidepth {
namespace {

using testing::project_matches;
using testing::random_points;

std::vector<Match> pose_matches(const Mat3& r, const Vec3& t, int n,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return project_matches(random_points(rng, n, -r.transpose() * t), r, t);
}

// Independent cheirality oracle: linear two-ray triangulation in frame i.
int oracle_count(const Mat3& r, const Vec3& t, const std::vector<Match>& ms) {
  const Vec3 c = -r.transpose() * t;
  int n = 0;
  for (const Match& m : ms) {
    const Eigen::Vector2d l =
        testing::linear_triangulate(m.a.vec(), r.transpose() * m.b.vec(), c);
    n += l[0] > 0.0 && l[1] > 0.0;
  }
  return n;
}

TEST(EightPoint, PureTranslationX) {
  const auto ms = pose_matches(Mat3::Identity(), Vec3(1, 0, 0), 20, 1);
  const Mat3 e = eight_point(ms).matrix();
  Mat3 expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  const double dev = std::min((e - expected).cwiseAbs().maxCoeff(),
                              (e + expected).cwiseAbs().maxCoeff());
  EXPECT_LT(dev, 1e-6);
}

TEST(EightPoint, ManifoldProperties) {
  const Mat3 r = rotation_from_rpy_deg(10, 20, 30);
  const auto ms = pose_matches(r, Vec3(0.3, -0.5, 0.8).normalized(), 50, 2);
  const Mat3 e = eight_point(ms).matrix();
  EXPECT_NEAR(e.norm(), std::sqrt(2.0), 1e-12);
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Mat3>(e).singularValues();
  EXPECT_NEAR(sv[0], sv[1], 1e-12);
  EXPECT_NEAR(sv[2], 0.0, 1e-12);
}

TEST(EightPoint, NoiselessResidual) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 r = testing::random_rotation(rng, 60.0);
    const Vec3 t = testing::random_unit(rng);
    const auto ms = pose_matches(r, t, 100, 100 + trial);
    const EssentialMatrix e = eight_point(ms);
    for (const Match& m : ms) {
      EXPECT_LT(std::abs(e.residual(m.a.vec(), m.b.vec())), 1e-9);
    }
  }
}

TEST(EightPoint, TooFewMatches) {
  const auto ms = pose_matches(Mat3::Identity(), Vec3(1, 0, 0), 7, 4);
  EXPECT_THROW(eight_point(ms), InvalidArgument);
}

TEST(EightPoint, CoplanarWithBaselineIsDegenerate) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(u(rng), u(rng), 0.0);
  const auto ms = project_matches(pts, Mat3::Identity(), Vec3(1, 0, 0));
  EXPECT_THROW(eight_point(ms), DegenerateError);
}

TEST(Sampson, ExactIsZero) {
  const Mat3 r = rotation_from_rpy_deg(5, -10, 15);
  const Vec3 t = Vec3(1, 2, 3).normalized();
  const Mat3 e = EssentialMatrix::from_pose(r, t).matrix();
  for (const Match& m : pose_matches(r, t, 50, 6)) {
    EXPECT_LT(sampson_error(e, m.a.vec(), m.b.vec()), 1e-18);
  }
}

TEST(Sampson, QuadraticGrowth) {
  const Mat3 r = rotation_from_rpy_deg(5, -10, 15);
  const Vec3 t = Vec3(1, 2, 3).normalized();
  const Mat3 e = EssentialMatrix::from_pose(r, t).matrix();
  const Match m = pose_matches(r, t, 1, 7)[0];
  const Vec3 bj = m.b.vec();
  // Normal of the epipolar plane in frame j; rotating about an in-plane axis
  // orthogonal to bj moves bj straight off the plane.
  const Vec3 normal = t.cross(bj).normalized();
  const Vec3 axis = bj.cross(normal).normalized();
  std::vector<double> xs, ys;
  for (double eps = 1e-6; eps <= 1e-3; eps *= 10.0) {
    const Vec3 moved = Eigen::AngleAxisd(eps, axis) * bj;
    xs.push_back(std::log(eps));
    ys.push_back(std::log(sampson_error(e, m.a.vec(), moved)));
  }
  const double n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i], sy += ys[i], sxx += xs[i] * xs[i], sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, 2.0, 0.1);
}

TEST(Ransac, NoiselessAllInliers) {
  const Mat3 r = rotation_from_rpy_deg(10, 20, 30);
  const auto ms = pose_matches(r, Vec3(1, 0, 0), 200, 8);
  const RansacResult res = estimate_essential_ransac(ms, {200, 1e-6, 1});
  EXPECT_EQ(res.inlier_count, 200);
  for (auto v : res.inlier_mask) EXPECT_EQ(v, 1);
}

TEST(Ransac, ThirtyPercentOutliers) {
  const Mat3 r = rotation_from_rpy_deg(-3, -23, 30);
  const Vec3 t = Vec3(0.5, -0.87, 0).normalized();
  auto ms = pose_matches(r, t, 700, 9);
  std::mt19937_64 rng(10);
  for (int i = 0; i < 300; ++i) {
    Match m;
    m.a = Bearing::normalized(testing::random_unit(rng));
    m.b = Bearing::normalized(testing::random_unit(rng));
    m.view_b = 1;
    ms.push_back(m);
  }
  const RansacResult res = estimate_essential_ransac(ms, {1000, 1e-6, 11});
  int kept = 0;
  for (int i = 0; i < 700; ++i) {
    if (res.inlier_mask[i]) {
      ++kept;
      EXPECT_LT(std::abs(res.essential.residual(ms[i].a.vec(), ms[i].b.vec())), 1e-6);
    }
  }
  EXPECT_GE(kept, 0.95 * 700);
}

TEST(Ransac, DeterministicAcrossThreads) {
  const Mat3 r = rotation_from_rpy_deg(11, -39, -8);
  auto ms = pose_matches(r, Vec3(0.5, 0.87, 0).normalized(), 500, 12);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (Match& m : ms) {
    m.b = Bearing::normalized(m.b.vec() + Vec3(noise(rng), noise(rng), noise(rng)));
  }
  const RansacConfig cfg{300, 1e-5, 42};
  const RansacResult serial = estimate_essential_ransac(ms, cfg, Exec::kSerial);
  for (int threads : {1, 2, 4, 8}) {
    ScopedThreads scope(threads);
    const RansacResult par = estimate_essential_ransac(ms, cfg, Exec::kParallel);
    EXPECT_EQ(par.essential.matrix(), serial.essential.matrix()) << threads;
    EXPECT_EQ(par.inlier_mask, serial.inlier_mask) << threads;
  }
  const RansacResult again = estimate_essential_ransac(ms, cfg, Exec::kSerial);
  EXPECT_EQ(again.essential.matrix(), serial.essential.matrix());
}

TEST(Ransac, NoConsensus) {
  std::mt19937_64 rng(14);
  std::vector<Match> ms;
  for (int i = 0; i < 40; ++i) {
    Match m;
    m.a = Bearing::normalized(testing::random_unit(rng));
    m.b = Bearing::normalized(testing::random_unit(rng));
    ms.push_back(m);
  }
  EXPECT_THROW(estimate_essential_ransac(ms, {50, 1e-12, 1}), NoConsensusError);
}

TEST(Decompose, Standard) {
  const auto ms = pose_matches(Mat3::Identity(), Vec3(1, 0, 0), 100, 15);
  const RelativePose p =
      decompose_essential(EssentialMatrix::from_pose(Mat3::Identity(), Vec3(1, 0, 0)), ms);
  EXPECT_LT((p.rotation - Mat3::Identity()).norm(), 1e-6);
  EXPECT_LT((p.translation - Vec3(1, 0, 0)).norm(), 1e-6);
}

TEST(Decompose, TwistedPair) {
  // Rotation by pi about the baseline shares E (up to sign) with R = I.
  const Vec3 t(1, 0, 0);
  const Mat3 twisted = Eigen::AngleAxisd(kPi, t).toRotationMatrix();
  const auto ms = pose_matches(twisted, t, 100, 16);
  const RelativePose p =
      decompose_essential(EssentialMatrix::from_pose(Mat3::Identity(), t), ms);
  EXPECT_LT((p.rotation - twisted).norm(), 1e-6);
  EXPECT_LT((p.translation - t).norm(), 1e-6);
}

TEST(Decompose, MirroredPointsAgreeWithOracle) {
  const Vec3 t(1, 0, 0);
  const Vec3 c = -t;  // camera j center, frame i
  std::mt19937_64 rng(17);
  std::vector<Vec3> pts = random_points(rng, 100, c);
  for (Vec3& x : pts) x = c - x;  // mirror through the baseline midpoint
  const auto ms = project_matches(pts, Mat3::Identity(), t);
  const EssentialMatrix e = EssentialMatrix::from_pose(Mat3::Identity(), t);
  const auto cands = pose_candidates(e);
  int best = 0, best_count = -1;
  for (int k = 0; k < 4; ++k) {
    const int n = oracle_count(cands[k].rotation, cands[k].translation, ms);
    EXPECT_EQ(n, cheirality_count(cands[k].rotation, cands[k].translation, ms)) << k;
    if (n > best_count) best = k, best_count = n;
  }
  const RelativePose p = decompose_essential(e, ms);
  EXPECT_EQ(p.rotation, cands[best].rotation);
  EXPECT_EQ(p.translation, cands[best].translation);
}

TEST(Decompose, CountsMatchOracleOnRandomPoses) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 r = testing::random_rotation(rng);
    const Vec3 t = testing::random_unit(rng);
    auto ms = pose_matches(r, t, 60, 200 + trial);
    const auto cands = pose_candidates(EssentialMatrix::from_pose(r, t));
    for (const auto& cand : cands) {
      EXPECT_EQ(oracle_count(cand.rotation, cand.translation, ms),
                cheirality_count(cand.rotation, cand.translation, ms));
    }
    const RelativePose p = decompose_essential(EssentialMatrix::from_pose(r, t), ms);
    EXPECT_LT((p.rotation - r).norm(), 1e-9);
    EXPECT_LT((p.translation - t).norm(), 1e-9);
  }
}

TEST(Decompose, TieIsAmbiguous) {
  const Vec3 t(1, 0, 0);
  const Mat3 twisted = Eigen::AngleAxisd(kPi, t).toRotationMatrix();
  auto ms = pose_matches(Mat3::Identity(), t, 20, 19);
  const auto other = pose_matches(twisted, t, 20, 20);
  ms.insert(ms.end(), other.begin(), other.end());
  EXPECT_THROW(decompose_essential(EssentialMatrix::from_pose(Mat3::Identity(), t), ms),
               AmbiguousDecompositionError);
}

TEST(RelativePose, NoisyRecovery) {
  const Mat3 r = rotation_from_rpy_deg(5, 12, 22);
  const Vec3 t = Vec3(0.87, -0.49, 0).normalized();
  auto ms = pose_matches(r, t, 1000, 21);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> noise(0.0, 1e-3 / std::sqrt(3.0));
  for (Match& m : ms) {
    m.a = Bearing::normalized(m.a.vec() + Vec3(noise(rng), noise(rng), noise(rng)));
    m.b = Bearing::normalized(m.b.vec() + Vec3(noise(rng), noise(rng), noise(rng)));
  }
  const RelativePose p = estimate_relative_pose(ms, {1000, 1e-5, 3});
  EXPECT_LT(testing::rotation_error_deg(p.rotation, r), 0.5);
  EXPECT_LT(testing::angle_deg(p.translation, t), 1.0);
}

}  // namespace
}  // namespace omnidepth
