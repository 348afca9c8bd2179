#include "omnidepth/epipolar.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "omnidepth/error.hpp"
#include "omnidepth/triangulation.hpp"

namespace omnidepth {

namespace {

using Matrix9 = Eigen::Matrix<double, 9, 9>;
using RowMatrixX9 = Eigen::Matrix<double, Eigen::Dynamic, 9, Eigen::RowMajor>;

void fix_sign(Mat3& e) {
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  e.cwiseAbs().maxCoeff(&r, &c);
  if (e(r, c) < 0.0) e = -e;
}

}  // namespace

EssentialMatrix EssentialMatrix::project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (!(svd.singularValues()(1) > 0.0)) {
    throw DegenerateError("essential matrix has rank < 2");
  }
  // Equal singular values (s, s, 0); s = 1 gives Frobenius norm sqrt(2).
  Mat3 e = svd.matrixU() * Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal() *
           svd.matrixV().transpose();
  fix_sign(e);
  return EssentialMatrix(e);
}

EssentialMatrix EssentialMatrix::from_pose(const Mat3& r, const Vec3& t) {
  return project(skew(t) * r);
}

EssentialMatrix eight_point(std::span<const Match> matches) {
  if (matches.size() < 8) {
    std::ostringstream os;
    os << "eight_point needs at least 8 matches, got " << matches.size();
    throw InvalidArgument(os.str());
  }
  // Pad to at least 9 rows so the SVD exposes all nine singular values.
  const Eigen::Index rows = std::max<Eigen::Index>(9, matches.size());
  RowMatrixX9 a = RowMatrixX9::Zero(rows, 9);
  for (std::size_t k = 0; k < matches.size(); ++k) {
    const Vec3& bi = matches[k].a.vec();
    const Vec3& bj = matches[k].b.vec();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(k, 3 * r + c) = bj(r) * bi(c);
    }
  }
  Eigen::JacobiSVD<RowMatrixX9> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(7) > 1e-10 * s(0))) {
    throw DegenerateError(
        "degenerate configuration: epipolar design matrix is rank deficient");
  }
  const Eigen::Matrix<double, 9, 1> v = svd.matrixV().col(8);
  Mat3 e;
  e << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return EssentialMatrix::project(e);
}

double sampson_error(const Mat3& e, const Vec3& b_i, const Vec3& b_j) {
  const Vec3 ei = e * b_i;
  const Vec3 etj = e.transpose() * b_j;
  const double r = b_j.dot(ei);
  const double denom =
      ei(0) * ei(0) + ei(1) * ei(1) + etj(0) * etj(0) + etj(1) * etj(1);
  if (denom < 1e-30) return r * r;
  return r * r / denom;
}

namespace {

int count_inliers(const Mat3& e, std::span<const Match> matches,
                  double threshold) {
  int n = 0;
  for (const Match& m : matches) {
    n += sampson_error(e, m.a.vec(), m.b.vec()) < threshold;
  }
  return n;
}

std::vector<std::array<int, 8>> draw_samples(std::size_t n, int iterations,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::array<int, 8>> samples(iterations);
  for (auto& s : samples) {
    for (int k = 0; k < 8; ++k) {
      int idx = 0;
      bool dup = true;
      while (dup) {
        idx = static_cast<int>(rng() % n);
        dup = std::find(s.begin(), s.begin() + k, idx) != s.begin() + k;
      }
      s[k] = idx;
    }
  }
  return samples;
}

}  // namespace

RansacResult estimate_essential_ransac(std::span<const Match> matches,
                                       const RansacConfig& cfg, Exec exec) {
  if (matches.size() < 8) {
    std::ostringstream os;
    os << "RANSAC needs at least 8 matches, got " << matches.size();
    throw InvalidArgument(os.str());
  }
  if (cfg.iterations <= 0 || !(cfg.threshold > 0.0)) {
    throw InvalidArgument("RANSAC iterations and threshold must be positive");
  }
  const auto samples = draw_samples(matches.size(), cfg.iterations, cfg.seed);
  std::vector<int> counts(cfg.iterations, -1);
  std::vector<Mat3> models(cfg.iterations, Mat3::Zero());

  const auto body = [&](int it) {
    std::array<Match, 8> subset;
    for (int k = 0; k < 8; ++k) subset[k] = matches[samples[it][k]];
    try {
      const EssentialMatrix e = eight_point(subset);
      models[it] = e.matrix();
      counts[it] = count_inliers(e.matrix(), matches, cfg.threshold);
    } catch (const DegenerateError&) {
      counts[it] = -1;
    }
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int it = 0; it < cfg.iterations; ++it) body(it);
  } else {
    for (int it = 0; it < cfg.iterations; ++it) body(it);
  }

  int best = -1;
  for (int it = 0; it < cfg.iterations; ++it) {
    if (counts[it] >= 0 && (best < 0 || counts[it] > counts[best])) best = it;
  }
  if (best < 0 || counts[best] < 8) {
    std::ostringstream os;
    os << "no consensus: best hypothesis has "
       << (best < 0 ? 0 : counts[best]) << " inliers";
    throw NoConsensusError(os.str());
  }

  const auto mask_for = [&](const Mat3& e) {
    std::vector<std::uint8_t> mask(matches.size(), 0);
    for (std::size_t k = 0; k < matches.size(); ++k) {
      mask[k] = sampson_error(e, matches[k].a.vec(), matches[k].b.vec()) <
                cfg.threshold;
    }
    return mask;
  };

  RansacResult result;
  result.essential = EssentialMatrix::project(models[best]);
  result.inlier_mask = mask_for(models[best]);
  result.inlier_count = counts[best];

  std::vector<Match> inliers;
  inliers.reserve(result.inlier_count);
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (result.inlier_mask[k]) inliers.push_back(matches[k]);
  }
  try {
    const EssentialMatrix refit = eight_point(inliers);
    auto mask = mask_for(refit.matrix());
    const int n = static_cast<int>(std::count(mask.begin(), mask.end(), 1));
    if (n >= result.inlier_count) {
      result.essential = refit;
      result.inlier_mask = std::move(mask);
      result.inlier_count = n;
    }
  } catch (const DegenerateError&) {
    // Keep the minimal-sample model.
  }
  return result;
}

std::array<PoseCandidate, 4> pose_candidates(const EssentialMatrix& e) {
  Eigen::JacobiSVD<Mat3> svd(e.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if (u.determinant() < 0.0) u.col(2) *= -1.0;
  if (v.determinant() < 0.0) v.col(2) *= -1.0;
  Mat3 w;
  w << 0.0, -1.0, 0.0,
       1.0, 0.0, 0.0,
       0.0, 0.0, 1.0;
  const Mat3 r1 = u * w * v.transpose();
  const Mat3 r2 = u * w.transpose() * v.transpose();
  const Vec3 t = u.col(2).normalized();
  return {{{r1, t}, {r1, -t}, {r2, t}, {r2, -t}}};
}

int cheirality_count(const Mat3& r, const Vec3& t, std::span<const Match> matches,
                     std::span<const std::uint8_t> mask) {
  // Camera j's center in frame i is -Rᵀt; camera i's center in frame j is t.
  const Vec3 center_j = -(r.transpose() * t);
  int n = 0;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (!mask.empty() && !mask[k]) continue;
    const Vec3& bi = matches[k].a.vec();
    const Vec3& bj = matches[k].b.vec();
    const Vec3 bj_i = r.transpose() * bj;
    // The depth formula only sees unsigned angles, so it cannot tell a ray
    // from its mirror image about the baseline (the twisted pair). Both rays
    // must also lie in the same half-plane bounded by the baseline.
    if (center_j.cross(bi).dot(center_j.cross(bj_i)) <= 0.0) continue;
    const auto di = try_triangulate_initial_depth(bi, bj_i, center_j);
    const auto dj = try_triangulate_initial_depth(bj, r * bi, t);
    n += di && dj && *di > 0.0 && *dj > 0.0;
  }
  return n;
}

RelativePose decompose_essential(const EssentialMatrix& e,
                                 std::span<const Match> matches,
                                 std::span<const std::uint8_t> mask) {
  if (!mask.empty() && mask.size() != matches.size()) {
    throw InvalidArgument("inlier mask size does not match correspondences");
  }
  const auto candidates = pose_candidates(e);
  std::array<int, 4> counts{};
  for (int c = 0; c < 4; ++c) {
    counts[c] = cheirality_count(candidates[c].rotation,
                                 candidates[c].translation, matches, mask);
  }
  const int best = static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  if (counts[best] == 0) {
    throw DegenerateError("no candidate pose places any match in front of both cameras");
  }
  for (int c = 0; c < 4; ++c) {
    if (c != best && counts[c] == counts[best]) {
      std::ostringstream os;
      os << "ambiguous decomposition: candidates " << best << " and " << c
         << " both have " << counts[best] << " positive-depth matches";
      throw AmbiguousDecompositionError(os.str());
    }
  }
  RelativePose pose;
  pose.rotation = candidates[best].rotation;
  pose.translation = candidates[best].translation;
  if (mask.empty()) {
    pose.inlier_mask.assign(matches.size(), 1);
  } else {
    pose.inlier_mask.assign(mask.begin(), mask.end());
  }
  pose.inlier_count = static_cast<int>(
      std::count(pose.inlier_mask.begin(), pose.inlier_mask.end(), 1));
  return pose;
}

RelativePose estimate_relative_pose(std::span<const Match> matches,
                                    const RansacConfig& cfg, Exec exec) {
  const RansacResult ransac = estimate_essential_ransac(matches, cfg, exec);
  return decompose_essential(ransac.essential, matches, ransac.inlier_mask);
}

}  // namespace omnidepth
