#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "omnidepth/correspondence.hpp"
#include "omnidepth/parallel.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth {

// Rank-2 matrix with equal nonzero singular values and Frobenius norm sqrt(2),
// so that b_jᵀ E b_i = 0 for bearings b_i in view i and b_j in view j.
// The sign is fixed so that the entry of largest magnitude is positive.
class EssentialMatrix {
 public:
  EssentialMatrix() = default;

  // Projects an arbitrary 3x3 matrix onto the essential manifold.
  static EssentialMatrix project(const Mat3& m);
  // E = [t]x R.
  static EssentialMatrix from_pose(const Mat3& r, const Vec3& t);

  const Mat3& matrix() const { return e_; }
  double residual(const Vec3& b_i, const Vec3& b_j) const {
    return b_j.dot(e_ * b_i);
  }

 private:
  explicit EssentialMatrix(const Mat3& e) : e_(e) {}
  Mat3 e_ = Mat3::Zero();
};

// Linear least-squares solution of b_jᵀ E b_i = 0 over all matches (a = view
// i, b = view j). Requires >= 8 matches; throws DegenerateError when the
// design matrix has a null space of dimension > 1.
EssentialMatrix eight_point(std::span<const Match> matches);

// (b_jᵀ E b_i)² / (|(E b_i)_{1,2}|² + |(Eᵀ b_j)_{1,2}|²); falls back to the
// squared algebraic residual when the denominator is below 1e-30.
double sampson_error(const Mat3& e, const Vec3& b_i, const Vec3& b_j);
inline double sampson_error(const EssentialMatrix& e, const Match& m) {
  return sampson_error(e.matrix(), m.a.vec(), m.b.vec());
}

struct RansacConfig {
  int iterations = 1000;
  double threshold = 1e-6;
  std::uint64_t seed = 0;
};

struct RansacResult {
  EssentialMatrix essential;
  std::vector<std::uint8_t> inlier_mask;
  int inlier_count = 0;
};

// Deterministic for a given seed regardless of the thread count: all sample
// index sets are drawn up front and the winner is the lowest iteration among
// ties.
RansacResult estimate_essential_ransac(std::span<const Match> matches,
                                       const RansacConfig& cfg,
                                       Exec exec = Exec::kParallel);

struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();  // unit direction, X_j = R X_i + t
  int inlier_count = 0;
  std::vector<std::uint8_t> inlier_mask;
};

struct PoseCandidate {
  Mat3 rotation;
  Vec3 translation;
};

// The four (R, ±t) factorizations of E.
std::array<PoseCandidate, 4> pose_candidates(const EssentialMatrix& e);

// Matches triangulated with positive depth in both views.
int cheirality_count(const Mat3& r, const Vec3& t, std::span<const Match> matches,
                     std::span<const std::uint8_t> mask = {});

// Picks the candidate with the largest cheirality count over the masked
// matches. Throws AmbiguousDecompositionError on a tie for the maximum.
RelativePose decompose_essential(const EssentialMatrix& e,
                                 std::span<const Match> matches,
                                 std::span<const std::uint8_t> mask = {});

// RANSAC followed by decomposition on the inliers.
RelativePose estimate_relative_pose(std::span<const Match> matches,
                                    const RansacConfig& cfg,
                                    Exec exec = Exec::kParallel);

}  // namespace omnidepth
