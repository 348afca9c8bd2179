#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "omnidepth/correspondence.hpp"
#include "omnidepth/depth_sweep.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth::testing {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng, double max_deg = 180.0) {
  std::uniform_real_distribution<double> u(-max_deg, max_deg);
  return rotation_from_rpy_deg(u(rng), u(rng) / 2.0, u(rng));
}

// Points around the origin, away from both camera centers.
inline std::vector<Vec3> random_points(std::mt19937_64& rng, int n,
                                       const Vec3& c_j, double lo = 2.0,
                                       double hi = 8.0) {
  std::uniform_real_distribution<double> r(lo, hi);
  std::vector<Vec3> pts;
  while (static_cast<int>(pts.size()) < n) {
    const Vec3 p = r(rng) * random_unit(rng);
    if ((p - c_j).norm() > 0.5) pts.push_back(p);
  }
  return pts;
}

// Matches of points X seen from view i (identity) and view j (X_j = R X + t).
inline std::vector<Match> project_matches(const std::vector<Vec3>& pts,
                                          const Mat3& r, const Vec3& t,
                                          int view_b = 1) {
  std::vector<Match> out;
  for (const Vec3& p : pts) {
    Match m;
    m.view_a = 0;
    m.view_b = view_b;
    m.a = Bearing::normalized(p);
    m.b = Bearing::normalized(r * p + t);
    out.push_back(m);
  }
  return out;
}

// Independent two-ray triangulation: least squares for lambda_i, lambda_k in
// lambda_i * b_i = c + lambda_k * b_k (all vectors in frame i).
inline Eigen::Vector2d linear_triangulate(const Vec3& b_i, const Vec3& b_k,
                                          const Vec3& c) {
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = b_i;
  a.col(1) = -b_k;
  return a.colPivHouseholderQr().solve(c);
}

// Brute-force per-candidate 3-channel SAD at one pixel with a 1x1 window.
inline SweepResult brute_force_sad(const EquirectImage& ref, int x, int y,
                                   const std::vector<SweepView>& views,
                                   const DepthCandidates& cand) {
  const ImageDims dims = ref.dims();
  const Vec3 b = pixel_to_bearing({double(x), double(y)}, dims).vec();
  SweepResult best;
  for (double d : cand.values) {
    double cost = 0.0;
    bool ok = true;
    for (const SweepView& v : views) {
      const Vec3 rb = v.rotation * b;
      const Vec3 p = d * rb + v.translation;
      if (p.norm() < 1e-12) {
        ok = false;
        break;
      }
      const PixelCoord q = bearing_to_pixel(p, dims);
      for (int c = 0; c < 3; ++c) {
        cost += std::abs(static_cast<double>(ref.at(x, y, c)) -
                         sample_bilinear(*v.image, q, c));
      }
    }
    if (!ok) continue;
    if (!best.valid || cost < best.cost) {
      best.depth = d;
      best.cost = cost;
      best.valid = true;
    }
  }
  return best;
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / kPi;
}

inline double rotation_error_deg(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

}  // namespace omnidepth::testing
