#include "omnidepth/triangulation.hpp"

#include <cmath>

#include "omnidepth/error.hpp"

namespace omnidepth {

namespace {
constexpr double kDegenerate = 1e-12;
}

std::optional<double> try_triangulate_initial_depth(const Vec3& b_i,
                                                    const Vec3& b_k,
                                                    const Vec3& t) {
  // atan2 keeps full precision near 0 and pi where acos does not.
  const double sin_a = b_i.cross(t).norm();
  const double cos_a = b_i.dot(t);
  const double sin_b = b_k.cross(t).norm();
  const double cos_b = b_k.dot(t);
  if (sin_a < kDegenerate || sin_b < kDegenerate) return std::nullopt;
  const double theta_a = std::atan2(sin_a, cos_a);
  const double beta = std::atan2(sin_b, cos_b);
  const double denom = std::sin(beta - theta_a);
  if (std::abs(denom) < kDegenerate) return std::nullopt;
  return sin_b / denom;
}

double triangulate_initial_depth(const Bearing& b_i, const Bearing& b_k,
                                 const Bearing& t) {
  const auto d = try_triangulate_initial_depth(b_i.vec(), b_k.vec(), t.vec());
  if (!d) {
    throw DegenerateError(
        "degenerate triangulation: bearing parallel to baseline or rays "
        "parallel");
  }
  return *d;
}

}  // namespace omnidepth
