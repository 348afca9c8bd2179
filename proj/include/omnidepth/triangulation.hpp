#pragma once

#include <optional>

#include "omnidepth/sphere_model.hpp"

namespace omnidepth {

// Depth of a point along `b_i`, in units of the baseline, from the angles
// the two rays make with the baseline:
//   theta_a = angle(b_i, t),  beta = angle(b_k, t),
//   d = sin(beta) / sin(beta - theta_a).
// `b_k` is the bearing seen from the second camera expressed in the first
// camera's orientation and `t` is the unit direction from the first camera
// center to the second. The result is signed: d <= 0 means the point lies
// behind the first camera.
//
// Throws DegenerateError when either bearing is parallel to the baseline or
// the rays are parallel (point at infinity).
double triangulate_initial_depth(const Bearing& b_i, const Bearing& b_k,
                                 const Bearing& t);

// Non-throwing variant for hot loops; nullopt on degenerate input.
std::optional<double> try_triangulate_initial_depth(const Vec3& b_i,
                                                    const Vec3& b_k,
                                                    const Vec3& t);

}  // namespace omnidepth
