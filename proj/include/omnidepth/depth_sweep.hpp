#pragma once

#include <span>
#include <vector>

#include "omnidepth/depth_map.hpp"
#include "omnidepth/filters.hpp"
#include "omnidepth/parallel.hpp"
#include "omnidepth/registration.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth {

struct DepthCandidates {
  double d_min = 0.05;
  double d_max = 10.0;
  std::vector<double> values;  // ascending, inclusive endpoints

  double step() const {
    return values.size() > 1 ? (d_max - d_min) / (values.size() - 1) : 0.0;
  }
};

// Uniform in depth (not inverse depth).
DepthCandidates make_candidates(double d_min, double d_max, int count);

struct SweepConfig {
  int window_radius = 3;  // window is (2r+1) x (2r+1)
  double d_min = 0.05;
  double d_max = 10.0;
  int candidate_count = 200;
  bool prefilter = true;
  BilateralConfig prefilter_params{};
  bool postfilter = true;
  PostSmoothConfig postfilter_params{};
  double crop_bottom = 0.0;  // fraction of rows at the bottom left unestimated
  // Compare every window sample against the centre reference pixel instead of
  // the offset reference pixel.
  bool center_reference = false;
};

// A target view for the sweep: X_k = R * X_ref + t with metric t.
struct SweepView {
  const EquirectImage* image = nullptr;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

// Reprojects a reference pixel hypothesized at depth d into a target view.
// Throws InvalidArgument for d <= 0 and DegenerateError when the point lands
// on the target camera center.
PixelCoord project_virtual(const PixelCoord& u_ref, double depth,
                           const Mat3& rotation, const Vec3& translation,
                           const ImageDims& dims);

struct SweepResult {
  double depth = 0.0;
  double cost = 0.0;
  bool valid = false;
};

// Windowed sum of absolute RGB differences over all target views, minimized
// over the candidates; ties go to the smaller depth. The pixel must be at
// least window_radius rows away from the top and bottom borders.
SweepResult sweep_pixel(const EquirectImage& reference, int x, int y,
                        std::span<const SweepView> views,
                        const DepthCandidates& candidates, int window_radius,
                        bool center_reference = false);

// Raw argmin over the reference raster (no pre/post filtering). Rows within
// window_radius of the poles and cropped rows are invalid. kSerial is the
// reference kernel; kParallel produces bit-identical output.
DepthMap sweep_depth(const EquirectImage& reference,
                     std::span<const SweepView> views,
                     const DepthCandidates& candidates, int window_radius,
                     double crop_bottom = 0.0, Exec exec = Exec::kParallel,
                     bool center_reference = false);

// Pre-smoothing, sweep and post-smoothing over a registered rig.
// images[v] is the image of view index v.
DepthMap estimate_depth_map(std::span<const EquirectImage> images,
                            const Rig& rig, const SweepConfig& cfg,
                            Exec exec = Exec::kParallel);

}  // namespace omnidepth
