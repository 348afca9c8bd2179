#pragma once

#include "omnidepth/depth_map.hpp"
#include "omnidepth/parallel.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth {

struct BilateralConfig {
  double spatial_sigma = 3.0;  // pixels
  double range_sigma = 0.05;   // RGB distance, channels in [0, 1]
};

// Edge-preserving RGB smoothing with azimuthal wrap. spatial_sigma <= 0 or
// range_sigma <= 0 returns the input unchanged.
EquirectImage bilateral_filter(const EquirectImage& img,
                               const BilateralConfig& cfg,
                               Exec exec = Exec::kParallel);

struct PostSmoothConfig {
  int iterations = 3;
  double spatial_sigma = 8.0;  // pixels
  double range_sigma = 0.1;    // guide RGB distance
  double depth_sigma = 0.1;    // meters, distance from the input 3x3 median
  double d_min = 0.05;
  double d_max = 10.0;
};

// Iterated joint-bilateral smoothing of depth guided by the reference image.
// Each neighbour is weighted by pixel distance, guide colour difference and
// its depth's distance from the 3x3 median of the input around the centre, so isolated
// outliers get no weight. Invalid pixels neither contribute nor change; output
// depths are clamped to [d_min, d_max].
DepthMap postsmooth(const DepthMap& depth, const EquirectImage& guide,
                    const PostSmoothConfig& cfg, Exec exec = Exec::kParallel);

// Export-path filters over valid pixels only (5x5 by default).
DepthMap gaussian_filter(const DepthMap& depth, double sigma, int radius = 2);
DepthMap median_filter(const DepthMap& depth, int radius = 2);

}  // namespace omnidepth
