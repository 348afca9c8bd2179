#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "omnidepth/depth_map.hpp"
#include "omnidepth/depth_sweep.hpp"
#include "omnidepth/registration.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth {

// Depth error after dividing both maps by the largest valid ground-truth
// depth, so the peak is 1.
struct Metrics {
  double mse = 0.0;
  double psnr = std::numeric_limits<double>::infinity();  // +inf when mse == 0
  std::size_t valid_count = 0;   // jointly valid pixels
  double valid_fraction = 0.0;   // valid_count / pixel count
  double normalization = 1.0;    // meters
};

// -10 log10(mse), +inf for mse == 0.
double psnr_from_mse(double mse);

// Throws InvalidArgument on size mismatch and DataError when no pixel is
// valid in both maps.
Metrics compute_metrics(const DepthMap& est, const DepthMap& gt);

struct ColoredPoint {
  Vec3 position;
  unsigned char rgb[3];
};

struct PlyOptions {
  bool gaussian = false;
  double gaussian_sigma = 1.1;
  bool median = false;
};

// One point per valid pixel at depth * bearing in the reference frame.
std::vector<ColoredPoint> point_cloud(const DepthMap& depth,
                                      const EquirectImage& img,
                                      const PlyOptions& opts = {});
// Binary little-endian PLY with float xyz and uchar rgb. Returns the vertex
// count.
std::size_t export_ply(const DepthMap& depth, const EquirectImage& img,
                       const std::filesystem::path& path,
                       const PlyOptions& opts = {});
std::vector<ColoredPoint> read_ply(const std::filesystem::path& path);

struct AblationGrid {
  std::vector<int> cameras;      // views 0..n-1 of the rig
  std::vector<int> windows;      // odd window sizes in pixels
  std::vector<bool> scaling;     // true: rig scales, false: forced to 1
};

struct AblationConfig {
  std::string scene = "scene";
  SweepConfig sweep{};
  bool timing = true;  // false writes runtime 0 so reports are reproducible
};

struct AblationRow {
  std::string scene;
  int cameras = 0;
  int window = 0;
  bool scaling = true;
  Metrics metrics;
  double runtime_s = 0.0;
};

// Metrics against gt for every grid cell; images[v] is view v of the rig.
std::vector<AblationRow> run_ablation(std::span<const EquirectImage> images,
                                      const Rig& rig, const DepthMap& gt,
                                      const AblationGrid& grid,
                                      const AblationConfig& cfg,
                                      Exec exec = Exec::kParallel);
// Loads a synth dataset directory; uses rig.json when present, otherwise
// rig_gt.json. Throws DataError without depth_00.pfm.
std::vector<AblationRow> run_ablation(const std::filesystem::path& dataset,
                                      const AblationGrid& grid,
                                      AblationConfig cfg,
                                      Exec exec = Exec::kParallel);

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);
void write_ablation_table(std::span<const AblationRow> rows, std::ostream& out);

}  // namespace omnidepth
