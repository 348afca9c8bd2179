#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omnidepth/correspondence.hpp"
#include "omnidepth/epipolar.hpp"
#include "omnidepth/sphere_model.hpp"
#include "omnidepth/triangulation.hpp"

namespace omnidepth {

inline constexpr double kDefaultKappa = 0.01;

// s_k = d_ij / d_ik. Throws InvalidArgument for non-positive or non-finite
// depths.
double scale_factor(double d_ij, double d_ik);

struct ScaleEstimate {
  std::vector<double> samples;
  double scale = 1.0;
  int cluster_size = 0;
  double kappa = kDefaultKappa;
};

// Picks the sample with the most neighbours within kappa (inclusive, counting
// itself). Ties go to the candidate closest to the median of the union of the
// tied neighbourhoods, then to the smaller value.
ScaleEstimate cluster_scales(std::span<const double> samples, double kappa);

struct RigView {
  int index = 0;
  Mat3 rotation = Mat3::Identity();    // R_ik
  Vec3 translation = Vec3::Zero();     // unit t_ik (zero for the reference)
  double scale = 1.0;                  // s_k
  std::string image;                   // optional, relative to the rig file

  // s_k * t_ik, in units of the reference baseline.
  Vec3 scaled_translation() const { return scale * translation; }
};

// Star-shaped rig around the reference view. Metric translation of view k is
// baseline_length * s_k * t_ik; the baseline view has s = 1 exactly.
struct Rig {
  int reference = 0;
  int baseline_view = 1;
  double kappa = kDefaultKappa;
  double baseline_length = 1.0;  // meters spanned by the reference baseline
  std::vector<RigView> views;    // includes the reference

  const RigView& view(int index) const;
  RigView& view(int index);
  bool has_view(int index) const;
  Vec3 metric_translation(int index) const {
    return baseline_length * view(index).scaled_translation();
  }
  // Copy with every non-reference scale forced to 1.
  Rig without_scaling() const;
  // Copy restricted to the reference plus the listed views.
  Rig subset(std::span<const int> keep) const;
};

// Relative pose of `view` with respect to the reference together with the
// reference-to-view matches it was estimated from (inlier mask aligned with
// matches.matches).
struct PairObservation {
  int view = 0;
  RelativePose pose;
  CorrespondenceSet matches;
};

struct RegistrationConfig {
  int reference = 0;
  std::optional<int> baseline_view;  // default: most inliers to the reference
  double kappa = kDefaultKappa;
  double baseline_length = 1.0;
};

struct RegistrationResult {
  Rig rig;
  std::map<int, ScaleEstimate> scales;  // per non-baseline view
};

// Scales each unit translation by the ratio of depths triangulated through the
// baseline pair and through the view's own pair, over three-view tracks that
// share an identical reference bearing.
RegistrationResult register_rig(std::span<const PairObservation> pairs,
                                const RegistrationConfig& cfg);

// Convenience: pairwise RANSAC + decomposition against the reference for every
// other view in `set`, then register_rig.
RegistrationResult register_from_correspondences(const CorrespondenceSet& set,
                                                 const RegistrationConfig& cfg,
                                                 const RansacConfig& ransac);

// JSON rig file, "schema": 1.
void save_rig(const Rig& rig, const std::filesystem::path& path);
Rig load_rig(const std::filesystem::path& path);

}  // namespace omnidepth
