#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "omnidepth/parallel.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth {

using Descriptor = std::array<std::uint64_t, 4>;  // 256 bits

struct Feature {
  PixelCoord pixel;
  Bearing bearing;
  Descriptor descriptor{};
  double response = 0.0;
  double angle = 0.0;  // patch orientation, radians
};

struct DetectorConfig {
  int max_features = 2000;
  double fast_threshold = 0.04;  // intensity units, [0, 1]
  int latitude_bands = 8;
  double pole_margin = 0.05;     // fraction of height excluded at each pole
  int patch_radius = 0;          // 0 = derived from image height
};

// FAST-9 corners ranked by Harris response, with per-latitude-band budgets
// proportional to sin(phi) and a 256-bit oriented binary descriptor whose
// sampling pattern is stretched by 1/sin(phi) to cover a constant solid angle.
std::vector<Feature> detect_features(const EquirectImage& img,
                                     const DetectorConfig& cfg = {});

// Index of the latitude band that a row belongs to, or -1 inside the pole
// margins. Exposed so tests can check the per-band budget.
struct BandLayout {
  int first_row = 0;
  int last_row = 0;  // inclusive
  int bands = 0;
  int band_of_row(int row) const;
  double band_center_phi(int band, int height) const;
};
BandLayout band_layout(int height, const DetectorConfig& cfg);
std::vector<int> band_budgets(const BandLayout& layout, int height,
                              int max_features);

int hamming(const Descriptor& a, const Descriptor& b);

struct Match {
  int view_a = 0;
  int view_b = 0;
  Bearing a;
  Bearing b;
  int distance = -1;  // descriptor Hamming distance, -1 when unknown
  int index_a = -1;   // feature indices when produced by the matcher
  int index_b = -1;

  bool operator==(const Match& o) const {
    return view_a == o.view_a && view_b == o.view_b && a == o.a && b == o.b &&
           distance == o.distance;
  }
};

struct CorrespondenceSet {
  std::vector<int> views;  // sorted unique view ids referenced by matches
  std::vector<Match> matches;

  // Matches for the ordered pair (a, b); rows stored as (b, a) are flipped.
  CorrespondenceSet pair(int a, int b) const;
  void append(const CorrespondenceSet& other);
  std::size_t size() const { return matches.size(); }
  bool empty() const { return matches.empty(); }

  bool operator==(const CorrespondenceSet&) const = default;
};

// Exhaustive Hamming matching with mutual cross-check, sorted by distance.
CorrespondenceSet match_features(const std::vector<Feature>& a,
                                 const std::vector<Feature>& b, int view_a = 0,
                                 int view_b = 1, Exec exec = Exec::kParallel);

// Text format, one match per line:
//   viewA viewB bxA byA bzA bxB byB bzB [distance]
// '#' starts a comment. Bearings are renormalized and duplicate rows dropped.
CorrespondenceSet load_correspondences(const std::filesystem::path& path);
void save_correspondences(const CorrespondenceSet& set,
                          const std::filesystem::path& path);

}  // namespace omnidepth
