#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace omnidepth {

// Per-pixel metric depth aligned with a reference equirectangular image.
// Invalid pixels carry valid == 0; their depth value is unspecified.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;
  std::vector<double> cost;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w),
        height(h),
        depth(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 0),
        cost(static_cast<std::size_t>(w) * h, 0.0) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  std::size_t size() const { return depth.size(); }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }

  bool operator==(const DepthMap&) const = default;
};

}  // namespace omnidepth
