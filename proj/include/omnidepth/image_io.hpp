#pragma once

#include <filesystem>

#include "omnidepth/depth_map.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth {

// Reads 8/16-bit PNG or JPEG into [0,1] RGB. Grayscale inputs are expanded.
EquirectImage load_image(const std::filesystem::path& path,
                         bool allow_any_aspect = false);
// bits is 8 or 16.
void save_png(const EquirectImage& img, const std::filesystem::path& path,
              int bits = 8);

// Single-channel little-endian PFM in meters; invalid pixels are written as -1.
// Rows are stored bottom-to-top as the format requires.
void write_pfm(const DepthMap& depth, const std::filesystem::path& path);
// Any value <= 0 or non-finite is read back as invalid.
DepthMap read_pfm(const std::filesystem::path& path);

// 16-bit grayscale PNG with depth linearly mapped from [d_min, d_max] to
// [0, 65535]; invalid pixels are 0.
void write_depth_png16(const DepthMap& depth, double d_min, double d_max,
                       const std::filesystem::path& path);

}  // namespace omnidepth
