#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace omnidepth {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ImageDims {
  int width = 0;
  int height = 0;

  bool operator==(const ImageDims&) const = default;
};

// Continuous equirectangular coordinate. Pixel index k maps to coordinate k
// (centers, no half-pixel offset). v = 0 is the zenith (+Z).
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Azimuth theta in [0, 2pi) measured from +X, polar phi in [0, pi) from +Z.
struct SphericalDir {
  double theta = 0.0;
  double phi = 0.0;
};

// Unit direction on the view sphere.
class Bearing {
 public:
  Bearing() : v_(1.0, 0.0, 0.0) {}

  // Throws InvalidArgument for zero or non-finite input.
  static Bearing normalized(const Vec3& v);
  static Bearing normalized(double x, double y, double z) {
    return normalized(Vec3(x, y, z));
  }

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double dot(const Bearing& o) const { return v_.dot(o.v_); }

  bool operator==(const Bearing& o) const { return v_ == o.v_; }

 private:
  explicit Bearing(const Vec3& unit) : v_(unit) {}
  Vec3 v_;
};

// Interleaved RGB raster, channels in [0, 1].
class EquirectImage {
 public:
  EquirectImage() = default;
  // Enforces w = 2h unless allow_any_aspect is set (cropped inputs).
  EquirectImage(int width, int height, bool allow_any_aspect = false);

  int width() const { return width_; }
  int height() const { return height_; }
  ImageDims dims() const { return {width_, height_}; }
  bool empty() const { return data_.empty(); }

  float at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  float& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  const float* pixel(int x, int y) const {
    return &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  // Throws DataError if any channel is non-finite or outside [0, 1].
  void validate() const;

  // Luma in [0, 1], row-major.
  std::vector<float> gray() const;

  bool operator==(const EquirectImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

SphericalDir pixel_to_spherical(const PixelCoord& px, const ImageDims& dims);
Bearing spherical_to_bearing(const SphericalDir& dir);

// u wraps modulo w; v is clamped to [0, h).
PixelCoord normalize_pixel(const PixelCoord& px, const ImageDims& dims);

Bearing pixel_to_bearing(const PixelCoord& px, const ImageDims& dims);

// Accepts any nonzero direction (scale invariant). At the poles u = 0.
PixelCoord bearing_to_pixel(const Vec3& dir, const ImageDims& dims);
inline PixelCoord bearing_to_pixel(const Bearing& b, const ImageDims& dims) {
  return bearing_to_pixel(b.vec(), dims);
}

// Bilinear interpolation with azimuthal wrap in u and clamp in v.
double sample_bilinear(const EquirectImage& img, const PixelCoord& px,
                       int channel);
std::array<double, 3> sample_bilinear_rgb(const EquirectImage& img,
                                          const PixelCoord& px);

// Rotation helpers shared by synth, tests and tools. Angles in degrees;
// R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_from_rpy_deg(double roll, double pitch, double yaw);
Vec3 rpy_deg_from_rotation(const Mat3& r);
Mat3 skew(const Vec3& t);

}  // namespace omnidepth
