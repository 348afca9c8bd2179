#include "omnidepth/sphere_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Geometry>

#include "omnidepth/error.hpp"

namespace omnidepth {

Bearing Bearing::normalized(const Vec3& v) {
  if (!v.allFinite()) throw InvalidArgument("invalid bearing: non-finite component");
  const double n = v.norm();
  if (n == 0.0) throw InvalidArgument("invalid bearing: zero vector");
  // Keep already-unit input bit-identical so renormalization is idempotent.
  if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) {
    return Bearing(v);
  }
  return Bearing(v / n);
}

EquirectImage::EquirectImage(int width, int height, bool allow_any_aspect)
    : width_(width), height_(height) {
  if (width < 2 || height < 2) {
    throw InvalidArgument("equirectangular image must be at least 2x2");
  }
  if (!allow_any_aspect && width != 2 * height) {
    std::ostringstream os;
    os << "equirectangular image must have width = 2 * height (got " << width
       << "x" << height << ")";
    throw InvalidArgument(os.str());
  }
  data_.assign(static_cast<std::size_t>(width) * height * 3, 0.0f);
}

void EquirectImage::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const float c = data_[i];
    if (!std::isfinite(c) || c < 0.0f || c > 1.0f) {
      std::ostringstream os;
      os << "image channel value out of [0,1] at flat index " << i;
      throw DataError(os.str());
    }
  }
}

std::vector<float> EquirectImage::gray() const {
  std::vector<float> g(static_cast<std::size_t>(width_) * height_);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = 0.299f * data_[3 * i] + 0.587f * data_[3 * i + 1] +
           0.114f * data_[3 * i + 2];
  }
  return g;
}

SphericalDir pixel_to_spherical(const PixelCoord& px, const ImageDims& dims) {
  return {kTwoPi * px.u / dims.width, kPi * px.v / dims.height};
}

Bearing spherical_to_bearing(const SphericalDir& dir) {
  const double s = std::sin(dir.phi);
  return Bearing::normalized(std::cos(dir.theta) * s, std::sin(dir.theta) * s,
                             std::cos(dir.phi));
}

PixelCoord normalize_pixel(const PixelCoord& px, const ImageDims& dims) {
  double u = std::fmod(px.u, static_cast<double>(dims.width));
  if (u < 0.0) u += dims.width;
  if (u >= dims.width) u = 0.0;
  const double vmax = std::nextafter(static_cast<double>(dims.height), 0.0);
  return {u, std::clamp(px.v, 0.0, vmax)};
}

Bearing pixel_to_bearing(const PixelCoord& px, const ImageDims& dims) {
  if (!std::isfinite(px.u) || !std::isfinite(px.v)) {
    throw InvalidArgument("invalid coordinate: non-finite pixel");
  }
  if (dims.width < 2 || dims.height < 2) {
    throw InvalidArgument("invalid coordinate: image dims must be >= 2");
  }
  return spherical_to_bearing(pixel_to_spherical(px, dims));
}

PixelCoord bearing_to_pixel(const Vec3& dir, const ImageDims& dims) {
  if (!dir.allFinite()) throw InvalidArgument("invalid bearing: non-finite");
  const double rho = std::hypot(dir.x(), dir.y());
  if (rho == 0.0 && dir.z() == 0.0) {
    throw InvalidArgument("invalid bearing: zero vector");
  }
  double theta = 0.0;
  if (rho > 0.0) {
    theta = std::atan2(dir.y(), dir.x());
    if (theta < 0.0) theta += kTwoPi;
    if (theta >= kTwoPi) theta = 0.0;
  }
  const double phi = std::atan2(rho, dir.z());
  return {dims.width / kTwoPi * theta, dims.height / kPi * phi};
}

namespace {

struct BilinearTaps {
  std::size_t i00, i01, i10, i11;
  double fx, fy;
};

BilinearTaps bilinear_taps(const EquirectImage& img, const PixelCoord& px) {
  const int w = img.width();
  const int h = img.height();
  double u = std::fmod(px.u, static_cast<double>(w));
  if (u < 0.0) u += w;
  const double v = std::clamp(px.v, 0.0, static_cast<double>(h - 1));
  const double ufl = std::floor(u);
  int x0 = static_cast<int>(ufl);
  if (x0 >= w) x0 -= w;
  const double vfl = std::floor(v);
  const int y0 = std::min(static_cast<int>(vfl), h - 1);
  const int x1 = x0 + 1 == w ? 0 : x0 + 1;
  const int y1 = std::min(y0 + 1, h - 1);
  const auto idx = [w](int x, int y) {
    return (static_cast<std::size_t>(y) * w + x) * 3;
  };
  return {idx(x0, y0), idx(x1, y0), idx(x0, y1), idx(x1, y1), u - ufl, v - vfl};
}

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

double sample_bilinear(const EquirectImage& img, const PixelCoord& px,
                       int channel) {
  const BilinearTaps t = bilinear_taps(img, px);
  const auto& d = img.data();
  const double top = lerp(d[t.i00 + channel], d[t.i01 + channel], t.fx);
  const double bot = lerp(d[t.i10 + channel], d[t.i11 + channel], t.fx);
  return lerp(top, bot, t.fy);
}

std::array<double, 3> sample_bilinear_rgb(const EquirectImage& img,
                                          const PixelCoord& px) {
  const BilinearTaps t = bilinear_taps(img, px);
  const auto& d = img.data();
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double top = lerp(d[t.i00 + c], d[t.i01 + c], t.fx);
    const double bot = lerp(d[t.i10 + c], d[t.i11 + c], t.fx);
    out[c] = lerp(top, bot, t.fy);
  }
  return out;
}

Mat3 rotation_from_rpy_deg(double roll, double pitch, double yaw) {
  constexpr double kDeg = kPi / 180.0;
  const Eigen::AngleAxisd rx(roll * kDeg, Vec3::UnitX());
  const Eigen::AngleAxisd ry(pitch * kDeg, Vec3::UnitY());
  const Eigen::AngleAxisd rz(yaw * kDeg, Vec3::UnitZ());
  return (rz * ry * rx).toRotationMatrix();
}

Vec3 rpy_deg_from_rotation(const Mat3& r) {
  constexpr double kRad = 180.0 / kPi;
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll * kRad, pitch * kRad, yaw * kRad};
}

Mat3 skew(const Vec3& t) {
  Mat3 m;
  m << 0.0, -t.z(), t.y(),
       t.z(), 0.0, -t.x(),
       -t.y(), t.x(), 0.0;
  return m;
}

}  // namespace omnidepth
