#include "omnidepth/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "omnidepth/error.hpp"

namespace omnidepth {

namespace fs = std::filesystem;

EquirectImage load_image(const fs::path& path, bool allow_any_aspect) {
  if (!fs::exists(path)) throw DataError("image not found: " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_COLOR);
  if (m.empty()) throw DataError("cannot decode image: " + path.string());
  double scale = 1.0;
  switch (m.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    default:
      throw DataError("unsupported image bit depth: " + path.string());
  }
  EquirectImage img(m.cols, m.rows, allow_any_aspect);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        // OpenCV stores BGR.
        const double raw = m.depth() == CV_8U
                               ? m.at<cv::Vec3b>(y, x)[2 - c]
                               : m.at<cv::Vec3w>(y, x)[2 - c];
        img.at(x, y, c) = static_cast<float>(raw * scale);
      }
    }
  }
  return img;
}

void save_png(const EquirectImage& img, const fs::path& path, int bits) {
  if (bits != 8 && bits != 16) throw InvalidArgument("PNG bit depth must be 8 or 16");
  const double peak = bits == 8 ? 255.0 : 65535.0;
  cv::Mat m(img.height(), img.width(), bits == 8 ? CV_8UC3 : CV_16UC3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const long v = std::lround(std::clamp(img.at(x, y, c), 0.0f, 1.0f) * peak);
        if (bits == 8) {
          m.at<cv::Vec3b>(y, x)[2 - c] = static_cast<std::uint8_t>(v);
        } else {
          m.at<cv::Vec3w>(y, x)[2 - c] = static_cast<std::uint16_t>(v);
        }
      }
    }
  }
  if (!cv::imwrite(path.string(), m)) {
    throw DataError("cannot write image: " + path.string());
  }
}

void write_pfm(const DepthMap& depth, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "Pf\n" << depth.width << " " << depth.height << "\n-1.0\n";
  std::vector<float> row(depth.width);
  for (int y = depth.height - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i = depth.index(x, y);
      row[x] = depth.valid[i] ? static_cast<float>(depth.depth[i]) : -1.0f;
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (float& f : row) {
        auto bits = std::bit_cast<std::uint32_t>(f);
        bits = __builtin_bswap32(bits);
        f = std::bit_cast<float>(bits);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

DepthMap read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open PFM: " + path.string());
  std::string magic;
  int w = 0;
  int h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || w <= 0 || h <= 0 ||
      scale == 0.0) {
    throw DataError("malformed PFM header: " + path.string());
  }
  in.get();  // single whitespace before raster
  const int channels = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  DepthMap d(w, h);
  std::vector<float> row(static_cast<std::size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw DataError("truncated PFM raster: " + path.string());
    for (int x = 0; x < w; ++x) {
      float f = row[static_cast<std::size_t>(x) * channels];
      if (swap) {
        f = std::bit_cast<float>(
            __builtin_bswap32(std::bit_cast<std::uint32_t>(f)));
      }
      const std::size_t i = d.index(x, y);
      if (std::isfinite(f) && f > 0.0f) {
        d.depth[i] = f;
        d.valid[i] = 1;
      }
    }
  }
  return d;
}

void write_depth_png16(const DepthMap& depth, double d_min, double d_max,
                       const fs::path& path) {
  if (!(d_max > d_min)) throw InvalidArgument("png depth range is empty");
  cv::Mat m(depth.height, depth.width, CV_16UC1, cv::Scalar(0));
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i = depth.index(x, y);
      if (!depth.valid[i]) continue;
      const double t = std::clamp((depth.depth[i] - d_min) / (d_max - d_min),
                                  0.0, 1.0);
      m.at<std::uint16_t>(y, x) =
          static_cast<std::uint16_t>(std::lround(t * 65535.0));
    }
  }
  if (!cv::imwrite(path.string(), m)) {
    throw DataError("cannot write image: " + path.string());
  }
}

}  // namespace omnidepth
