#include "omnidepth/filters.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "omnidepth/error.hpp"

namespace omnidepth {

namespace {

inline int wrap(int x, int w) {
  x %= w;
  return x < 0 ? x + w : x;
}

template <typename Body>
void for_rows(int h, Exec exec, Body&& body) {
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 2)
    for (int y = 0; y < h; ++y) body(y);
  } else {
    for (int y = 0; y < h; ++y) body(y);
  }
}

}  // namespace

EquirectImage bilateral_filter(const EquirectImage& img,
                               const BilateralConfig& cfg, Exec exec) {
  if (!(cfg.spatial_sigma > 0.0) || !(cfg.range_sigma > 0.0)) return img;
  const int w = img.width();
  const int h = img.height();
  const int r = std::max(1, static_cast<int>(std::ceil(2.0 * cfg.spatial_sigma)));
  std::vector<double> spatial((2 * r + 1) * (2 * r + 1));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      spatial[(dy + r) * (2 * r + 1) + dx + r] =
          std::exp(-0.5 * (dx * dx + dy * dy) / (cfg.spatial_sigma * cfg.spatial_sigma));
    }
  }
  const double inv_range = 0.5 / (cfg.range_sigma * cfg.range_sigma);
  EquirectImage out = img;
  for_rows(h, exec, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const float* c = img.pixel(x, y);
      double acc[3] = {0.0, 0.0, 0.0};
      double wsum = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const float* q = img.pixel(wrap(x + dx, w), yy);
          const double d0 = q[0] - c[0];
          const double d1 = q[1] - c[1];
          const double d2 = q[2] - c[2];
          const double wt = spatial[(dy + r) * (2 * r + 1) + dx + r] *
                            std::exp(-(d0 * d0 + d1 * d1 + d2 * d2) * inv_range);
          acc[0] += wt * q[0];
          acc[1] += wt * q[1];
          acc[2] += wt * q[2];
          wsum += wt;
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        out.at(x, y, ch) = static_cast<float>(std::clamp(acc[ch] / wsum, 0.0, 1.0));
      }
    }
  });
  return out;
}

namespace {

double local_median(const DepthMap& d, int x, int y) {
  double vals[9];
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    const int yy = y + dy;
    if (yy < 0 || yy >= d.height) continue;
    for (int dx = -1; dx <= 1; ++dx) {
      const std::size_t i = d.index(wrap(x + dx, d.width), yy);
      if (d.valid[i]) vals[n++] = d.depth[i];
    }
  }
  std::nth_element(vals, vals + n / 2, vals + n);
  if (n % 2 == 1) return vals[n / 2];
  const double hi = vals[n / 2];
  const double lo = *std::max_element(vals, vals + n / 2);
  return 0.5 * (lo + hi);
}

}  // namespace

DepthMap postsmooth(const DepthMap& depth, const EquirectImage& guide,
                    const PostSmoothConfig& cfg, Exec exec) {
  if (guide.width() != depth.width || guide.height() != depth.height) {
    throw InvalidArgument("postsmooth: guide and depth dimensions differ");
  }
  if (cfg.iterations <= 0 || !(cfg.spatial_sigma > 0.0)) return depth;
  const int w = depth.width;
  const int h = depth.height;
  const int r = std::max(1, static_cast<int>(std::ceil(2.0 * cfg.spatial_sigma)));
  // Sparse taps keep wide kernels affordable.
  const int stride = cfg.spatial_sigma > 4.0 ? 2 : 1;
  const double inv_s = 0.5 / (cfg.spatial_sigma * cfg.spatial_sigma);
  const double inv_r = cfg.range_sigma > 0.0 ? 0.5 / (cfg.range_sigma * cfg.range_sigma) : 0.0;
  const double inv_d = cfg.depth_sigma > 0.0 ? 0.5 / (cfg.depth_sigma * cfg.depth_sigma) : 0.0;

  // The depth kernel stays anchored to the input so repeated passes cannot
  // drift across depth edges.
  std::vector<double> anchor(depth.size(), 0.0);
  for_rows(h, exec, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = depth.index(x, y);
      if (depth.valid[i]) anchor[i] = local_median(depth, x, y);
    }
  });

  DepthMap cur = depth;
  for (int it = 0; it < cfg.iterations; ++it) {
    DepthMap next = cur;
    for_rows(h, exec, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = cur.index(x, y);
        if (!cur.valid[i]) continue;
        const double center = cur.depth[i];
        const double med = anchor[i];
        const float* gc = guide.pixel(x, y);
        double num = 0.0;
        double den = 0.0;
        for (int dy = -r; dy <= r; dy += stride) {
          const int yy = y + dy;
          if (yy < 0 || yy >= h) continue;
          for (int dx = -r; dx <= r; dx += stride) {
            const int xx = wrap(x + dx, w);
            const std::size_t j = cur.index(xx, yy);
            if (!cur.valid[j]) continue;
            const float* gq = guide.pixel(xx, yy);
            const double c0 = gq[0] - gc[0];
            const double c1 = gq[1] - gc[1];
            const double c2 = gq[2] - gc[2];
            const double dd = cur.depth[j] - med;
            const double wt = std::exp(-(dx * dx + dy * dy) * inv_s -
                                       (c0 * c0 + c1 * c1 + c2 * c2) * inv_r -
                                       dd * dd * inv_d);
            num += wt * (cur.depth[j] - center);
            den += wt;
          }
        }
        double v = den > 0.0 ? center + num / den : center;
        next.depth[i] = std::clamp(v, cfg.d_min, cfg.d_max);
      }
    });
    cur = std::move(next);
  }
  return cur;
}

DepthMap gaussian_filter(const DepthMap& depth, double sigma, int radius) {
  if (!(sigma > 0.0) || radius <= 0) return depth;
  DepthMap out = depth;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i = depth.index(x, y);
      if (!depth.valid[i]) continue;
      double num = 0.0;
      double den = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= depth.height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const std::size_t j = depth.index(wrap(x + dx, depth.width), yy);
          if (!depth.valid[j]) continue;
          const double wt = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
          num += wt * depth.depth[j];
          den += wt;
        }
      }
      out.depth[i] = num / den;
    }
  }
  return out;
}

DepthMap median_filter(const DepthMap& depth, int radius) {
  if (radius <= 0) return depth;
  DepthMap out = depth;
  std::vector<double> vals;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i = depth.index(x, y);
      if (!depth.valid[i]) continue;
      vals.clear();
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= depth.height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const std::size_t j = depth.index(wrap(x + dx, depth.width), yy);
          if (depth.valid[j]) vals.push_back(depth.depth[j]);
        }
      }
      std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
      out.depth[i] = vals[vals.size() / 2];
    }
  }
  return out;
}

}  // namespace omnidepth
