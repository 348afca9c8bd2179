#include "omnidepth/depth_sweep.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "omnidepth/error.hpp"

namespace omnidepth {

DepthCandidates make_candidates(double d_min, double d_max, int count) {
  if (!(d_min > 0.0)) throw InvalidArgument("depth candidates: d_min must be > 0");
  if (!(d_max > d_min)) throw InvalidArgument("depth candidates: need d_min < d_max");
  if (count < 2) throw InvalidArgument("depth candidates: count must be >= 2");
  DepthCandidates c;
  c.d_min = d_min;
  c.d_max = d_max;
  c.values.resize(count);
  const double step = (d_max - d_min) / (count - 1);
  for (int k = 0; k < count; ++k) c.values[k] = d_min + k * step;
  c.values.back() = d_max;
  return c;
}

namespace {

constexpr double kDegenerateNorm = 1e-12;

inline int wrap(int x, int w) {
  x %= w;
  return x < 0 ? x + w : x;
}

// Shared by every path so that all of them produce identical bits:
// X = d * (R b) + t.
inline bool project_rotated(const Vec3& rotated_bearing, double depth,
                            const Vec3& t, const ImageDims& dims,
                            PixelCoord& out) {
  const Vec3 p = depth * rotated_bearing + t;
  if (!(p.norm() > kDegenerateNorm)) return false;
  out = bearing_to_pixel(p, dims);
  return true;
}

// Sum over views and channels of |I_ref - I_k|, views in order.
inline bool pixel_cost(const float* ref_rgb, const Vec3* rotated, double depth,
                       std::span<const SweepView> views, const ImageDims& dims,
                       double& cost) {
  double sum = 0.0;
  for (std::size_t k = 0; k < views.size(); ++k) {
    PixelCoord px;
    if (!project_rotated(rotated[k], depth, views[k].translation, dims, px)) {
      return false;
    }
    const auto s = sample_bilinear_rgb(*views[k].image, px);
    for (int c = 0; c < 3; ++c) sum += std::abs(ref_rgb[c] - s[c]);
  }
  cost = sum;
  return true;
}

void check_views(const EquirectImage& reference, std::span<const SweepView> views) {
  if (views.empty()) {
    throw InvalidArgument("depth sweep needs at least one non-reference view");
  }
  for (const SweepView& v : views) {
    if (v.image == nullptr || v.image->dims() != reference.dims()) {
      throw InvalidArgument("depth sweep: all images must share dimensions");
    }
  }
}

}  // namespace

PixelCoord project_virtual(const PixelCoord& u_ref, double depth,
                           const Mat3& rotation, const Vec3& translation,
                           const ImageDims& dims) {
  if (!(depth > 0.0)) throw InvalidArgument("virtual depth must be positive");
  const Vec3 rb = rotation * pixel_to_bearing(u_ref, dims).vec();
  PixelCoord out;
  if (!project_rotated(rb, depth, translation, dims, out)) {
    throw DegenerateError("degenerate projection: point at the target camera center");
  }
  return out;
}

SweepResult sweep_pixel(const EquirectImage& reference, int x, int y,
                        std::span<const SweepView> views,
                        const DepthCandidates& candidates, int window_radius,
                        bool center_reference) {
  check_views(reference, views);
  const int r = window_radius;
  const int w = reference.width();
  const int h = reference.height();
  if (r < 0) throw InvalidArgument("window radius must be >= 0");
  if (y < r || y > h - 1 - r || x < 0 || x >= w) {
    std::ostringstream os;
    os << "pixel (" << x << ", " << y << ") is within " << r
       << " rows of the image border";
    throw InvalidArgument(os.str());
  }
  const ImageDims dims = reference.dims();
  const int n = 2 * r + 1;
  // Rotated bearings of every window pixel for every view.
  std::vector<Vec3> rotated(static_cast<std::size_t>(n) * n * views.size());
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const Vec3 b = pixel_to_bearing(
          {static_cast<double>(wrap(x + dx, w)), static_cast<double>(y + dy)}, dims).vec();
      for (std::size_t k = 0; k < views.size(); ++k) {
        rotated[((dy + r) * n + dx + r) * views.size() + k] = views[k].rotation * b;
      }
    }
  }

  SweepResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (double d : candidates.values) {
    double total = 0.0;
    bool ok = true;
    for (int dy = -r; dy <= r && ok; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const float* ref = center_reference
                               ? reference.pixel(x, y)
                               : reference.pixel(wrap(x + dx, w), y + dy);
        double c = 0.0;
        if (!pixel_cost(ref, &rotated[((dy + r) * n + dx + r) * views.size()], d,
                        views, dims, c)) {
          ok = false;
          break;
        }
        total += c;
      }
    }
    if (ok && total < best.cost) {
      best.cost = total;
      best.depth = d;
      best.valid = true;
    }
  }
  if (!best.valid) best.cost = 0.0;
  return best;
}

DepthMap sweep_depth(const EquirectImage& reference,
                     std::span<const SweepView> views,
                     const DepthCandidates& candidates, int window_radius,
                     double crop_bottom, Exec exec, bool center_reference) {
  check_views(reference, views);
  if (window_radius < 0) throw InvalidArgument("window radius must be >= 0");
  if (!(crop_bottom >= 0.0 && crop_bottom < 1.0)) {
    throw InvalidArgument("crop fraction must be in [0, 1)");
  }
  const int w = reference.width();
  const int h = reference.height();
  const int r = window_radius;
  const ImageDims dims = reference.dims();
  const int first_row = r;
  const int last_row =
      std::min(h - 1 - r, h - 1 - static_cast<int>(std::floor(crop_bottom * h)));
  DepthMap out(w, h);
  if (last_row < first_row) return out;

  const auto for_rows = [exec](int lo, int hi, auto&& body) {
    if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
      for (int y = lo; y <= hi; ++y) body(y);
    } else {
      for (int y = lo; y <= hi; ++y) body(y);
    }
  };

  if (center_reference) {
    // The per-pixel cost depends on the window centre; no slice reuse.
    for_rows(first_row, last_row, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const SweepResult s =
            sweep_pixel(reference, x, y, views, candidates, r, true);
        const std::size_t i = out.index(x, y);
        out.valid[i] = s.valid;
        out.depth[i] = s.depth;
        out.cost[i] = s.cost;
      }
    });
    return out;
  }

  // Rows touched by any window.
  const int row_lo = first_row - r;
  const int row_hi = last_row + r;
  const std::size_t nv = views.size();
  std::vector<Vec3> rotated(static_cast<std::size_t>(w) * h * nv);
  for_rows(row_lo, row_hi, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 b = pixel_to_bearing(
          {static_cast<double>(x), static_cast<double>(y)}, dims).vec();
      for (std::size_t k = 0; k < nv; ++k) {
        rotated[(static_cast<std::size_t>(y) * w + x) * nv + k] = views[k].rotation * b;
      }
    }
  });

  constexpr double kNoCost = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> slice(static_cast<std::size_t>(w) * h, kNoCost);
  std::vector<double> best(static_cast<std::size_t>(w) * h,
                           std::numeric_limits<double>::infinity());
  std::vector<double> best_depth(static_cast<std::size_t>(w) * h, 0.0);

  for (double d : candidates.values) {
    for_rows(row_lo, row_hi, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        double c = 0.0;
        slice[i] = pixel_cost(reference.pixel(x, y), &rotated[i * nv], d, views,
                              dims, c)
                       ? c
                       : kNoCost;
      }
    });
    for_rows(first_row, last_row, [&](int y) {
      for (int x = 0; x < w; ++x) {
        double total = 0.0;
        bool ok = true;
        for (int dy = -r; dy <= r && ok; ++dy) {
          const double* row = &slice[static_cast<std::size_t>(y + dy) * w];
          for (int dx = -r; dx <= r; ++dx) {
            const double c = row[wrap(x + dx, w)];
            if (std::isnan(c)) {
              ok = false;
              break;
            }
            total += c;
          }
        }
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (ok && total < best[i]) {
          best[i] = total;
          best_depth[i] = d;
        }
      }
    });
  }

  for (int y = first_row; y <= last_row; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = out.index(x, y);
      if (std::isfinite(best[i])) {
        out.valid[i] = 1;
        out.depth[i] = best_depth[i];
        out.cost[i] = best[i];
      }
    }
  }
  return out;
}

DepthMap estimate_depth_map(std::span<const EquirectImage> images,
                            const Rig& rig, const SweepConfig& cfg, Exec exec) {
  if (rig.views.size() < 2) {
    throw InvalidArgument("depth estimation needs at least one registered view");
  }
  for (const RigView& v : rig.views) {
    if (v.index < 0 || static_cast<std::size_t>(v.index) >= images.size() ||
        images[v.index].empty()) {
      throw DataError("no image for rig view " + std::to_string(v.index));
    }
  }
  const EquirectImage& ref_raw = images[rig.reference];
  for (const RigView& v : rig.views) {
    if (images[v.index].dims() != ref_raw.dims()) {
      throw DataError("all images must share dimensions");
    }
  }
  const DepthCandidates candidates =
      make_candidates(cfg.d_min, cfg.d_max, cfg.candidate_count);

  // Identical pre-smoothing for the reference and every target.
  std::vector<EquirectImage> smoothed;
  smoothed.reserve(rig.views.size());
  std::vector<int> order;
  for (const RigView& v : rig.views) {
    smoothed.push_back(cfg.prefilter
                           ? bilateral_filter(images[v.index], cfg.prefilter_params, exec)
                           : images[v.index]);
    order.push_back(v.index);
  }

  const EquirectImage* reference = nullptr;
  std::vector<SweepView> views;
  for (std::size_t k = 0; k < rig.views.size(); ++k) {
    const RigView& v = rig.views[k];
    if (v.index == rig.reference) {
      reference = &smoothed[k];
      continue;
    }
    views.push_back({&smoothed[k], v.rotation, rig.metric_translation(v.index)});
  }

  DepthMap depth = sweep_depth(*reference, views, candidates, cfg.window_radius,
                               cfg.crop_bottom, exec, cfg.center_reference);
  if (cfg.postfilter) {
    PostSmoothConfig post = cfg.postfilter_params;
    post.d_min = cfg.d_min;
    post.d_max = cfg.d_max;
    const DepthMap raw_cost = depth;
    depth = postsmooth(depth, ref_raw, post, exec);
    depth.cost = raw_cost.cost;
  }
  return depth;
}

}  // namespace omnidepth
