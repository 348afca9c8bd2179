#include "omnidepth/evalio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "omnidepth/error.hpp"
#include "omnidepth/filters.hpp"
#include "omnidepth/image_io.hpp"
#include "omnidepth/synth.hpp"

namespace omnidepth {

namespace fs = std::filesystem;

double psnr_from_mse(double mse) {
  if (mse < 0.0 || !std::isfinite(mse)) throw InvalidArgument("mse must be finite and >= 0");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

Metrics compute_metrics(const DepthMap& est, const DepthMap& gt) {
  if (est.width != gt.width || est.height != gt.height) {
    throw InvalidArgument("depth maps differ in size");
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid[i]) peak = std::max(peak, gt.depth[i]);
  }
  Metrics m;
  double sum = 0.0;
  if (peak > 0.0) {
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!gt.valid[i] || !est.valid[i]) continue;
      const double e = est.depth[i] / peak - gt.depth[i] / peak;
      sum += e * e;
      ++m.valid_count;
    }
  }
  if (m.valid_count == 0) throw DataError("no jointly valid pixels");
  m.normalization = peak;
  m.mse = sum / static_cast<double>(m.valid_count);
  m.psnr = psnr_from_mse(m.mse);
  m.valid_fraction = static_cast<double>(m.valid_count) / static_cast<double>(gt.size());
  return m;
}

std::vector<ColoredPoint> point_cloud(const DepthMap& depth, const EquirectImage& img,
                                      const PlyOptions& opts) {
  if (depth.width != img.width() || depth.height != img.height()) {
    throw InvalidArgument("depth map and image differ in size");
  }
  DepthMap d = depth;
  if (opts.gaussian) d = gaussian_filter(d, opts.gaussian_sigma);
  if (opts.median) d = median_filter(d);
  const ImageDims dims{d.width, d.height};
  std::vector<ColoredPoint> pts;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::size_t i = d.index(x, y);
      if (!d.valid[i] || !std::isfinite(d.depth[i])) continue;
      ColoredPoint p;
      p.position = d.depth[i] * pixel_to_bearing({double(x), double(y)}, dims).vec();
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(img.at(x, y, c)), 0.0, 1.0);
        p.rgb[c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
      pts.push_back(p);
    }
  }
  return pts;
}

namespace {

void put_float_le(std::ostream& out, float f) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
  out.write(b, 4);
}

float get_float_le(const unsigned char* b) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::size_t export_ply(const DepthMap& depth, const EquirectImage& img,
                       const fs::path& path, const PlyOptions& opts) {
  const auto pts = point_cloud(depth, img, opts);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << pts.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  for (const auto& p : pts) {
    for (int c = 0; c < 3; ++c) put_float_le(out, static_cast<float>(p.position(c)));
    out.write(reinterpret_cast<const char*>(p.rgb), 3);
  }
  if (!out) throw DataError("write failed: " + path.string());
  return pts.size();
}

std::vector<ColoredPoint> read_ply(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open PLY file: " + path.string());
  std::string line;
  std::size_t count = 0;
  bool header_ok = false;
  while (std::getline(in, line)) {
    if (line.rfind("element vertex ", 0) == 0) count = std::stoul(line.substr(15));
    if (line.rfind("format ", 0) == 0 && line != "format binary_little_endian 1.0") {
      throw DataError("unsupported PLY format in " + path.string());
    }
    if (line == "end_header") {
      header_ok = true;
      break;
    }
  }
  if (!header_ok) throw DataError("malformed PLY header: " + path.string());
  std::vector<ColoredPoint> pts(count);
  std::array<unsigned char, 15> rec{};
  for (auto& p : pts) {
    if (!in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
      throw DataError("truncated PLY file: " + path.string());
    }
    for (int c = 0; c < 3; ++c) p.position(c) = get_float_le(rec.data() + 4 * c);
    std::memcpy(p.rgb, rec.data() + 12, 3);
  }
  return pts;
}

std::vector<AblationRow> run_ablation(std::span<const EquirectImage> images,
                                      const Rig& rig, const DepthMap& gt,
                                      const AblationGrid& grid,
                                      const AblationConfig& cfg, Exec exec) {
  std::vector<AblationRow> rows;
  for (int cams : grid.cameras) {
    if (cams < 2 || cams > static_cast<int>(rig.views.size())) {
      throw InvalidArgument("camera count " + std::to_string(cams) + " not in [2, " +
                            std::to_string(rig.views.size()) + "]");
    }
    std::vector<int> keep;
    for (const RigView& v : rig.views) {
      if (v.index != rig.reference && static_cast<int>(keep.size()) < cams - 1) {
        keep.push_back(v.index);
      }
    }
    const Rig sub = rig.subset(keep);
    for (int window : grid.windows) {
      if (window < 1 || window % 2 == 0) {
        throw InvalidArgument("window size must be odd and positive");
      }
      for (bool scaling : grid.scaling) {
        SweepConfig sc = cfg.sweep;
        sc.window_radius = window / 2;
        const auto t0 = std::chrono::steady_clock::now();
        const DepthMap est =
            estimate_depth_map(images, scaling ? sub : sub.without_scaling(), sc, exec);
        const auto t1 = std::chrono::steady_clock::now();
        AblationRow row;
        row.scene = cfg.scene;
        row.cameras = cams;
        row.window = window;
        row.scaling = scaling;
        row.metrics = compute_metrics(est, gt);
        row.runtime_s = cfg.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<AblationRow> run_ablation(const fs::path& dataset, const AblationGrid& grid,
                                      AblationConfig cfg, Exec exec) {
  if (!fs::exists(dataset / "depth_00.pfm")) {
    throw DataError("missing ground truth " + (dataset / "depth_00.pfm").string());
  }
  const synth::Dataset data = synth::load_dataset(dataset);
  const Rig rig = fs::exists(dataset / "rig.json") ? load_rig(dataset / "rig.json") : data.rig;
  if (cfg.scene == "scene") cfg.scene = data.scene.name;
  return run_ablation(data.images, rig, data.depths.at(rig.reference), grid, cfg, exec);
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string psnr_text(double psnr) {
  return std::isinf(psnr) ? std::string("inf") : fmt("%.3f", psnr);
}

}  // namespace

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
  out << "scene,cameras,window,scaling,mse_x100,psnr_db,valid_fraction,runtime_s\n";
  for (const auto& r : rows) {
    out << r.scene << ',' << r.cameras << ',' << r.window << ','
        << (r.scaling ? "on" : "off") << ',' << fmt("%.6f", 100.0 * r.metrics.mse) << ','
        << psnr_text(r.metrics.psnr) << ',' << fmt("%.6f", r.metrics.valid_fraction)
        << ',' << fmt("%.3f", r.runtime_s) << '\n';
  }
}

void write_ablation_table(std::span<const AblationRow> rows, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %7s %6s %7s %10s %9s %7s %9s\n", "scene",
                "cameras", "window", "scaling", "MSE(x100)", "PSNR(dB)", "valid", "time(s)");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-12s %7d %4dx%-1d %7s %10.3f %9s %6.1f%% %9.2f\n",
                  r.scene.c_str(), r.cameras, r.window, r.window, r.scaling ? "on" : "off",
                  100.0 * r.metrics.mse, psnr_text(r.metrics.psnr).c_str(),
                  100.0 * r.metrics.valid_fraction, r.runtime_s);
    out << buf;
  }
}

}  // namespace omnidepth
