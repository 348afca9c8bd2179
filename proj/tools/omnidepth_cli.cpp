// omnidepth command line: synth, features, register, depth, eval, ablate, ply.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omnidepth/correspondence.hpp"
#include "omnidepth/depth_sweep.hpp"
#include "omnidepth/error.hpp"
#include "omnidepth/evalio.hpp"
#include "omnidepth/image_io.hpp"
#include "omnidepth/parallel.hpp"
#include "omnidepth/registration.hpp"
#include "omnidepth/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace omnidepth;

namespace {

struct Options {
  // global
  std::uint64_t seed = 0;
  int threads = 0;
  double crop_bottom = 0.0;
  std::string config;
  // synth
  std::string out_dir;
  std::string layout = "scaled";
  std::string scene_file;
  int width = 512;
  int height = 256;
  int supersample = 3;
  double layout_scale = 1.0;
  // features
  std::string data_dir;
  std::string matches_file;
  int reference = 0;
  int max_features = 2000;
  double fast_threshold = 0.04;
  // register
  std::string rig_out;
  int iterations = 1000;
  double threshold = 2e-4;
  double kappa = kDefaultKappa;
  int baseline_view = -1;
  double baseline_length = 1.0;
  std::string images_dir;
  // depth
  std::string rig_file;
  std::string depth_out;
  std::string png_out;
  int window = 7;
  int candidates = 200;
  double d_min = 0.05;
  double d_max = 10.0;
  bool no_prefilter = false;
  bool no_postfilter = false;
  bool no_scaling = false;
  // eval
  std::string est_file;
  std::string gt_file;
  bool eval_json = false;
  // ablate
  std::vector<int> cams{2, 3, 4};
  std::vector<int> windows{5, 7, 9};
  std::vector<std::string> scaling{"on"};
  std::string csv_out;
  bool no_timing = false;
  // ply
  std::string image_file;
  std::string ply_out;
  bool gaussian = false;
  bool median = false;
};

// Values from --config fill options that were not given on the command line.
template <typename T>
void from_config(const json& cfg, const char* key, CLI::App& app, const char* flag, T& value) {
  if (!cfg.contains(key)) return;
  if (auto* opt = app.get_option_no_throw(flag); opt != nullptr && opt->count() > 0) return;
  try {
    value = cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("config key '") + key + "': " + e.what());
  }
}

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw DataError("config file not found: " + path);
  try {
    json j;
    in >> j;
    if (!j.is_object()) throw DataError("config must be a JSON object: " + path);
    return j;
  } catch (const json::exception& e) {
    throw DataError("malformed config " + path + ": " + e.what());
  }
}

std::string view_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%02d.png", k);
  return buf;
}

SweepConfig sweep_config(const Options& o) {
  SweepConfig sc;
  sc.window_radius = o.window / 2;
  sc.candidate_count = o.candidates;
  sc.d_min = o.d_min;
  sc.d_max = o.d_max;
  sc.prefilter = !o.no_prefilter;
  sc.postfilter = !o.no_postfilter;
  sc.postfilter_params.d_min = o.d_min;
  sc.postfilter_params.d_max = o.d_max;
  sc.crop_bottom = o.crop_bottom;
  if (o.window < 1 || o.window % 2 == 0) throw InvalidArgument("--window must be odd");
  return sc;
}

void cmd_synth(const Options& o) {
  synth::SceneSpec scene =
      o.scene_file.empty() ? synth::default_scene() : synth::load_scene(o.scene_file);
  scene.supersample = o.supersample;
  if (o.seed != 0) {
    for (auto& t : scene.room.walls) t.seed += static_cast<std::uint32_t>(o.seed);
    for (auto& s : scene.spheres) s.texture.seed += static_cast<std::uint32_t>(o.seed);
    for (auto& b : scene.boxes) b.texture.seed += static_cast<std::uint32_t>(o.seed);
  }
  auto poses = synth::named_layout(o.layout);
  for (auto& p : poses) p.position = poses[0].position + o.layout_scale * (p.position - poses[0].position);
  const auto data = synth::render_rig(scene, poses, {o.width, o.height}, o.out_dir);
  std::cout << "rendered " << data.images.size() << " views (" << o.width << "x"
            << o.height << ") to " << o.out_dir << "\n";
}

void cmd_features(const Options& o) {
  DetectorConfig dc;
  dc.max_features = o.max_features;
  dc.fast_threshold = o.fast_threshold;
  std::vector<std::vector<Feature>> feats;
  for (int k = 0;; ++k) {
    const fs::path p = fs::path(o.data_dir) / view_name(k);
    if (!fs::exists(p)) break;
    feats.push_back(detect_features(load_image(p, true), dc));
  }
  if (feats.size() < 2) throw DataError("need at least two view_XX.png images in " + o.data_dir);
  if (o.reference < 0 || o.reference >= static_cast<int>(feats.size())) {
    throw InvalidArgument("--reference out of range");
  }
  CorrespondenceSet all;
  for (int k = 0; k < static_cast<int>(feats.size()); ++k) {
    if (k == o.reference) continue;
    const auto set = match_features(feats[o.reference], feats[k], o.reference, k);
    all.append(set);
    std::cout << "view " << o.reference << " <-> " << k << ": " << feats[o.reference].size()
              << "/" << feats[k].size() << " features, " << set.size() << " matches\n";
  }
  save_correspondences(all, o.matches_file);
}

void cmd_register(const Options& o) {
  const auto set = load_correspondences(o.matches_file);
  RegistrationConfig rc;
  rc.reference = o.reference;
  if (o.baseline_view >= 0) rc.baseline_view = o.baseline_view;
  rc.kappa = o.kappa;
  rc.baseline_length = o.baseline_length;
  RansacConfig ransac;
  ransac.iterations = o.iterations;
  ransac.threshold = o.threshold;
  ransac.seed = o.seed;
  auto result = register_from_correspondences(set, rc, ransac);
  if (!o.images_dir.empty()) {
    const fs::path base = fs::absolute(fs::path(o.rig_out)).parent_path();
    for (auto& v : result.rig.views) {
      const fs::path img = fs::absolute(fs::path(o.images_dir) / view_name(v.index));
      v.image = fs::relative(img, base).generic_string();
    }
  }
  save_rig(result.rig, o.rig_out);
  for (const auto& v : result.rig.views) {
    if (v.index == result.rig.reference) continue;
    const Vec3 rpy = rpy_deg_from_rotation(v.rotation);
    std::printf("view %d: rpy (%.3f, %.3f, %.3f) deg, t (%.4f, %.4f, %.4f), s %.4f\n",
                v.index, rpy(0), rpy(1), rpy(2), v.translation(0), v.translation(1),
                v.translation(2), v.scale);
  }
}

std::vector<EquirectImage> rig_images(const Rig& rig, const fs::path& rig_path,
                                      const std::string& images_dir) {
  int max_index = 0;
  for (const auto& v : rig.views) max_index = std::max(max_index, v.index);
  std::vector<EquirectImage> images(max_index + 1);
  for (const auto& v : rig.views) {
    fs::path p;
    if (!images_dir.empty()) {
      p = fs::path(images_dir) / view_name(v.index);
    } else if (!v.image.empty()) {
      p = rig_path.parent_path() / v.image;
    } else {
      p = rig_path.parent_path() / view_name(v.index);
    }
    images[v.index] = load_image(p, true);
  }
  return images;
}

void cmd_depth(const Options& o) {
  if (!fs::exists(o.rig_file)) throw DataError("rig file not found: " + o.rig_file);
  Rig rig = load_rig(o.rig_file);
  if (o.no_scaling) rig = rig.without_scaling();
  const auto images = rig_images(rig, o.rig_file, o.images_dir);
  const SweepConfig sc = sweep_config(o);
  const DepthMap depth = estimate_depth_map(images, rig, sc);
  write_pfm(depth, o.depth_out);
  if (!o.png_out.empty()) write_depth_png16(depth, sc.d_min, sc.d_max, o.png_out);
  std::cout << "estimated " << depth.valid_count() << "/" << depth.size()
            << " valid pixels -> " << o.depth_out << "\n";
}

void cmd_eval(const Options& o) {
  const DepthMap est = read_pfm(o.est_file);
  const DepthMap gt = read_pfm(o.gt_file);
  const Metrics m = compute_metrics(est, gt);
  if (o.eval_json) {
    json j{{"schema", 1},
           {"mse_x100", 100.0 * m.mse},
           {"psnr_db", std::isinf(m.psnr) ? json("inf") : json(m.psnr)},
           {"valid_count", m.valid_count},
           {"valid_fraction", m.valid_fraction},
           {"normalization_m", m.normalization}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("mse_x100 %.6f\npsnr_db %s\nvalid_fraction %.6f\nnormalization_m %.6f\n",
                100.0 * m.mse,
                std::isinf(m.psnr) ? "inf" : std::to_string(m.psnr).c_str(),
                m.valid_fraction, m.normalization);
  }
}

void cmd_ablate(const Options& o) {
  AblationGrid grid;
  grid.cameras = o.cams;
  grid.windows = o.windows;
  for (const auto& s : o.scaling) {
    if (s == "on") grid.scaling.push_back(true);
    else if (s == "off") grid.scaling.push_back(false);
    else throw InvalidArgument("--scaling takes on/off");
  }
  AblationConfig ac;
  Options so = o;
  so.window = 7;
  ac.sweep = sweep_config(so);
  ac.timing = !o.no_timing;
  const auto rows = run_ablation(o.data_dir, grid, ac);
  write_ablation_table(rows, std::cout);
  if (!o.csv_out.empty()) {
    std::ofstream out(o.csv_out, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + o.csv_out);
    write_ablation_csv(rows, out);
  }
}

void cmd_ply(const Options& o) {
  const DepthMap depth = read_pfm(o.est_file);
  const EquirectImage img = load_image(o.image_file, true);
  PlyOptions po;
  po.gaussian = o.gaussian;
  po.median = o.median;
  const auto n = export_ply(depth, img, o.ply_out, po);
  std::cout << "wrote " << n << " points to " << o.ply_out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Omnidirectional multi-view depth estimation"};
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "RNG seed");
  app.add_option("--threads", o.threads, "OpenMP threads (0 = default)")->check(CLI::NonNegativeNumber);
  app.add_option("--crop-bottom", o.crop_bottom, "fraction of bottom rows left unestimated")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--config", o.config, "JSON file with option defaults");

  auto* synth = app.add_subcommand("synth", "render a synthetic box-room dataset");
  synth->add_option("--out", o.out_dir)->required();
  synth->add_option("--layout", o.layout)->check(CLI::IsMember({"scaled", "smallroom", "classroom"}));
  synth->add_option("--scene", o.scene_file, "scene JSON");
  synth->add_option("--width", o.width);
  synth->add_option("--height", o.height);
  synth->add_option("--supersample", o.supersample)->check(CLI::PositiveNumber);
  synth->add_option("--layout-scale", o.layout_scale, "multiplies every camera offset")
      ->check(CLI::PositiveNumber);

  auto* features = app.add_subcommand("features", "detect and match features against the reference");
  features->add_option("--data", o.data_dir)->required();
  features->add_option("--out", o.matches_file)->required();
  features->add_option("--reference", o.reference);
  features->add_option("--max-features", o.max_features)->check(CLI::PositiveNumber);
  features->add_option("--fast-threshold", o.fast_threshold);

  auto* reg = app.add_subcommand("register", "estimate poses and scales into a rig file");
  reg->add_option("--matches", o.matches_file)->required();
  reg->add_option("--out", o.rig_out)->required();
  reg->add_option("--reference", o.reference);
  reg->add_option("--iterations", o.iterations)->check(CLI::PositiveNumber);
  reg->add_option("--threshold", o.threshold, "Sampson inlier threshold");
  reg->add_option("--kappa", o.kappa);
  reg->add_option("--baseline-view", o.baseline_view);
  reg->add_option("--baseline-length", o.baseline_length, "meters");
  reg->add_option("--images", o.images_dir, "directory with view_XX.png");

  auto* depth = app.add_subcommand("depth", "sweep depth for the reference view");
  depth->add_option("--rig", o.rig_file)->required();
  depth->add_option("--out", o.depth_out)->required();
  depth->add_option("--png", o.png_out, "16-bit depth preview");
  depth->add_option("--images", o.images_dir, "directory with view_XX.png");
  depth->add_option("--window", o.window);
  depth->add_option("--candidates", o.candidates)->check(CLI::Range(2, 100000));
  depth->add_option("--d-min", o.d_min);
  depth->add_option("--d-max", o.d_max);
  depth->add_flag("--no-prefilter", o.no_prefilter);
  depth->add_flag("--no-postfilter", o.no_postfilter);
  depth->add_flag("--no-scaling", o.no_scaling);

  auto* eval = app.add_subcommand("eval", "normalized-depth MSE and PSNR");
  eval->add_option("--est", o.est_file)->required();
  eval->add_option("--gt", o.gt_file)->required();
  eval->add_flag("--json", o.eval_json);

  auto* ablate = app.add_subcommand("ablate", "camera count x window x scaling grid");
  ablate->add_option("--data", o.data_dir)->required();
  ablate->add_option("--cameras", o.cams)->delimiter(',');
  ablate->add_option("--windows", o.windows)->delimiter(',');
  ablate->add_option("--scaling", o.scaling)->delimiter(',');
  ablate->add_option("--csv", o.csv_out);
  ablate->add_option("--candidates", o.candidates)->check(CLI::Range(2, 100000));
  ablate->add_option("--d-min", o.d_min);
  ablate->add_option("--d-max", o.d_max);
  ablate->add_flag("--no-prefilter", o.no_prefilter);
  ablate->add_flag("--no-postfilter", o.no_postfilter);
  ablate->add_flag("--no-timing", o.no_timing, "write runtime 0 for reproducible CSV");

  auto* ply = app.add_subcommand("ply", "export a colored point cloud");
  ply->add_option("--depth", o.est_file)->required();
  ply->add_option("--image", o.image_file)->required();
  ply->add_option("--out", o.ply_out)->required();
  ply->add_flag("--gaussian", o.gaussian, "5x5 Gaussian pre-filter");
  ply->add_flag("--median", o.median, "5x5 median pre-filter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const json cfg = read_config(o.config);
    for (CLI::App* sub : app.get_subcommands()) {
      from_config(cfg, "window", *sub, "--window", o.window);
      from_config(cfg, "candidates", *sub, "--candidates", o.candidates);
      from_config(cfg, "d_min", *sub, "--d-min", o.d_min);
      from_config(cfg, "d_max", *sub, "--d-max", o.d_max);
      from_config(cfg, "iterations", *sub, "--iterations", o.iterations);
      from_config(cfg, "threshold", *sub, "--threshold", o.threshold);
      from_config(cfg, "kappa", *sub, "--kappa", o.kappa);
      from_config(cfg, "baseline_length", *sub, "--baseline-length", o.baseline_length);
      from_config(cfg, "max_features", *sub, "--max-features", o.max_features);
      from_config(cfg, "width", *sub, "--width", o.width);
      from_config(cfg, "height", *sub, "--height", o.height);
    }
    from_config(cfg, "seed", app, "--seed", o.seed);
    from_config(cfg, "threads", app, "--threads", o.threads);
    from_config(cfg, "crop_bottom", app, "--crop-bottom", o.crop_bottom);
    if (o.threads > 0) set_threads(o.threads);

    if (synth->parsed()) cmd_synth(o);
    else if (features->parsed()) cmd_features(o);
    else if (reg->parsed()) cmd_register(o);
    else if (depth->parsed()) cmd_depth(o);
    else if (eval->parsed()) cmd_eval(o);
    else if (ablate->parsed()) cmd_ablate(o);
    else if (ply->parsed()) cmd_ply(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kNumerical ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
