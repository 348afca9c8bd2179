#include "omnidepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include <Eigen/Geometry>
#include <json.hpp>

#include "omnidepth/error.hpp"
#include "omnidepth/image_io.hpp"

namespace omnidepth::synth {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-12;

std::uint32_t hash3(std::int64_t x, std::int64_t y, std::uint32_t seed) {
  std::uint64_t h = static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ull ^
                    static_cast<std::uint64_t>(y) * 0xC2B2AE3D27D4EB4Full ^
                    static_cast<std::uint64_t>(seed) * 0x165667B19E3779F9ull;
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return static_cast<std::uint32_t>(h);
}

double lattice(std::int64_t x, std::int64_t y, std::uint32_t seed) {
  return hash3(x, y, seed) / 4294967295.0;
}

double value_noise(double x, double y, std::uint32_t seed) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  double tx = x - fx;
  double ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice(ix, iy, seed);
  const double b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed);
  const double d = lattice(ix + 1, iy + 1, seed);
  const double top = a + tx * (b - a);
  const double bot = c + tx * (d - c);
  return top + ty * (bot - top);
}

// Two octaves, in [0, 1].
double fbm(double x, double y, std::uint32_t seed) {
  return (2.0 * value_noise(x, y, seed) + value_noise(2.0 * x, 2.0 * y, seed + 97)) / 3.0;
}

Vec3 shade(const Texture& tex, double u, double v) {
  const auto cu = static_cast<std::int64_t>(std::floor(u / tex.checker_period));
  const auto cv = static_cast<std::int64_t>(std::floor(v / tex.checker_period));
  const bool odd = ((cu + cv) & 1) != 0;
  const Vec3 base = odd ? tex.color_b : tex.color_a;
  const double su = u / tex.noise_scale;
  const double sv = v / tex.noise_scale;
  const double n = fbm(su, sv, tex.seed);
  Vec3 c = base * (1.0 - tex.noise_amplitude + tex.noise_amplitude * n);
  for (int ch = 0; ch < 3; ++ch) {
    c(ch) += 0.12 * tex.noise_amplitude *
             (fbm(su + 31.7, sv - 11.3, tex.seed + 1 + ch) - 0.5);
  }
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

// In-plane coordinates of a point on a face whose normal is along `axis`.
std::pair<double, double> face_uv(const Vec3& p, int axis) {
  switch (axis) {
    case 0: return {p.y(), p.z()};
    case 1: return {p.x(), p.z()};
    default: return {p.x(), p.y()};
  }
}

bool inside_box(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.array() > lo.array()).all() && (p.array() < hi.array()).all();
}

}  // namespace

SceneSpec default_scene() {
  SceneSpec s;
  s.name = "boxroom";
  s.room.min = Vec3(-3.0, -3.4, -1.5);
  s.room.max = Vec3(3.2, 3.0, 2.1);
  const std::array<std::pair<Vec3, Vec3>, 6> palette = {{
      {{0.85, 0.55, 0.40}, {0.35, 0.20, 0.15}},
      {{0.45, 0.70, 0.85}, {0.15, 0.25, 0.40}},
      {{0.70, 0.85, 0.45}, {0.20, 0.35, 0.15}},
      {{0.85, 0.80, 0.55}, {0.40, 0.30, 0.20}},
      {{0.60, 0.60, 0.60}, {0.25, 0.25, 0.30}},
      {{0.90, 0.90, 0.85}, {0.50, 0.45, 0.55}},
  }};
  for (int k = 0; k < 6; ++k) {
    Texture& t = s.room.walls[k];
    t.checker_period = 1.5 + 0.15 * k;
    t.color_a = palette[k].first;
    t.color_b = palette[k].second;
    t.noise_amplitude = 0.6;
    t.noise_scale = 0.15;
    t.seed = 11u + 7u * static_cast<std::uint32_t>(k);
  }
  Texture ball;
  ball.checker_period = 0.9;
  ball.color_a = Vec3(0.9, 0.3, 0.3);
  ball.color_b = Vec3(0.3, 0.1, 0.5);
  ball.noise_amplitude = 0.5;
  ball.noise_scale = 0.1;
  ball.seed = 101;
  s.spheres.push_back({Vec3(1.7, 1.4, -0.7), 0.6, ball});
  ball.color_a = Vec3(0.3, 0.8, 0.6);
  ball.seed = 103;
  s.spheres.push_back({Vec3(-1.9, -1.2, 1.0), 0.45, ball});
  Texture crate;
  crate.checker_period = 0.75;
  crate.color_a = Vec3(0.75, 0.6, 0.3);
  crate.color_b = Vec3(0.35, 0.25, 0.1);
  crate.noise_amplitude = 0.5;
  crate.noise_scale = 0.1;
  crate.seed = 107;
  s.boxes.push_back({Vec3(-2.4, 1.0, -1.5), Vec3(-1.3, 2.1, -0.6), crate});
  return s;
}

Hit cast_ray(const SceneSpec& scene, const Vec3& origin, const Vec3& dir) {
  Hit best;
  best.distance = kInf;
  const Texture* tex = nullptr;
  double tu = 0.0;
  double tv = 0.0;

  // Room interior.
  for (int a = 0; a < 3; ++a) {
    double s = kInf;
    int wall = -1;
    if (dir(a) > 0.0) {
      s = (scene.room.max(a) - origin(a)) / dir(a);
      wall = 2 * a + 1;
    } else if (dir(a) < 0.0) {
      s = (scene.room.min(a) - origin(a)) / dir(a);
      wall = 2 * a;
    }
    if (s > kEps && s < best.distance) {
      best.distance = s;
      tex = &scene.room.walls[wall];
      std::tie(tu, tv) = face_uv(origin + s * dir, a);
    }
  }

  for (const Sphere& sp : scene.spheres) {
    const Vec3 oc = origin - sp.center;
    const double b = oc.dot(dir);
    const double c = oc.squaredNorm() - sp.radius * sp.radius;
    const double disc = b * b - c;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    // Stable root: the near root is c / q with q = -b + sqrt(disc).
    const double q = -b + sq;
    double s = q > 0.0 ? c / q : -b - sq;
    if (!(s > kEps)) s = -b + sq;
    if (s > kEps && s < best.distance) {
      best.distance = s;
      tex = &sp.texture;
      const Vec3 n = (origin + s * dir - sp.center) / sp.radius;
      tu = sp.radius * std::atan2(n.y(), n.x());
      tv = sp.radius * std::acos(std::clamp(n.z(), -1.0, 1.0));
    }
  }

  for (const Box& bx : scene.boxes) {
    double t_near = -kInf;
    double t_far = kInf;
    int axis = -1;
    bool miss = false;
    for (int a = 0; a < 3; ++a) {
      if (dir(a) == 0.0) {
        if (origin(a) <= bx.min(a) || origin(a) >= bx.max(a)) miss = true;
        continue;
      }
      double t1 = (bx.min(a) - origin(a)) / dir(a);
      double t2 = (bx.max(a) - origin(a)) / dir(a);
      if (t1 > t2) std::swap(t1, t2);
      if (t1 > t_near) {
        t_near = t1;
        axis = a;
      }
      t_far = std::min(t_far, t2);
    }
    if (miss || axis < 0 || t_near > t_far || !(t_near > kEps)) continue;
    if (t_near < best.distance) {
      best.distance = t_near;
      tex = &bx.texture;
      std::tie(tu, tv) = face_uv(origin + t_near * dir, axis);
    }
  }

  if (tex == nullptr) return Hit{};
  best.valid = true;
  best.color = shade(*tex, tu, tv);
  return best;
}

RenderResult render_view(const SceneSpec& scene, const CameraPose& pose,
                         const ImageDims& dims, Exec exec) {
  if (!inside_box(pose.position, scene.room.min, scene.room.max)) {
    throw InvalidArgument("camera outside the room");
  }
  for (const Sphere& s : scene.spheres) {
    if ((pose.position - s.center).norm() <= s.radius) {
      throw InvalidArgument("camera inside a sphere primitive");
    }
  }
  for (const Box& b : scene.boxes) {
    if (inside_box(pose.position, b.min, b.max)) {
      throw InvalidArgument("camera inside a box primitive");
    }
  }
  const int ss = std::max(1, scene.supersample);
  RenderResult out{EquirectImage(dims.width, dims.height, true),
                   DepthMap(dims.width, dims.height)};
  const auto row = [&](int y) {
    for (int x = 0; x < dims.width; ++x) {
      const PixelCoord center{static_cast<double>(x), static_cast<double>(y)};
      const Vec3 dir = pose.rotation * pixel_to_bearing(center, dims).vec();
      const Hit hit = cast_ray(scene, pose.position, dir);
      const std::size_t i = out.depth.index(x, y);
      if (hit.valid) {
        out.depth.depth[i] = hit.distance;
        out.depth.valid[i] = 1;
      }
      Vec3 color = Vec3::Zero();
      if (ss == 1) {
        color = hit.color;
      } else {
        for (int sy = 0; sy < ss; ++sy) {
          for (int sx = 0; sx < ss; ++sx) {
            const PixelCoord sub{x + (sx + 0.5) / ss - 0.5,
                                 std::clamp(y + (sy + 0.5) / ss - 0.5, 0.0,
                                            dims.height - 1e-9)};
            const Vec3 d = pose.rotation * pixel_to_bearing(sub, dims).vec();
            color += cast_ray(scene, pose.position, d).color;
          }
        }
        color /= ss * ss;
      }
      for (int c = 0; c < 3; ++c) {
        out.image.at(x, y, c) = static_cast<float>(std::clamp(color(c), 0.0, 1.0));
      }
    }
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 2)
    for (int y = 0; y < dims.height; ++y) row(y);
  } else {
    for (int y = 0; y < dims.height; ++y) row(y);
  }
  return out;
}

Rig ground_truth_rig(const std::vector<CameraPose>& poses) {
  if (poses.empty()) throw InvalidArgument("ground truth rig needs at least one pose");
  Rig rig;
  rig.reference = 0;
  rig.baseline_view = poses.size() > 1 ? 1 : 0;
  const CameraPose& ref = poses[0];
  rig.views.push_back({0, Mat3::Identity(), Vec3::Zero(), 1.0, "view_00.png"});
  double base = 1.0;
  for (std::size_t k = 1; k < poses.size(); ++k) {
    const Mat3 rk_t = poses[k].rotation.transpose();
    const Mat3 r = rk_t * ref.rotation;
    const Vec3 t = rk_t * (ref.position - poses[k].position);
    const double len = t.norm();
    if (!(len > 0.0)) throw InvalidArgument("coincident camera centers");
    if (k == 1) base = len;
    char name[32];
    std::snprintf(name, sizeof(name), "view_%02zu.png", k);
    rig.views.push_back({static_cast<int>(k), r, t / len, len / base, name});
  }
  rig.baseline_length = poses.size() > 1 ? base : 1.0;
  return rig;
}

std::vector<CameraPose> layout_from_translations(const std::vector<Vec3>& t,
                                                 const Vec3& origin) {
  std::vector<CameraPose> poses{{origin, Mat3::Identity()}};
  for (const Vec3& tk : t) poses.push_back({origin - tk, Mat3::Identity()});
  return poses;
}

std::vector<CameraPose> named_layout(const std::string& name) {
  if (name == "smallroom") {
    return layout_from_translations({{0, 0, -1}, {-1, 0, 0}, {0, 2, 0}});
  }
  if (name == "classroom") {
    return layout_from_translations({{0, 0, -1}, {0.866, 0.5, 0}, {-0.83, 1.44, 0}});
  }
  if (name == "scaled") {
    return layout_from_translations({0.5 * Vec3(0, 0, -1),
                                     0.5 * 0.57 * Vec3(0.866, 0.5, 0),
                                     0.5 * 1.73 * Vec3(-0.5, 0.866, 0)});
  }
  throw InvalidArgument("unknown layout '" + name + "'");
}

PoseTest make_pose_test(const Vec3& rpy_deg, const Vec3& t,
                        const std::vector<double>& scales,
                        const PoseTestConfig& cfg) {
  if (!(t.norm() > 0.0)) throw InvalidArgument("pose test translation must be nonzero");
  const Mat3 r = rotation_from_rpy_deg(rpy_deg(0), rpy_deg(1), rpy_deg(2));
  const Vec3 t_unit = t.normalized();

  std::vector<Mat3> rot{Mat3::Identity(), r};
  std::vector<Vec3> trans{Vec3::Zero(), t_unit};
  const Vec3 helper = std::abs(t_unit.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 tilt_axis = t_unit.cross(helper).normalized();
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const Eigen::AngleAxisd tilt(70.0 * kPi / 180.0, tilt_axis);
    const Eigen::AngleAxisd spin(2.0 * kPi * (k + 1) / (scales.size() + 1), t_unit);
    rot.push_back(r);
    trans.push_back(scales[k] * (spin * (tilt * t_unit)));
  }

  PoseTest test;
  Rig& rig = test.ground_truth;
  rig.reference = 0;
  rig.baseline_view = 1;
  rig.baseline_length = 1.0;
  for (std::size_t k = 0; k < rot.size(); ++k) {
    const double len = trans[k].norm();
    rig.views.push_back({static_cast<int>(k), rot[k],
                         k == 0 ? Vec3::Zero() : Vec3(trans[k] / len),
                         k == 0 ? 1.0 : len, {}});
  }

  std::vector<Vec3> centers;
  for (std::size_t k = 0; k < rot.size(); ++k) centers.push_back(-(rot[k].transpose() * trans[k]));

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> range(cfg.min_distance, cfg.max_distance);
  const auto perturb = [&](const Vec3& b) {
    if (cfg.noise_sigma <= 0.0) return Bearing::normalized(b);
    const Vec3 e1 = b.unitOrthogonal();
    const Vec3 e2 = b.cross(e1);
    return Bearing::normalized(b + cfg.noise_sigma * (normal(rng) * e1 + normal(rng) * e2));
  };

  std::vector<std::vector<Bearing>> obs(rot.size());
  while (static_cast<int>(test.points.size()) < cfg.points) {
    const Vec3 dir = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
    const Vec3 p = range(rng) * dir;
    bool ok = true;
    for (const Vec3& c : centers) ok = ok && (p - c).norm() > 0.5;
    if (!ok) continue;
    test.points.push_back(p);
    for (std::size_t k = 0; k < rot.size(); ++k) {
      obs[k].push_back(perturb(rot[k] * p + trans[k]));
    }
  }
  for (std::size_t k = 1; k < rot.size(); ++k) {
    for (std::size_t f = 0; f < test.points.size(); ++f) {
      Match m;
      m.view_a = 0;
      m.view_b = static_cast<int>(k);
      m.a = obs[0][f];
      m.b = obs[k][f];
      test.matches.matches.push_back(m);
    }
  }
  for (std::size_t k = 0; k < rot.size(); ++k) test.matches.views.push_back(static_cast<int>(k));
  return test;
}

Dataset render_dataset(const SceneSpec& scene, const std::vector<CameraPose>& poses,
                       const ImageDims& dims, Exec exec) {
  Dataset data;
  data.scene = scene;
  data.rig = ground_truth_rig(poses);
  for (const CameraPose& p : poses) {
    RenderResult r = render_view(scene, p, dims, exec);
    data.images.push_back(std::move(r.image));
    data.depths.push_back(std::move(r.depth));
  }
  return data;
}

void write_dataset(const Dataset& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
  char name[32];
  for (std::size_t k = 0; k < data.images.size(); ++k) {
    std::snprintf(name, sizeof(name), "view_%02zu.png", k);
    save_png(data.images[k], dir / name, 16);
    std::snprintf(name, sizeof(name), "depth_%02zu.pfm", k);
    write_pfm(data.depths[k], dir / name);
  }
  save_rig(data.rig, dir / "rig_gt.json");
  save_scene(data.scene, dir / "scene.json");
}

Dataset render_rig(const SceneSpec& scene, const std::vector<CameraPose>& poses,
                   const ImageDims& dims, const fs::path& dir) {
  Dataset data = render_dataset(scene, poses, dims);
  write_dataset(data, dir);
  return data;
}

Dataset load_dataset(const fs::path& dir) {
  Dataset data;
  const fs::path rig_path = dir / "rig_gt.json";
  data.rig = load_rig(rig_path);
  if (fs::exists(dir / "scene.json")) data.scene = load_scene(dir / "scene.json");
  char name[32];
  for (std::size_t k = 0;; ++k) {
    std::snprintf(name, sizeof(name), "view_%02zu.png", k);
    if (!fs::exists(dir / name)) break;
    data.images.push_back(load_image(dir / name, true));
    std::snprintf(name, sizeof(name), "depth_%02zu.pfm", k);
    data.depths.push_back(fs::exists(dir / name) ? read_pfm(dir / name) : DepthMap{});
  }
  if (data.images.empty()) throw DataError("no view_XX.png images in " + dir.string());
  return data;
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("scene: expected a 3-vector");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json texture_json(const Texture& t) {
  return {{"checker_period", t.checker_period},
          {"color_a", vec_json(t.color_a)},
          {"color_b", vec_json(t.color_b)},
          {"noise_amplitude", t.noise_amplitude},
          {"noise_scale", t.noise_scale},
          {"seed", t.seed}};
}

Texture texture_from(const json& j) {
  Texture t;
  t.checker_period = j.value("checker_period", t.checker_period);
  if (j.contains("color_a")) t.color_a = vec_from(j.at("color_a"));
  if (j.contains("color_b")) t.color_b = vec_from(j.at("color_b"));
  t.noise_amplitude = j.value("noise_amplitude", t.noise_amplitude);
  t.noise_scale = j.value("noise_scale", t.noise_scale);
  t.seed = j.value("seed", t.seed);
  if (!(t.checker_period > 0.0) || !(t.noise_scale > 0.0)) {
    throw DataError("scene: texture periods must be positive");
  }
  return t;
}

}  // namespace

void save_scene(const SceneSpec& scene, const fs::path& path) {
  json j;
  j["schema"] = 1;
  j["name"] = scene.name;
  j["supersample"] = scene.supersample;
  json walls = json::array();
  for (const Texture& t : scene.room.walls) walls.push_back(texture_json(t));
  j["room"] = {{"min", vec_json(scene.room.min)},
               {"max", vec_json(scene.room.max)},
               {"walls", walls}};
  json spheres = json::array();
  for (const Sphere& s : scene.spheres) {
    spheres.push_back({{"center", vec_json(s.center)},
                       {"radius", s.radius},
                       {"texture", texture_json(s.texture)}});
  }
  j["spheres"] = spheres;
  json boxes = json::array();
  for (const Box& b : scene.boxes) {
    boxes.push_back({{"min", vec_json(b.min)},
                     {"max", vec_json(b.max)},
                     {"texture", texture_json(b.texture)}});
  }
  j["boxes"] = boxes;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

SceneSpec load_scene(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scene file: " + path.string());
  SceneSpec s;
  try {
    json j;
    in >> j;
    if (j.value("schema", 0) != 1) throw DataError("unsupported scene schema");
    s.name = j.value("name", s.name);
    s.supersample = j.value("supersample", s.supersample);
    const json& room = j.at("room");
    s.room.min = vec_from(room.at("min"));
    s.room.max = vec_from(room.at("max"));
    if (!((s.room.max - s.room.min).array() > 0.0).all()) {
      throw DataError("scene: room dimensions must be positive");
    }
    if (room.contains("walls")) {
      const json& walls = room.at("walls");
      if (!walls.is_array() || walls.size() != 6) {
        throw DataError("scene: room needs 6 wall textures");
      }
      for (int k = 0; k < 6; ++k) s.room.walls[k] = texture_from(walls.at(k));
    }
    for (const json& e : j.value("spheres", json::array())) {
      Sphere sp{vec_from(e.at("center")), e.at("radius").get<double>(),
                texture_from(e.value("texture", json::object()))};
      if (!(sp.radius > 0.0)) throw DataError("scene: sphere radius must be positive");
      s.spheres.push_back(sp);
    }
    for (const json& e : j.value("boxes", json::array())) {
      Box b{vec_from(e.at("min")), vec_from(e.at("max")),
            texture_from(e.value("texture", json::object()))};
      if (!((b.max - b.min).array() > 0.0).all()) {
        throw DataError("scene: box dimensions must be positive");
      }
      s.boxes.push_back(b);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed scene file " + path.string() + ": " + e.what());
  }
  return s;
}

}  // namespace omnidepth::synth
