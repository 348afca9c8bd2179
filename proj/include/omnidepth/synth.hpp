#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "omnidepth/correspondence.hpp"
#include "omnidepth/depth_map.hpp"
#include "omnidepth/parallel.hpp"
#include "omnidepth/registration.hpp"
#include "omnidepth/sphere_model.hpp"

namespace omnidepth::synth {

// Checkerboard modulated by fractal value noise, in surface meters.
struct Texture {
  double checker_period = 0.5;
  Vec3 color_a{0.8, 0.8, 0.8};
  Vec3 color_b{0.3, 0.3, 0.3};
  double noise_amplitude = 0.5;
  double noise_scale = 0.12;
  std::uint32_t seed = 1;
};

// Walls ordered -x, +x, -y, +y, -z (floor), +z (ceiling).
struct Room {
  Vec3 min{-3.0, -3.0, -1.5};
  Vec3 max{3.0, 3.0, 2.0};
  std::array<Texture, 6> walls{};
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
  Texture texture{};
};

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  Texture texture{};
};

struct SceneSpec {
  std::string name = "boxroom";
  Room room{};
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;
  int supersample = 3;  // per axis
};

// Textured box room with a few inner primitives; used by the acceptance suite.
SceneSpec default_scene();

struct CameraPose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();  // camera-to-world
};

struct Hit {
  double distance = 0.0;
  Vec3 color = Vec3::Zero();
  bool valid = false;
};

// Nearest intersection along a unit-direction ray.
Hit cast_ray(const SceneSpec& scene, const Vec3& origin, const Vec3& dir);

struct RenderResult {
  EquirectImage image;
  DepthMap depth;  // Euclidean ray length in meters
};

// Throws InvalidArgument when the camera is outside the room or inside a
// primitive.
RenderResult render_view(const SceneSpec& scene, const CameraPose& pose,
                         const ImageDims& dims, Exec exec = Exec::kParallel);

// Ground-truth rig for poses[0] as reference and poses[1] as baseline view.
Rig ground_truth_rig(const std::vector<CameraPose>& poses);

// Camera layouts with identity rotation, given as reference-frame
// translations t_1k (camera centers are -t_1k), placed at `origin`.
std::vector<CameraPose> layout_from_translations(const std::vector<Vec3>& t,
                                                 const Vec3& origin = Vec3::Zero());
// "smallroom": (0,0,-1), (-1,0,0), (0,2,0)
// "classroom": (0,0,-1), (0.866,0.5,0), (-0.83,1.44,0)
// "scaled":    0.5 * {(0,0,-1), 0.57*(0.866,0.5,0), 1.73*(-0.5,0.866,0)}
std::vector<CameraPose> named_layout(const std::string& name);

struct PoseTestConfig {
  int points = 1000;
  double noise_sigma = 0.0;  // radians, tangent-plane Gaussian per bearing
  double min_distance = 2.0;
  double max_distance = 8.0;
  std::uint64_t seed = 0;
};

struct PoseTest {
  CorrespondenceSet matches;  // pairs (0, k) for every k >= 1
  Rig ground_truth;
  std::vector<Vec3> points;   // reference frame
};

// View 0 is the reference, view 1 has rotation `rpy_deg` and unit translation
// `t` (the baseline, s = 1), views 2.. have the same rotation and translations
// of length scales[k-2] spread around t.
PoseTest make_pose_test(const Vec3& rpy_deg, const Vec3& t,
                        const std::vector<double>& scales,
                        const PoseTestConfig& cfg = {});

struct Dataset {
  SceneSpec scene;
  std::vector<EquirectImage> images;
  std::vector<DepthMap> depths;
  Rig rig;
};

Dataset render_dataset(const SceneSpec& scene, const std::vector<CameraPose>& poses,
                       const ImageDims& dims, Exec exec = Exec::kParallel);

// Layout: view_%02d.png (16-bit), depth_%02d.pfm, rig_gt.json, scene.json.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset render_rig(const SceneSpec& scene, const std::vector<CameraPose>& poses,
                   const ImageDims& dims, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

void save_scene(const SceneSpec& scene, const std::filesystem::path& path);
SceneSpec load_scene(const std::filesystem::path& path);

}  // namespace omnidepth::synth
