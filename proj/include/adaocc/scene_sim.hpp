#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adaocc/feature_volume.hpp"
#include "adaocc/geometry.hpp"
#include "adaocc/rng.hpp"
#include "adaocc/voxel.hpp"

namespace adaocc {

// Semantic class ids. 1..10 are the object classes, ground and walls are
// background classes on top of them.
inline constexpr int kClassBarrier = 1;
inline constexpr int kClassBicycle = 2;
inline constexpr int kClassBus = 3;
inline constexpr int kClassCar = 4;
inline constexpr int kClassConstruction = 5;
inline constexpr int kClassMotorcycle = 6;
inline constexpr int kClassPedestrian = 7;
inline constexpr int kClassTrafficCone = 8;
inline constexpr int kClassTrailer = 9;
inline constexpr int kClassTruck = 10;
inline constexpr int kClassGround = 11;
inline constexpr int kClassWall = 12;
inline constexpr int kClassCount = 12;

// Display name for a class id ("Car", "Ground", ...).
const std::string& class_name(int class_id);

enum class ShapeKind { kBoxShell, kEllipsoid, kCylinder, kCompositeCar };

ShapeKind parse_shape(const std::string& name);
std::string shape_name(ShapeKind kind);

// Default primitive used for a class when generating scenes.
ShapeKind default_shape_for_class(int class_id);

struct SceneObject {
  int class_id = kClassCar;
  ShapeKind shape = ShapeKind::kBoxShell;
  OrientedBox3 box;
};

struct WallSegment {
  int class_id = kClassWall;
  OrientedBox3 box;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  SceneBounds bounds;
  double ground_z = -1.8;
  int ground_class = kClassGround;
  std::vector<WallSegment> walls;
  std::vector<SceneObject> objects;

  SceneSpec() : bounds(Vec3(-12.8, -12.8, -5.0), Vec3(12.8, 12.8, 3.0)) {}
};

struct SceneGenConfig {
  SceneBounds bounds{Vec3(-12.8, -12.8, -5.0), Vec3(12.8, 12.8, 3.0)};
  int object_count = 12;
  int wall_count = 0;
  double ground_z = -1.8;
  std::vector<int> classes;  // empty: all ten object classes
  int max_attempts = 1000;   // total placement rejections tolerated per scene
};

// Deterministic scene: boxes drawn from per-class size priors, resting on the
// ground plane, rejected on bounding-sphere overlap. Throws after the
// placement attempt budget is exhausted.
SceneSpec gen_scene(std::uint64_t seed, const SceneGenConfig& cfg);

struct VisibilityConfig {
  enum class Mode { kFull, kFrontFacing };
  Vec3 ego_position = Vec3::Zero();
  Mode mode = Mode::kFrontFacing;
  double max_range = 60.0;
};

// Up to n points uniform on the object's surface. Front-facing mode keeps a
// candidate only when its outward normal faces the ego position
// (dot(normal, ego - p) > 0); candidates beyond max_range are rejected in
// both modes. Gives up after 10*n candidate draws and returns what was
// accepted.
PointCloud sample_surface(const SceneObject& obj, int n, const VisibilityConfig& vis, Rng& rng);

// True when p lies inside the object's solid primitive. Ellipsoids and
// cylinders are filled; box shells (including both composite-car parts) are
// thin-walled, a closed 0.4 m layer under the outer surface.
bool point_in_solid(const SceneObject& obj, const Vec3& p);

// Cell center inside an object solid labels the cell with the object class;
// walls label their solid cells and the ground labels the single cell layer
// containing its plane. Objects win over walls, walls over ground.
SemanticVoxelGrid rasterize_gt(const SceneSpec& scene, const GridSpec& spec);

struct EncoderConfig {
  int points_per_object = 600;   // surface samples per object and wall
  double ground_spacing = 0.5;   // lattice step for ground points, meters
  double distance_cap = 1.0;     // channel 0 truncation, meters
  double density_radius = 0.4;   // channel 1 neighborhood, meters
  double class_radius_near = 0.4;
  double class_radius_far = 0.8;
  double density_norm = 32.0;    // point count mapped to 1.0
};

struct LabeledPoint {
  Vec3 p;
  int class_id = 0;
};

// Every surface point the ego can see, drawn deterministically from `seed`:
// object and wall surfaces via sample_surface, the ground as a fixed lattice
// filtered by range.
std::vector<LabeledPoint> visible_surface_points(const SceneSpec& scene,
                                                 const VisibilityConfig& vis,
                                                 const EncoderConfig& cfg, std::uint64_t seed);

// Per-voxel geometric descriptor of the visible surface points. Channel
// layout (truncated to `channels`):
//   0:      distance to the nearest point, capped at distance_cap
//   1:      point count within density_radius, divided by density_norm, capped at 1
//   2..4:   offset from the cell center to the nearest point
//   5..16:  per-class point count within class_radius_near (normalized as ch 1)
//   17..28: per-class point count within class_radius_far
//   29..:   zero
// With no visible points, channel 0 is the cap everywhere and the rest stay 0.
FeatureVolume encode_features(const SceneSpec& scene, const VisibilityConfig& vis,
                              const GridSpec& spec, int channels, std::uint64_t seed,
                              const EncoderConfig& cfg = {});

// Two volumes of the same scene for temporal input: the first frame is seen
// from the ego displaced by prev_ego_offset, the second from vis.ego_position.
std::pair<FeatureVolume, FeatureVolume> encode_feature_pair(
    const SceneSpec& scene, const VisibilityConfig& vis, const GridSpec& spec, int channels,
    std::uint64_t seed, const Vec3& prev_ego_offset, const EncoderConfig& cfg = {});

struct DetectorNoise {
  double sigma_translation = 0.2;  // meters, per axis
  double sigma_yaw = 0.05;         // radians
  double sigma_size_rel = 0.05;    // relative size factor spread
  double drop_prob = 0.1;
  double class_flip_prob = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ground-truth boxes with detection noise: independent per-box drop, then
// translation/yaw/size perturbation and optional class flip. Scores are
// 1 - drop_prob. Deterministic per seed.
std::vector<OrientedBox3> oracle_detect(const SceneSpec& scene, const DetectorNoise& noise);

}  // namespace adaocc
