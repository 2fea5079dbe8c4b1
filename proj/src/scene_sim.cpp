#include "adaocc/scene_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "adaocc/kdtree.hpp"
#include "adaocc/parallel.hpp"

namespace adaocc {

namespace {

const std::array<std::string, kClassCount + 1> kClassNames = {
    "Free",        "Barrier",    "Bicycle",    "Bus",     "Car",
    "Construction", "Motorcycle", "Pedestrian", "Traffic Cone",
    "Trailer",     "Truck",      "Ground",     "Wall"};

// Typical full sizes (h, w, d) per object class, meters.
Vec3 size_prior(int class_id) {
  switch (class_id) {
    case kClassBarrier: return {2.0, 0.35, 1.0};
    case kClassBicycle: return {1.7, 0.6, 1.3};
    case kClassBus: return {11.0, 2.9, 3.4};
    case kClassCar: return {4.6, 1.9, 1.7};
    case kClassConstruction: return {6.0, 2.8, 3.2};
    case kClassMotorcycle: return {2.1, 0.8, 1.4};
    case kClassPedestrian: return {0.7, 0.7, 1.75};
    case kClassTrafficCone: return {0.4, 0.4, 0.7};
    case kClassTrailer: return {12.0, 2.9, 3.8};
    case kClassTruck: return {7.0, 2.5, 2.9};
    default: throw std::invalid_argument("no size prior for class " + std::to_string(class_id));
  }
}

}  // namespace

const std::string& class_name(int class_id) {
  if (class_id < 0 || class_id > kClassCount)
    throw std::invalid_argument("unknown class id " + std::to_string(class_id));
  return kClassNames[static_cast<std::size_t>(class_id)];
}

ShapeKind parse_shape(const std::string& name) {
  if (name == "box_shell") return ShapeKind::kBoxShell;
  if (name == "ellipsoid") return ShapeKind::kEllipsoid;
  if (name == "cylinder") return ShapeKind::kCylinder;
  if (name == "composite_car") return ShapeKind::kCompositeCar;
  throw std::invalid_argument("unknown shape: " + name);
}

std::string shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kBoxShell: return "box_shell";
    case ShapeKind::kEllipsoid: return "ellipsoid";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kCompositeCar: return "composite_car";
  }
  throw std::invalid_argument("unknown shape kind");
}

ShapeKind default_shape_for_class(int class_id) {
  switch (class_id) {
    case kClassCar: return ShapeKind::kCompositeCar;
    case kClassPedestrian: return ShapeKind::kEllipsoid;
    case kClassTrafficCone: return ShapeKind::kCylinder;
    default: return ShapeKind::kBoxShell;
  }
}

SceneSpec gen_scene(std::uint64_t seed, const SceneGenConfig& cfg) {
  if (cfg.object_count < 0 || cfg.wall_count < 0)
    throw std::invalid_argument("object and wall counts must be >= 0");
  if (!(cfg.ground_z >= cfg.bounds.min.z() && cfg.ground_z < cfg.bounds.max.z()))
    throw std::invalid_argument("ground plane outside scene bounds");

  SceneSpec scene;
  scene.seed = seed;
  scene.bounds = cfg.bounds;
  scene.ground_z = cfg.ground_z;

  std::vector<int> classes = cfg.classes;
  if (classes.empty()) {
    for (int c = kClassBarrier; c <= kClassTruck; ++c) classes.push_back(c);
  }

  Rng rng(seed);
  int attempts = 0;
  auto spend_attempt = [&] {
    if (++attempts > cfg.max_attempts)
      throw std::runtime_error("scene placement failed after " +
                               std::to_string(cfg.max_attempts) + " attempts");
  };

  std::vector<OrientedBox3> placed;  // walls and objects, for overlap rejection
  auto overlaps = [&](const OrientedBox3& box) {
    for (const OrientedBox3& other : placed) {
      const double gap = (box.pose.translation - other.pose.translation).norm();
      if (gap < box.bounding_radius() + other.bounding_radius()) return true;
    }
    return false;
  };

  const Vec3 span = cfg.bounds.extent();
  for (int w = 0; w < cfg.wall_count; ++w) {
    for (;;) {
      // A thin box hugging one of the four lateral sides.
      const std::size_t side = rng.uniform_index(4);
      const bool along_x = side < 2;
      const double run = span[along_x ? 0 : 1];
      const double length = rng.uniform(0.3, 0.6) * run;
      const double thickness = 0.3;
      const double height = 2.5;
      const double along = rng.uniform(cfg.bounds.min[along_x ? 0 : 1] + length / 2,
                                       cfg.bounds.max[along_x ? 0 : 1] - length / 2);
      const double inset = thickness / 2 + 0.05;
      Vec3 center;
      if (side == 0) center = {along, cfg.bounds.min.y() + inset, 0.0};
      else if (side == 1) center = {along, cfg.bounds.max.y() - inset, 0.0};
      else if (side == 2) center = {cfg.bounds.min.x() + inset, along, 0.0};
      else center = {cfg.bounds.max.x() - inset, along, 0.0};
      center.z() = cfg.ground_z + height / 2;
      const double yaw = along_x ? 0.0 : 1.5707963267948966;
      OrientedBox3 box(Pose::from_yaw(yaw, center), Vec3(length, thickness, height), kClassWall,
                       1.0);
      if (center.z() + height / 2 > cfg.bounds.max.z() || overlaps(box)) {
        spend_attempt();
        continue;
      }
      scene.walls.push_back({kClassWall, box});
      placed.push_back(box);
      break;
    }
  }

  for (int i = 0; i < cfg.object_count; ++i) {
    for (;;) {
      const int class_id = classes[rng.uniform_index(classes.size())];
      Vec3 size = size_prior(class_id);
      for (int a = 0; a < 3; ++a) size[a] *= 1.0 + rng.uniform(-0.15, 0.15);
      const double yaw = rng.uniform(0.0, 6.283185307179586);
      const double r_xy = 0.5 * std::hypot(size.x(), size.y());
      const double x_lo = cfg.bounds.min.x() + r_xy, x_hi = cfg.bounds.max.x() - r_xy;
      const double y_lo = cfg.bounds.min.y() + r_xy, y_hi = cfg.bounds.max.y() - r_xy;
      if (x_lo >= x_hi || y_lo >= y_hi)
        throw std::runtime_error("scene bounds too small for class " + class_name(class_id));
      const double x = rng.uniform(x_lo, x_hi);
      const double y = rng.uniform(y_lo, y_hi);
      const double z = cfg.ground_z + size.z() / 2;  // resting on the ground
      OrientedBox3 box(Pose::from_yaw(yaw, Vec3(x, y, z)), size, class_id, 1.0);
      if (z + size.z() / 2 > cfg.bounds.max.z() || overlaps(box)) {
        spend_attempt();
        continue;
      }
      scene.objects.push_back({class_id, default_shape_for_class(class_id), box});
      placed.push_back(box);
      break;
    }
  }
  return scene;
}

namespace {

struct SurfaceSample {
  Vec3 p;       // object frame
  Vec3 normal;  // object frame, unit outward
};

// One uniform-by-area sample on an axis-aligned box shell with the given
// half extents.
// Box-morphology objects are thin-walled: the solid is a closed layer of
// kShellThickness under the outer faces, hollow inside. Extents thinner than
// two layers leave no void and degrade to a filled box. The thickness spans
// two finest-grid steps, the effective surface thickness of occupancy ground
// truth aggregated from noisy range sweeps, so a face never slips between
// cell centers and rasterizes consistently across resolutions.
constexpr double kShellThickness = 0.4;

// The wall of a thin-walled box is sampled on two skin sheets, one per
// finest-grid layer of the wall, each at its layer's center depth. Dense
// clouds then cover every rasterized wall cell instead of piling onto the
// layer boundary.
constexpr double kSkinDepth[2] = {0.1, kShellThickness - 0.1};

// Sheet half extents at `depth` under the outer faces (clamped toward the
// mid-plane for extents too thin to hold that depth).
Vec3 box_skin_half(const Vec3& h, double depth) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) out[a] = h[a] - std::min(depth, 0.5 * h[a]);
  return out;
}

SurfaceSample sample_box_shell(const Vec3& outer_h, Rng& rng) {
  const double ax = outer_h.y() * outer_h.z();  // quarter areas, relative weights only
  const double ay = outer_h.x() * outer_h.z();
  const double az = outer_h.x() * outer_h.y();
  const double total = 2.0 * (ax + ay + az);
  double pick = rng.uniform(0.0, total);
  int axis;
  if (pick < 2.0 * ax) axis = 0;
  else if (pick < 2.0 * (ax + ay)) axis = 1;
  else axis = 2;
  const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double depth = rng.uniform() < 0.5 ? kSkinDepth[0] : kSkinDepth[1];
  const Vec3 h = box_skin_half(outer_h, depth);
  // Draws in named order: argument evaluation order would not be portable.
  const double px = rng.uniform(-h.x(), h.x());
  const double py = rng.uniform(-h.y(), h.y());
  const double pz = rng.uniform(-h.z(), h.z());
  SurfaceSample s;
  s.p = Vec3(px, py, pz);
  s.p[axis] = side * h[axis];
  s.normal = Vec3::Zero();
  s.normal[axis] = side;
  return s;
}

// Uniform-by-area point on an ellipsoid with semi-axes (a, b, c): sphere
// directions thinned by the local area-distortion factor.
SurfaceSample sample_ellipsoid(const Vec3& h, Rng& rng) {
  const double gmax = std::max({h.y() * h.z(), h.x() * h.z(), h.x() * h.y()});
  for (int tries = 0; tries < 256; ++tries) {
    const double gx = rng.gaussian();
    const double gy = rng.gaussian();
    const double gz = rng.gaussian();
    Vec3 u(gx, gy, gz);
    const double n = u.norm();
    if (n < 1e-12) continue;
    u /= n;
    const double g = std::sqrt(std::pow(h.y() * h.z() * u.x(), 2) +
                               std::pow(h.x() * h.z() * u.y(), 2) +
                               std::pow(h.x() * h.y() * u.z(), 2));
    if (rng.uniform() * gmax > g) continue;
    SurfaceSample s;
    s.p = u.cwiseProduct(h);
    s.normal = Vec3(s.p.x() / (h.x() * h.x()), s.p.y() / (h.y() * h.y()),
                    s.p.z() / (h.z() * h.z()))
                   .normalized();
    return s;
  }
  // Practically unreachable; the poles are always valid.
  return {Vec3(0, 0, h.z()), Vec3(0, 0, 1)};
}

double ellipse_perimeter(double a, double b) {
  // Composite Simpson over one quarter arc.
  const int n = 256;
  const double step = 1.5707963267948966 / n;
  double sum = 0.0;
  auto f = [&](double t) {
    const double st = std::sin(t), ct = std::cos(t);
    return std::sqrt(a * a * st * st + b * b * ct * ct);
  };
  for (int i = 0; i < n; ++i) {
    const double t0 = i * step;
    sum += (f(t0) + 4.0 * f(t0 + step / 2) + f(t0 + step)) * step / 6.0;
  }
  return 4.0 * sum;
}

// Elliptic cylinder with axis z: lateral surface plus two caps.
SurfaceSample sample_cylinder(const Vec3& h, Rng& rng) {
  const double a = h.x(), b = h.y(), c = h.z();
  const double side_area = ellipse_perimeter(a, b) * 2.0 * c;
  const double cap_area = 3.141592653589793 * a * b;
  const double total = side_area + 2.0 * cap_area;
  if (rng.uniform(0.0, total) < side_area) {
    const double amax = std::max(a, b);
    double theta = 0.0;
    for (int tries = 0; tries < 256; ++tries) {
      theta = rng.uniform(0.0, 6.283185307179586);
      const double arc = std::hypot(a * std::sin(theta), b * std::cos(theta));
      if (rng.uniform() * amax <= arc) break;
    }
    SurfaceSample s;
    s.p = Vec3(a * std::cos(theta), b * std::sin(theta), rng.uniform(-c, c));
    s.normal = Vec3(std::cos(theta) / a, std::sin(theta) / b, 0.0).normalized();
    return s;
  }
  const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double r = std::sqrt(rng.uniform());
  const double phi = rng.uniform(0.0, 6.283185307179586);
  SurfaceSample s;
  s.p = Vec3(a * r * std::cos(phi), b * r * std::sin(phi), side * c);
  s.normal = Vec3(0.0, 0.0, side);
  return s;
}

// The two axis-aligned boxes making up the car silhouette, in the object
// frame of a box with half extents h: a long body topped by a narrower cabin
// shifted toward the rear.
struct CarParts {
  Vec3 body_half, body_center;
  Vec3 cabin_half, cabin_center;
};

CarParts car_parts(const Vec3& h) {
  CarParts parts;
  parts.body_half = Vec3(h.x(), h.y(), 0.6 * h.z());
  parts.body_center = Vec3(0.0, 0.0, -0.4 * h.z());
  parts.cabin_half = Vec3(0.5 * h.x(), 0.9 * h.y(), 0.4 * h.z());
  parts.cabin_center = Vec3(-0.2 * h.x(), 0.0, 0.6 * h.z());
  return parts;
}

bool inside_aabb_strict(const Vec3& p, const Vec3& center, const Vec3& half) {
  const Vec3 d = (p - center).cwiseAbs();
  return d.x() < half.x() && d.y() < half.y() && d.z() < half.z();
}

bool inside_aabb(const Vec3& p, const Vec3& center, const Vec3& half) {
  const Vec3 d = (p - center).cwiseAbs();
  return d.x() <= half.x() && d.y() <= half.y() && d.z() <= half.z();
}

bool inside_box_shell(const Vec3& p, const Vec3& center, const Vec3& half) {
  if (!inside_aabb(p, center, half)) return false;
  const Vec3 inner = (half.array() - kShellThickness).max(0.0).matrix();
  const Vec3 d = (p - center).cwiseAbs();
  return (d.array() >= inner.array()).any();
}

SurfaceSample sample_composite_car(const Vec3& h, Rng& rng) {
  const CarParts parts = car_parts(h);
  auto shell_area = [](const Vec3& half) {
    return 8.0 * (half.y() * half.z() + half.x() * half.z() + half.x() * half.y());
  };
  const double body_area = shell_area(parts.body_half);
  const double cabin_area = shell_area(parts.cabin_half);
  for (int tries = 0; tries < 256; ++tries) {
    const bool on_body = rng.uniform(0.0, body_area + cabin_area) < body_area;
    SurfaceSample s = sample_box_shell(on_body ? parts.body_half : parts.cabin_half, rng);
    s.p += on_body ? parts.body_center : parts.cabin_center;
    // Drop samples buried strictly inside the other part.
    const Vec3& oc = on_body ? parts.cabin_center : parts.body_center;
    const Vec3& oh = on_body ? parts.cabin_half : parts.body_half;
    if (inside_aabb_strict(s.p, oc, oh)) continue;
    return s;
  }
  return {Vec3(0, 0, h.z()), Vec3(0, 0, 1)};
}

SurfaceSample sample_shape(ShapeKind kind, const Vec3& half, Rng& rng) {
  switch (kind) {
    case ShapeKind::kBoxShell: return sample_box_shell(half, rng);
    case ShapeKind::kEllipsoid: return sample_ellipsoid(half, rng);
    case ShapeKind::kCylinder: return sample_cylinder(half, rng);
    case ShapeKind::kCompositeCar: return sample_composite_car(half, rng);
  }
  throw std::invalid_argument("unknown shape kind");
}

}  // namespace

bool point_in_solid(const SceneObject& obj, const Vec3& p) {
  const Vec3 local = obj.box.pose.inverse_transform_point(p);
  const Vec3 h = obj.box.half_size();
  switch (obj.shape) {
    case ShapeKind::kBoxShell:
      return inside_box_shell(local, Vec3::Zero(), h);
    case ShapeKind::kEllipsoid: {
      const Vec3 q(local.x() / h.x(), local.y() / h.y(), local.z() / h.z());
      return q.squaredNorm() <= 1.0;
    }
    case ShapeKind::kCylinder: {
      if (std::abs(local.z()) > h.z()) return false;
      const double qx = local.x() / h.x(), qy = local.y() / h.y();
      return qx * qx + qy * qy <= 1.0;
    }
    case ShapeKind::kCompositeCar: {
      const CarParts parts = car_parts(h);
      return inside_box_shell(local, parts.body_center, parts.body_half) ||
             inside_box_shell(local, parts.cabin_center, parts.cabin_half);
    }
  }
  return false;
}

PointCloud sample_surface(const SceneObject& obj, int n, const VisibilityConfig& vis, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  PointCloud cloud;
  cloud.class_id = obj.class_id;
  cloud.points.reserve(static_cast<std::size_t>(n));
  const Vec3 half = obj.box.half_size();
  const Eigen::Matrix3d R = obj.box.pose.rotation.toRotationMatrix();
  const long budget = 10L * n;
  for (long draw = 0; draw < budget && static_cast<int>(cloud.points.size()) < n; ++draw) {
    const SurfaceSample s = sample_shape(obj.shape, half, rng);
    const Vec3 p = obj.box.pose.transform_point(s.p);
    if ((p - vis.ego_position).norm() > vis.max_range) continue;
    if (vis.mode == VisibilityConfig::Mode::kFrontFacing) {
      const Vec3 normal = R * s.normal;
      if (normal.dot(vis.ego_position - p) <= 0.0) continue;
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

SemanticVoxelGrid rasterize_gt(const SceneSpec& scene, const GridSpec& spec) {
  SemanticVoxelGrid grid(spec, kClassCount);

  // Ground: the cell layer directly below the surface line, so the road
  // material sits under the plane objects rest on at every resolution.
  const int kg = static_cast<int>(
      std::floor((scene.ground_z - 0.5 * spec.voxel_size - spec.origin.z()) / spec.voxel_size));
  if (kg >= 0 && kg < spec.dims.z()) {
    for (int j = 0; j < spec.dims.y(); ++j)
      for (int i = 0; i < spec.dims.x(); ++i)
        grid.set_label(i, j, kg, static_cast<std::uint8_t>(scene.ground_class));
  }

  // Solid writes, later passes winning: walls over ground, objects over walls.
  auto paint_solid = [&](const OrientedBox3& box, int label, ShapeKind shape) {
    const SceneObject probe{label, shape, box};
    const double r = box.bounding_radius();
    const Vec3 lo = world_to_grid(spec, box.pose.translation - Vec3::Constant(r));
    const Vec3 hi = world_to_grid(spec, box.pose.translation + Vec3::Constant(r));
    const int i0 = std::max(0, static_cast<int>(std::floor(lo.x())));
    const int j0 = std::max(0, static_cast<int>(std::floor(lo.y())));
    const int k0 = std::max(0, static_cast<int>(std::floor(lo.z())));
    const int i1 = std::min(spec.dims.x(), static_cast<int>(std::ceil(hi.x())) + 1);
    const int j1 = std::min(spec.dims.y(), static_cast<int>(std::ceil(hi.y())) + 1);
    const int k1 = std::min(spec.dims.z(), static_cast<int>(std::ceil(hi.z())) + 1);
    for (int k = k0; k < k1; ++k)
      for (int j = j0; j < j1; ++j)
        for (int i = i0; i < i1; ++i)
          if (point_in_solid(probe, spec.cell_center(i, j, k)))
            grid.set_label(i, j, k, static_cast<std::uint8_t>(label));
  };

  for (const WallSegment& wall : scene.walls)
    paint_solid(wall.box, wall.class_id, ShapeKind::kBoxShell);
  for (const SceneObject& obj : scene.objects) paint_solid(obj.box, obj.class_id, obj.shape);
  return grid;
}

std::vector<LabeledPoint> visible_surface_points(const SceneSpec& scene,
                                                 const VisibilityConfig& vis,
                                                 const EncoderConfig& cfg, std::uint64_t seed) {
  std::vector<LabeledPoint> out;
  Rng rng(seed);

  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    Rng obj_rng = rng.fork(i);
    const PointCloud cloud =
        sample_surface(scene.objects[i], cfg.points_per_object, vis, obj_rng);
    for (const Vec3& p : cloud.points) out.push_back({p, scene.objects[i].class_id});
  }
  for (std::size_t w = 0; w < scene.walls.size(); ++w) {
    Rng wall_rng = rng.fork(1000 + w);
    const SceneObject probe{scene.walls[w].class_id, ShapeKind::kBoxShell, scene.walls[w].box};
    const PointCloud cloud = sample_surface(probe, cfg.points_per_object, vis, wall_rng);
    for (const Vec3& p : cloud.points) out.push_back({p, scene.walls[w].class_id});
  }

  // Ground: a fixed lattice on the plane, range-limited; visible whenever the
  // ego sits above it.
  if (vis.mode == VisibilityConfig::Mode::kFull || vis.ego_position.z() > scene.ground_z) {
    for (double x = scene.bounds.min.x() + cfg.ground_spacing / 2; x < scene.bounds.max.x();
         x += cfg.ground_spacing) {
      for (double y = scene.bounds.min.y() + cfg.ground_spacing / 2; y < scene.bounds.max.y();
           y += cfg.ground_spacing) {
        const Vec3 p(x, y, scene.ground_z);
        if ((p - vis.ego_position).norm() > vis.max_range) continue;
        out.push_back({p, scene.ground_class});
      }
    }
  }
  return out;
}

FeatureVolume encode_features(const SceneSpec& scene, const VisibilityConfig& vis,
                              const GridSpec& spec, int channels, std::uint64_t seed,
                              const EncoderConfig& cfg) {
  if (channels < 4) throw std::invalid_argument("encoder needs at least 4 channels");
  FeatureVolume vol(spec, channels);
  const std::vector<LabeledPoint> pts = visible_surface_points(scene, vis, cfg, seed);

  if (pts.empty()) {
    for (std::size_t cell = 0; cell < spec.cell_count(); ++cell)
      vol.data[cell * static_cast<std::size_t>(channels)] =
          static_cast<float>(cfg.distance_cap);
    return vol;
  }

  std::vector<Vec3> all;
  all.reserve(pts.size());
  std::array<std::vector<Vec3>, kClassCount + 1> by_class;
  for (const LabeledPoint& lp : pts) {
    all.push_back(lp.p);
    if (lp.class_id >= 1 && lp.class_id <= kClassCount)
      by_class[static_cast<std::size_t>(lp.class_id)].push_back(lp.p);
  }
  const KdTree3 tree(all);
  std::array<std::unique_ptr<KdTree3>, kClassCount + 1> class_trees;
  for (int c = 1; c <= kClassCount; ++c)
    if (!by_class[static_cast<std::size_t>(c)].empty())
      class_trees[static_cast<std::size_t>(c)] =
          std::make_unique<KdTree3>(by_class[static_cast<std::size_t>(c)]);

  const auto norm_count = [&](std::size_t n) {
    return static_cast<float>(std::min(1.0, static_cast<double>(n) / cfg.density_norm));
  };

  parallel_for(spec.cell_count(), [&](std::size_t cell) {
    const int nx = spec.dims.x(), ny = spec.dims.y();
    const int i = static_cast<int>(cell % static_cast<std::size_t>(nx));
    const int j = static_cast<int>((cell / static_cast<std::size_t>(nx)) %
                                   static_cast<std::size_t>(ny));
    const int k = static_cast<int>(cell / (static_cast<std::size_t>(nx) *
                                           static_cast<std::size_t>(ny)));
    const Vec3 c = spec.cell_center(i, j, k);
    float* f = &vol.data[cell * static_cast<std::size_t>(channels)];

    const auto hit = tree.nearest(c);
    const double dist = std::sqrt(hit.squared_distance);
    f[0] = static_cast<float>(std::min(dist, cfg.distance_cap));
    if (channels > 1) f[1] = norm_count(tree.radius_count(c, cfg.density_radius));
    const Vec3 offset = all[hit.index] - c;
    for (int a = 0; a < 3; ++a)
      if (2 + a < channels) f[2 + a] = static_cast<float>(offset[a]);
    for (int cid = 1; cid <= kClassCount; ++cid) {
      const KdTree3* ct = class_trees[static_cast<std::size_t>(cid)].get();
      const int near_ch = 5 + (cid - 1);
      const int far_ch = 5 + kClassCount + (cid - 1);
      if (near_ch < channels)
        f[near_ch] = ct ? norm_count(ct->radius_count(c, cfg.class_radius_near)) : 0.0f;
      if (far_ch < channels)
        f[far_ch] = ct ? norm_count(ct->radius_count(c, cfg.class_radius_far)) : 0.0f;
    }
  });
  return vol;
}

std::pair<FeatureVolume, FeatureVolume> encode_feature_pair(
    const SceneSpec& scene, const VisibilityConfig& vis, const GridSpec& spec, int channels,
    std::uint64_t seed, const Vec3& prev_ego_offset, const EncoderConfig& cfg) {
  Rng split(seed);
  const std::uint64_t prev_seed = split.next_u64();
  const std::uint64_t cur_seed = split.next_u64();
  VisibilityConfig prev_vis = vis;
  prev_vis.ego_position += prev_ego_offset;
  return {encode_features(scene, prev_vis, spec, channels, prev_seed, cfg),
          encode_features(scene, vis, spec, channels, cur_seed, cfg)};
}

void DetectorNoise::validate() const {
  if (!(sigma_translation >= 0.0) || !(sigma_yaw >= 0.0) || !(sigma_size_rel >= 0.0))
    throw std::invalid_argument("noise sigmas must be >= 0");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0) ||
      !(class_flip_prob >= 0.0 && class_flip_prob <= 1.0))
    throw std::invalid_argument("probabilities must be in [0, 1]");
}

std::vector<OrientedBox3> oracle_detect(const SceneSpec& scene, const DetectorNoise& noise) {
  noise.validate();
  Rng rng(noise.seed);
  std::vector<OrientedBox3> out;
  out.reserve(scene.objects.size());
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    Rng r = rng.fork(i);
    if (r.uniform() < noise.drop_prob) continue;
    OrientedBox3 box = scene.objects[i].box;
    const double tx = r.gaussian(0.0, noise.sigma_translation);
    const double ty = r.gaussian(0.0, noise.sigma_translation);
    const double tz = r.gaussian(0.0, noise.sigma_translation);
    box.pose.translation += Vec3(tx, ty, tz);
    const double dyaw = r.gaussian(0.0, noise.sigma_yaw);
    if (dyaw != 0.0) {
      box.pose.rotation =
          (Eigen::AngleAxisd(dyaw, Vec3::UnitZ()) * box.pose.rotation).normalized();
    }
    const double factor = std::max(1.0 + r.gaussian(0.0, noise.sigma_size_rel), 1e-3);
    box.size *= factor;
    if (r.uniform() < noise.class_flip_prob) {
      // Uniform over the other object classes.
      std::vector<int> others;
      for (int c = kClassBarrier; c <= kClassTruck; ++c)
        if (c != box.class_id) others.push_back(c);
      box.class_id = others[r.uniform_index(others.size())];
    }
    box.score = 1.0 - noise.drop_prob;
    out.push_back(box);
  }
  return out;
}

}  // namespace adaocc
