#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <vector>

namespace adaocc {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

// Rigid transform: translation plus unit quaternion. The quaternion is
// normalized at construction; serialized component order is (qx, qy, qz, qw).
struct Pose {
  Vec3 translation = Vec3::Zero();
  Quat rotation = Quat::Identity();

  Pose() = default;
  Pose(const Vec3& t, const Quat& q);

  static Pose identity() { return Pose(); }
  static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero());

  // R(q) * p + t
  Vec3 transform_point(const Vec3& p) const { return rotation * p + translation; }
  // R(q)^-1 * (p - t)
  Vec3 inverse_transform_point(const Vec3& p) const {
    return rotation.conjugate() * (p - translation);
  }

  Pose inverse() const;
  Pose compose(const Pose& other) const;  // this applied after other
};

// Oriented 3D box. Size components (h, w, d) map to the object-frame x, y, z
// extents in that order.
struct OrientedBox3 {
  Pose pose;
  Vec3 size = Vec3::Ones();
  int class_id = 0;
  double score = 1.0;

  OrientedBox3() = default;
  OrientedBox3(const Pose& pose, const Vec3& size, int class_id = 0, double score = 1.0);

  double volume() const { return size.x() * size.y() * size.z(); }
  Vec3 half_size() const { return 0.5 * size; }
  // Radius of the bounding sphere around the box center.
  double bounding_radius() const { return half_size().norm(); }
  std::array<Vec3, 8> corners() const;
};

// Axis-aligned world-space interval.
struct SceneBounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();

  SceneBounds() = default;
  SceneBounds(const Vec3& mn, const Vec3& mx);

  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

// Regular voxel lattice: minimum corner, cell edge length, cell counts.
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();

  GridSpec() = default;
  GridSpec(const Vec3& origin, double voxel_size, const Eigen::Vector3i& dims);

  // Grid covering `bounds` exactly; extents must be integer multiples of the
  // voxel size (within 1e-9 of a cell).
  static GridSpec covering(const SceneBounds& bounds, double voxel_size);

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  }
  Vec3 extent_max() const { return origin + voxel_size * dims.cast<double>(); }

  // x-fastest linear index: (k*ny + j)*nx + i
  std::size_t linear_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims.y() + j) * dims.x() + i;
  }
  bool contains_cell(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims.x() && j < dims.y() && k < dims.z();
  }
  Vec3 cell_center(int i, int j, int k) const {
    return origin + voxel_size * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  bool operator==(const GridSpec& other) const;
};

// Continuous grid coordinates: (p - origin) / voxel_size. No clamping; the
// caller decides how to discretize.
Vec3 world_to_grid(const GridSpec& spec, const Vec3& p);

// Cell containing p under the flooring convention. May be out of range.
Eigen::Vector3i grid_cell(const GridSpec& spec, const Vec3& p);

Vec3 transform_point(const Pose& pose, const Vec3& p);

// Regular n^3 lattice spanning the box interior in the object frame,
// transformed into the parent frame. Endpoints at +-size/2 are included for
// n >= 2; n == 1 yields the center. Points are emitted x-fastest.
std::vector<Vec3> box_sampling_grid(const OrientedBox3& box, int n_per_axis);

// Closed-interval containment test in the box frame.
bool point_in_box(const OrientedBox3& box, const Vec3& p);

// Box parameter vector (x, y, z, qx, qy, qz, qw, h, w, d).
using BoxParams = Eigen::Matrix<double, 10, 1>;
BoxParams box_params(const OrientedBox3& box);
OrientedBox3 box_from_params(const BoxParams& v, int class_id = 0, double score = 1.0);

}  // namespace adaocc
