#include "adaocc/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace adaocc {

Pose::Pose(const Vec3& t, const Quat& q) : translation(t), rotation(q) {
  const double n = rotation.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("Pose: quaternion norm must be positive and finite");
  }
  rotation.normalize();
}

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  return Pose(t, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())));
}

Pose Pose::inverse() const {
  const Quat qi = rotation.conjugate();
  return Pose(qi * (-translation), qi);
}

Pose Pose::compose(const Pose& other) const {
  return Pose(rotation * other.translation + translation, rotation * other.rotation);
}

OrientedBox3::OrientedBox3(const Pose& pose, const Vec3& size, int class_id, double score)
    : pose(pose), size(size), class_id(class_id), score(score) {
  if (!(size.array() > 0.0).all()) {
    throw std::invalid_argument("OrientedBox3: all size components must be positive");
  }
}

std::array<Vec3, 8> OrientedBox3::corners() const {
  std::array<Vec3, 8> out;
  const Vec3 h = half_size();
  int n = 0;
  for (int sz : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sx : {-1, 1}) {
        out[n++] = pose.transform_point(Vec3(sx * h.x(), sy * h.y(), sz * h.z()));
      }
    }
  }
  return out;
}

SceneBounds::SceneBounds(const Vec3& mn, const Vec3& mx) : min(mn), max(mx) {
  if (!(min.array() < max.array()).all()) {
    throw std::invalid_argument("SceneBounds: min must be strictly below max per axis");
  }
}

GridSpec::GridSpec(const Vec3& origin, double voxel_size, const Eigen::Vector3i& dims)
    : origin(origin), voxel_size(voxel_size), dims(dims) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw std::invalid_argument("GridSpec: voxel_size must be positive and finite");
  }
  if ((dims.array() < 1).any()) {
    throw std::invalid_argument("GridSpec: all dims must be >= 1");
  }
  if (!extent_max().allFinite() || !origin.allFinite()) {
    throw std::invalid_argument("GridSpec: extent must be finite");
  }
}

GridSpec GridSpec::covering(const SceneBounds& bounds, double voxel_size) {
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) {
    const double cells = (bounds.max[a] - bounds.min[a]) / voxel_size;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, std::abs(cells)) + 1e-9) {
      throw std::invalid_argument("GridSpec::covering: bounds extent is not a multiple of voxel_size");
    }
    dims[a] = static_cast<int>(rounded);
  }
  return GridSpec(bounds.min, voxel_size, dims);
}

bool GridSpec::operator==(const GridSpec& other) const {
  return origin == other.origin && voxel_size == other.voxel_size && dims == other.dims;
}

Vec3 world_to_grid(const GridSpec& spec, const Vec3& p) {
  return (p - spec.origin) / spec.voxel_size;
}

Eigen::Vector3i grid_cell(const GridSpec& spec, const Vec3& p) {
  const Vec3 g = world_to_grid(spec, p);
  return Eigen::Vector3i(static_cast<int>(std::floor(g.x())),
                         static_cast<int>(std::floor(g.y())),
                         static_cast<int>(std::floor(g.z())));
}

Vec3 transform_point(const Pose& pose, const Vec3& p) { return pose.transform_point(p); }

std::vector<Vec3> box_sampling_grid(const OrientedBox3& box, int n_per_axis) {
  if (n_per_axis < 1) {
    throw std::invalid_argument("box_sampling_grid: n_per_axis must be >= 1");
  }
  const int n = n_per_axis;
  std::vector<double> t(n);
  if (n == 1) {
    t[0] = 0.0;
  } else {
    for (int i = 0; i < n; ++i) {
      t[i] = -0.5 + static_cast<double>(i) / (n - 1);
    }
  }
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec3 local(t[i] * box.size.x(), t[j] * box.size.y(), t[k] * box.size.z());
        points.push_back(box.pose.transform_point(local));
      }
    }
  }
  return points;
}

bool point_in_box(const OrientedBox3& box, const Vec3& p) {
  const Vec3 q = box.pose.inverse_transform_point(p);
  const Vec3 h = box.half_size();
  return std::abs(q.x()) <= h.x() && std::abs(q.y()) <= h.y() && std::abs(q.z()) <= h.z();
}

BoxParams box_params(const OrientedBox3& box) {
  BoxParams v;
  v << box.pose.translation.x(), box.pose.translation.y(), box.pose.translation.z(),
      box.pose.rotation.x(), box.pose.rotation.y(), box.pose.rotation.z(),
      box.pose.rotation.w(), box.size.x(), box.size.y(), box.size.z();
  return v;
}

OrientedBox3 box_from_params(const BoxParams& v, int class_id, double score) {
  const Pose pose(Vec3(v[0], v[1], v[2]), Quat(v[6], v[3], v[4], v[5]));
  return OrientedBox3(pose, Vec3(v[7], v[8], v[9]), class_id, score);
}

}  // namespace adaocc
