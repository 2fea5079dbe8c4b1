#include "adaocc/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace adaocc {

SemanticVoxelGrid::SemanticVoxelGrid(const GridSpec& spec_in, int class_count_in)
    : spec(spec_in), class_count(class_count_in) {
  if (class_count < 1) throw std::invalid_argument("class_count must be >= 1");
  labels.assign(spec.cell_count(), 0);
}

std::size_t SemanticVoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](std::uint8_t v) { return v != 0; }));
}

VoxelizeResult voxelize_points(const PointCloud& cloud, const GridSpec& spec, int label,
                               int class_count) {
  if (label < 1 || label > 255) throw std::invalid_argument("label must be in 1..255");
  if (class_count == 0) class_count = label;
  if (label > class_count) throw std::invalid_argument("label exceeds class_count");

  VoxelizeResult result{SemanticVoxelGrid(spec, class_count), 0};
  for (const Vec3& p : cloud.points) {
    const Eigen::Vector3i c = grid_cell(spec, p);
    if (!spec.contains_cell(c.x(), c.y(), c.z())) {
      ++result.dropped_points;
      continue;
    }
    result.grid.set_label(c.x(), c.y(), c.z(), static_cast<std::uint8_t>(label));
  }
  return result;
}

std::vector<PointCloud> grid_to_centers(const SemanticVoxelGrid& grid,
                                        const std::optional<SceneBounds>& bounds) {
  std::map<int, PointCloud> by_class;
  const GridSpec& spec = grid.spec;
  for (int k = 0; k < spec.dims.z(); ++k)
    for (int j = 0; j < spec.dims.y(); ++j)
      for (int i = 0; i < spec.dims.x(); ++i) {
        const std::uint8_t v = grid.label(i, j, k);
        if (v == 0) continue;
        const Vec3 c = spec.cell_center(i, j, k);
        if (bounds && !bounds->contains(c)) continue;
        auto& cloud = by_class[v];
        cloud.class_id = v;
        cloud.points.push_back(c);
      }
  std::vector<PointCloud> out;
  out.reserve(by_class.size());
  for (auto& [id, cloud] : by_class) out.push_back(std::move(cloud));
  return out;
}

PointCloud occupied_centers(const SemanticVoxelGrid& grid,
                            const std::optional<SceneBounds>& bounds) {
  PointCloud out;
  const GridSpec& spec = grid.spec;
  for (int k = 0; k < spec.dims.z(); ++k)
    for (int j = 0; j < spec.dims.y(); ++j)
      for (int i = 0; i < spec.dims.x(); ++i) {
        if (grid.label(i, j, k) == 0) continue;
        const Vec3 c = spec.cell_center(i, j, k);
        if (bounds && !bounds->contains(c)) continue;
        out.points.push_back(c);
      }
  return out;
}

namespace {

// Integer ratio between two voxel sizes, or 0 if they are not an integer
// multiple of each other (within a small relative tolerance).
int integer_ratio(double a, double b) {
  const double r = a / b;
  const double n = std::round(r);
  if (n < 1.0) return 0;
  if (std::abs(r - n) > 1e-9 * std::max(1.0, std::abs(r))) return 0;
  return static_cast<int>(n);
}

}  // namespace

SemanticVoxelGrid resample(const SemanticVoxelGrid& grid, double target_voxel_size) {
  if (!(target_voxel_size > 0.0)) throw std::invalid_argument("target voxel size must be > 0");
  const GridSpec& src = grid.spec;
  if (target_voxel_size == src.voxel_size) return grid;

  if (target_voxel_size < src.voxel_size) {
    // Upsample: each source cell becomes an f^3 block of identical labels.
    const int f = integer_ratio(src.voxel_size, target_voxel_size);
    if (f == 0) throw std::invalid_argument("voxel sizes must differ by an integer factor");
    GridSpec dst_spec(src.origin, target_voxel_size, src.dims * f);
    SemanticVoxelGrid dst(dst_spec, grid.class_count);
    for (int k = 0; k < src.dims.z(); ++k)
      for (int j = 0; j < src.dims.y(); ++j)
        for (int i = 0; i < src.dims.x(); ++i) {
          const std::uint8_t v = grid.label(i, j, k);
          if (v == 0) continue;
          for (int dk = 0; dk < f; ++dk)
            for (int dj = 0; dj < f; ++dj)
              for (int di = 0; di < f; ++di)
                dst.set_label(i * f + di, j * f + dj, k * f + dk, v);
        }
    return dst;
  }

  // Downsample: majority vote among non-free children, smallest class id wins
  // ties. Partial blocks at the upper edges vote over the cells that exist.
  const int f = integer_ratio(target_voxel_size, src.voxel_size);
  if (f == 0) throw std::invalid_argument("voxel sizes must differ by an integer factor");
  const Eigen::Vector3i dst_dims((src.dims.x() + f - 1) / f, (src.dims.y() + f - 1) / f,
                                 (src.dims.z() + f - 1) / f);
  GridSpec dst_spec(src.origin, target_voxel_size, dst_dims);
  SemanticVoxelGrid dst(dst_spec, grid.class_count);
  std::vector<int> votes(static_cast<std::size_t>(grid.class_count) + 1, 0);
  for (int k = 0; k < dst_dims.z(); ++k)
    for (int j = 0; j < dst_dims.y(); ++j)
      for (int i = 0; i < dst_dims.x(); ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        const int i1 = std::min((i + 1) * f, src.dims.x());
        const int j1 = std::min((j + 1) * f, src.dims.y());
        const int k1 = std::min((k + 1) * f, src.dims.z());
        for (int sk = k * f; sk < k1; ++sk)
          for (int sj = j * f; sj < j1; ++sj)
            for (int si = i * f; si < i1; ++si) {
              const std::uint8_t v = grid.label(si, sj, sk);
              if (v != 0) ++votes[v];
            }
        int best = 0;
        int best_votes = 0;
        for (int c = 1; c <= grid.class_count; ++c)
          if (votes[c] > best_votes) {
            best = c;
            best_votes = votes[c];
          }
        if (best != 0) dst.set_label(i, j, k, static_cast<std::uint8_t>(best));
      }
  return dst;
}

SemanticVoxelGrid crop(const SemanticVoxelGrid& grid, const SceneBounds& bounds) {
  const GridSpec& src = grid.spec;
  const Vec3 glo = world_to_grid(src, bounds.min);
  const Vec3 ghi = world_to_grid(src, bounds.max);
  // Snap outward so the crop covers the requested bounds, then clamp to the
  // grid. The epsilon keeps exact lattice hits from absorbing a spare cell.
  Eigen::Vector3i lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor(glo[a] + 1e-9)));
    hi[a] = std::min(src.dims[a], static_cast<int>(std::ceil(ghi[a] - 1e-9)));
  }
  if (lo.x() >= hi.x() || lo.y() >= hi.y() || lo.z() >= hi.z())
    throw std::invalid_argument("crop bounds do not intersect the grid");

  GridSpec dst_spec(src.origin + src.voxel_size * lo.cast<double>(), src.voxel_size, hi - lo);
  SemanticVoxelGrid dst(dst_spec, grid.class_count);
  for (int k = lo.z(); k < hi.z(); ++k)
    for (int j = lo.y(); j < hi.y(); ++j)
      for (int i = lo.x(); i < hi.x(); ++i)
        dst.set_label(i - lo.x(), j - lo.y(), k - lo.z(), grid.label(i, j, k));
  return dst;
}

void AdaptiveMap::validate() const {
  if (!(coarse.spec.voxel_size > 0.2))
    throw std::invalid_argument("coarse voxel size must exceed the high-resolution threshold");
  for (const Object& obj : objects) {
    if (obj.cloud.empty()) throw std::invalid_argument("object cloud must not be empty");
  }
}

SemanticVoxelGrid fuse(const SemanticVoxelGrid& coarse, const std::vector<PointCloud>& objects,
                       const GridSpec& target_spec) {
  SemanticVoxelGrid out(target_spec, coarse.class_count);

  // Project the coarse grid: each target cell takes the label of the coarse
  // cell its center falls in.
  for (int k = 0; k < target_spec.dims.z(); ++k)
    for (int j = 0; j < target_spec.dims.y(); ++j)
      for (int i = 0; i < target_spec.dims.x(); ++i) {
        const Vec3 c = target_spec.cell_center(i, j, k);
        const Eigen::Vector3i sc = grid_cell(coarse.spec, c);
        if (!coarse.spec.contains_cell(sc.x(), sc.y(), sc.z())) continue;
        const std::uint8_t v = coarse.label(sc.x(), sc.y(), sc.z());
        if (v != 0) out.set_label(i, j, k, v);
      }

  // Overwrite cells covered by object points, in list order. Cells the
  // objects do not touch keep their coarse labels.
  int max_class = coarse.class_count;
  for (const PointCloud& cloud : objects) {
    if (!cloud.class_id) throw std::invalid_argument("fused object cloud needs a class id");
    max_class = std::max(max_class, *cloud.class_id);
  }
  out.class_count = max_class;
  for (const PointCloud& cloud : objects) {
    for (const Vec3& p : cloud.points) {
      const Eigen::Vector3i c = grid_cell(target_spec, p);
      if (!target_spec.contains_cell(c.x(), c.y(), c.z())) continue;
      out.set_label(c.x(), c.y(), c.z(), static_cast<std::uint8_t>(*cloud.class_id));
    }
  }
  return out;
}

MemoryStats memory_stats(const SemanticVoxelGrid& grid) {
  MemoryStats s;
  s.cell_count = grid.spec.cell_count();
  s.occupied_count = grid.occupied_count();
  s.bytes_estimate = s.cell_count;
  return s;
}

MemoryStats memory_stats(const AdaptiveMap& map) {
  MemoryStats s = memory_stats(map.coarse);
  for (const AdaptiveMap::Object& obj : map.objects) s.point_count += obj.cloud.size();
  s.bytes_estimate = s.cell_count + 12 * s.point_count;
  return s;
}

}  // namespace adaocc
