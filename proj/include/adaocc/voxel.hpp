#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adaocc/geometry.hpp"

namespace adaocc {

// Ordered 3D point set, optionally carrying one class label for the whole
// cloud.
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<int> class_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Dense labeled voxel grid. Label 0 means free; 1..class_count are semantic
// classes. Storage is x-fastest: labels[(k*ny + j)*nx + i].
struct SemanticVoxelGrid {
  GridSpec spec;
  int class_count = 1;
  std::vector<std::uint8_t> labels;

  SemanticVoxelGrid() = default;
  SemanticVoxelGrid(const GridSpec& spec, int class_count);

  std::uint8_t label(int i, int j, int k) const { return labels[spec.linear_index(i, j, k)]; }
  void set_label(int i, int j, int k, std::uint8_t v) { labels[spec.linear_index(i, j, k)] = v; }
  std::size_t occupied_count() const;
};

struct VoxelizeResult {
  SemanticVoxelGrid grid;
  std::size_t dropped_points = 0;  // outside the grid, including the upper boundary
};

// Marks every cell that contains at least one point with `label` (flooring
// convention). Points on the upper grid boundary or outside are dropped and
// counted.
VoxelizeResult voxelize_points(const PointCloud& cloud, const GridSpec& spec, int label,
                               int class_count = 0);

// One point per occupied cell, at the cell center, grouped per class id in
// ascending order. Cells whose centers fall outside `bounds` are skipped.
std::vector<PointCloud> grid_to_centers(const SemanticVoxelGrid& grid,
                                        const std::optional<SceneBounds>& bounds = std::nullopt);

// Centers of all occupied cells regardless of class.
PointCloud occupied_centers(const SemanticVoxelGrid& grid,
                            const std::optional<SceneBounds>& bounds = std::nullopt);

// Integer-factor resolution change. Upsampling replicates labels; downsampling
// takes the majority non-free child label, ties broken toward the smallest
// class id. The factor between the two voxel sizes must be an integer.
SemanticVoxelGrid resample(const SemanticVoxelGrid& grid, double target_voxel_size);

// Sub-grid covering `bounds`, snapped outward to the grid lattice. Throws if
// the bounds do not intersect the grid.
SemanticVoxelGrid crop(const SemanticVoxelGrid& grid, const SceneBounds& bounds);

// Coarse map combined with high-resolution object clouds.
struct AdaptiveMap {
  struct Object {
    PointCloud cloud;
    OrientedBox3 box;
  };
  SemanticVoxelGrid coarse;
  std::vector<Object> objects;

  // Enforces the structural invariants: coarse voxel size above the
  // high-resolution threshold (0.2 m) and non-empty object clouds.
  void validate() const;
};

// Projects the coarse grid onto `target_spec`, then writes each object cloud's
// voxelization over it, in list order. Coarse content outside object cells is
// never removed.
SemanticVoxelGrid fuse(const SemanticVoxelGrid& coarse, const std::vector<PointCloud>& objects,
                       const GridSpec& target_spec);

struct MemoryStats {
  std::size_t cell_count = 0;
  std::size_t occupied_count = 0;
  std::size_t point_count = 0;
  std::size_t bytes_estimate = 0;  // cells * 1 + points * 12
};

MemoryStats memory_stats(const SemanticVoxelGrid& grid);
MemoryStats memory_stats(const AdaptiveMap& map);

}  // namespace adaocc
