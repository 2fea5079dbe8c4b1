#pragma once

#include <string>
#include <vector>

#include "adaocc/geometry.hpp"

namespace adaocc {

// Dense per-voxel feature field. Values live at voxel centers and are
// interpolated between them. Storage is x-fastest with channels innermost:
// data[((k*ny + j)*nx + i)*channels + c].
struct FeatureVolume {
  GridSpec spec;
  int channels = 0;
  std::vector<float> data;

  FeatureVolume() = default;
  FeatureVolume(const GridSpec& spec, int channels);

  float at(int i, int j, int k, int c) const {
    return data[spec.linear_index(i, j, k) * static_cast<std::size_t>(channels) +
                static_cast<std::size_t>(c)];
  }
  float& at(int i, int j, int k, int c) {
    return data[spec.linear_index(i, j, k) * static_cast<std::size_t>(channels) +
                static_cast<std::size_t>(c)];
  }

  // World-space extent of the volume (closed box). Queries outside throw.
  bool contains(const Vec3& p) const;
};

enum class InterpMode { kTrilinear, kTricubic };

// All-channel interpolation at a world point. Coordinates between the outer
// voxel centers and the volume face clamp to the edge value; points outside
// the volume extent throw.
Eigen::VectorXd sample_trilinear(const FeatureVolume& vol, const Vec3& p);

// Catmull-Rom cubic in each axis, stencil clamped at the edges.
Eigen::VectorXd sample_tricubic(const FeatureVolume& vol, const Vec3& p);

Eigen::VectorXd sample(const FeatureVolume& vol, const Vec3& p, InterpMode mode);

enum class PoolingMode { kMax, kAvg, kGlobalMax, kGlobalMean };

PoolingMode parse_pooling_mode(const std::string& name);
std::string pooling_mode_name(PoolingMode mode);

struct PoolingConfig {
  PoolingMode mode = PoolingMode::kMax;
  InterpMode interp = InterpMode::kTricubic;
  int n_per_axis = 5;
};

// Samples the volume on a regular lattice spanning the oriented box and
// reduces across the lattice. Lattice points outside the volume are skipped;
// if every point is outside, throws. kMax / kAvg reduce per channel;
// kGlobalMax / kGlobalMean reduce over channels as well and replicate the
// scalar across the output vector.
Eigen::VectorXd pool_box_features(const FeatureVolume& vol, const OrientedBox3& box,
                                  const PoolingConfig& cfg);

}  // namespace adaocc
