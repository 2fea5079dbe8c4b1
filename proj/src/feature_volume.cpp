#include "adaocc/feature_volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adaocc {

FeatureVolume::FeatureVolume(const GridSpec& spec_in, int channels_in)
    : spec(spec_in), channels(channels_in) {
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  data.assign(spec.cell_count() * static_cast<std::size_t>(channels), 0.0f);
}

bool FeatureVolume::contains(const Vec3& p) const {
  const Vec3 hi = spec.origin + spec.voxel_size * spec.dims.cast<double>();
  return p.x() >= spec.origin.x() && p.y() >= spec.origin.y() && p.z() >= spec.origin.z() &&
         p.x() <= hi.x() && p.y() <= hi.y() && p.z() <= hi.z();
}

namespace {

// Continuous node coordinates: voxel centers sit at integer positions
// 0..n-1. The outer half-voxel band clamps to the edge node.
Vec3 node_coords(const FeatureVolume& vol, const Vec3& p) {
  if (!vol.contains(p)) throw std::invalid_argument("sample point outside feature volume");
  Vec3 u = (p - vol.spec.origin) / vol.spec.voxel_size - Vec3::Constant(0.5);
  for (int a = 0; a < 3; ++a) {
    u[a] = std::clamp(u[a], 0.0, static_cast<double>(vol.spec.dims[a] - 1));
  }
  return u;
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Catmull-Rom basis at parameter t in [0, 1] for nodes i-1, i, i+1, i+2.
void catmull_rom_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

}  // namespace

Eigen::VectorXd sample_trilinear(const FeatureVolume& vol, const Vec3& p) {
  const Vec3 u = node_coords(vol, p);
  int i0[3], i1[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const int n = vol.spec.dims[a];
    i0[a] = clamp_index(static_cast<int>(std::floor(u[a])), n);
    i1[a] = clamp_index(i0[a] + 1, n);
    t[a] = u[a] - static_cast<double>(i0[a]);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(vol.channels);
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) *
                         (dz ? t[2] : 1.0 - t[2]);
        if (w == 0.0) continue;
        const int i = dx ? i1[0] : i0[0];
        const int j = dy ? i1[1] : i0[1];
        const int k = dz ? i1[2] : i0[2];
        for (int c = 0; c < vol.channels; ++c) out[c] += w * vol.at(i, j, k, c);
      }
  return out;
}

Eigen::VectorXd sample_tricubic(const FeatureVolume& vol, const Vec3& p) {
  const Vec3 u = node_coords(vol, p);
  int base[3];
  double w[3][4];
  for (int a = 0; a < 3; ++a) {
    const int n = vol.spec.dims[a];
    base[a] = clamp_index(static_cast<int>(std::floor(u[a])), n);
    catmull_rom_weights(u[a] - static_cast<double>(base[a]), w[a]);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(vol.channels);
  for (int dz = 0; dz < 4; ++dz) {
    const int k = clamp_index(base[2] + dz - 1, vol.spec.dims.z());
    for (int dy = 0; dy < 4; ++dy) {
      const int j = clamp_index(base[1] + dy - 1, vol.spec.dims.y());
      const double wyz = w[1][dy] * w[2][dz];
      if (wyz == 0.0) continue;
      for (int dx = 0; dx < 4; ++dx) {
        const int i = clamp_index(base[0] + dx - 1, vol.spec.dims.x());
        const double weight = w[0][dx] * wyz;
        if (weight == 0.0) continue;
        for (int c = 0; c < vol.channels; ++c) out[c] += weight * vol.at(i, j, k, c);
      }
    }
  }
  return out;
}

Eigen::VectorXd sample(const FeatureVolume& vol, const Vec3& p, InterpMode mode) {
  return mode == InterpMode::kTrilinear ? sample_trilinear(vol, p) : sample_tricubic(vol, p);
}

PoolingMode parse_pooling_mode(const std::string& name) {
  if (name == "max") return PoolingMode::kMax;
  if (name == "avg") return PoolingMode::kAvg;
  if (name == "global_max") return PoolingMode::kGlobalMax;
  if (name == "global_mean") return PoolingMode::kGlobalMean;
  throw std::invalid_argument("unknown pooling mode: " + name);
}

std::string pooling_mode_name(PoolingMode mode) {
  switch (mode) {
    case PoolingMode::kMax: return "max";
    case PoolingMode::kAvg: return "avg";
    case PoolingMode::kGlobalMax: return "global_max";
    case PoolingMode::kGlobalMean: return "global_mean";
  }
  throw std::invalid_argument("unknown pooling mode");
}

Eigen::VectorXd pool_box_features(const FeatureVolume& vol, const OrientedBox3& box,
                                  const PoolingConfig& cfg) {
  const std::vector<Vec3> lattice = box_sampling_grid(box, cfg.n_per_axis);
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(lattice.size());
  for (const Vec3& p : lattice) {
    if (!vol.contains(p)) continue;
    samples.push_back(sample(vol, p, cfg.interp));
  }
  if (samples.empty()) throw std::invalid_argument("box outside feature volume");

  const int C = vol.channels;
  Eigen::VectorXd out(C);
  switch (cfg.mode) {
    case PoolingMode::kMax: {
      out.setConstant(-std::numeric_limits<double>::infinity());
      for (const auto& s : samples) out = out.cwiseMax(s);
      break;
    }
    case PoolingMode::kAvg: {
      out.setZero();
      for (const auto& s : samples) out += s;
      out /= static_cast<double>(samples.size());
      break;
    }
    case PoolingMode::kGlobalMax: {
      double m = -std::numeric_limits<double>::infinity();
      for (const auto& s : samples) m = std::max(m, s.maxCoeff());
      out.setConstant(m);
      break;
    }
    case PoolingMode::kGlobalMean: {
      double total = 0.0;
      for (const auto& s : samples) total += s.sum();
      out.setConstant(total / static_cast<double>(samples.size() * static_cast<std::size_t>(C)));
      break;
    }
  }
  return out;
}

}  // namespace adaocc
