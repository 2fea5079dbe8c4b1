#pragma once

#include <cstddef>
#include <vector>

#include "adaocc/geometry.hpp"

namespace adaocc {

struct FocalConfig {
  double alpha = 0.25;  // in (0, 1]
  double beta = 2.0;    // >= 0

  void validate() const;
};

// Focal loss over per-voxel true-class probabilities:
//   L = -alpha * sum_v (1 - p_v)^beta * log(p_v)
// Probabilities must be in (0, 1]; log arguments are clamped at 1e-12.
double focal_loss(const std::vector<double>& p_true, const FocalConfig& cfg);

// dL/dp_v for each voxel.
std::vector<double> focal_loss_grad(const std::vector<double>& p_true, const FocalConfig& cfg);

// Mean over boxes of the summed absolute difference of the 10 box parameters
// (center, quaternion, size).
double l1_box_loss(const std::vector<BoxParams>& pred, const std::vector<BoxParams>& gt);

// dL/dpred for each box; subgradient 0 at exact component ties.
std::vector<BoxParams> l1_box_loss_grad(const std::vector<BoxParams>& pred,
                                        const std::vector<BoxParams>& gt);

// The two directed sums of squared nearest-neighbor distances.
struct ChamferParts {
  double x_to_y = 0.0;
  double y_to_x = 0.0;
};

ChamferParts chamfer_parts(const std::vector<Vec3>& x, const std::vector<Vec3>& y);

// Symmetric squared-distance chamfer:
//   L = sum_x min_y |x-y|^2 + sum_y min_x |y-x|^2
double chamfer_loss(const std::vector<Vec3>& x, const std::vector<Vec3>& y);

// Per-point average of each directed sum; comparable across cloud sizes.
double chamfer_normalized(const std::vector<Vec3>& x, const std::vector<Vec3>& y);

// Loss plus its gradient with respect to the first cloud, holding nearest
// neighbor assignments fixed:
//   dL/dx = 2 (x - nn_y(x)) + sum_{y : nn_x(y) = x} 2 (x - y)
double chamfer_loss_grad(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                         std::vector<Vec3>& grad_x);

struct JointLossWeights {
  double w_sem = 1.0;
  double w_det = 1.0;
  double w_surf = 1.0;

  void validate() const;  // all >= 0, not all zero
};

// Weighted sum of the three task losses.
double joint_loss(double sem, double det, double surf, const JointLossWeights& w);

}  // namespace adaocc
