#pragma once

#include <vector>

#include "adaocc/geometry.hpp"
#include "adaocc/mlp.hpp"
#include "adaocc/voxel.hpp"

namespace adaocc {

// Near-square 2D lattice with k points, coordinates in [-1, 1] per axis,
// emitted row-major. Rows x columns is the smallest of (a, a), (a, a+1),
// (a+1, a+1) holding at least k points, a = floor(sqrt(k)); spare lattice
// points past k are dropped.
Eigen::MatrixXd make_grid2d(int k);

struct FoldingConfig {
  int code_dim = 32;
  int hidden_dim = 64;
  int grid_points = 2500;  // lattice size used during training
};

// Two-stage decoder that bends a 2D lattice into an object surface. Stage 1
// maps (code, lattice uv) to a first 3D guess; stage 2 refines it from
// (code, point). Outputs live in the normalized object frame where the box
// half-extents are 1.
class FoldingDecoder {
 public:
  FoldingDecoder() = default;
  FoldingDecoder(const FoldingConfig& cfg, Rng& rng);

  // k x 3 matrix of points in the normalized frame.
  Eigen::MatrixXd decode(const Eigen::VectorXd& code, int k) const;

  // Decoded points scaled by the box half-extents and posed into the world.
  PointCloud decode_world(const Eigen::VectorXd& code, int k, const OrientedBox3& box) const;

  FoldingConfig config;
  Mlp stage1;  // (code_dim + 2) -> hidden -> hidden -> 3
  Mlp stage2;  // (code_dim + 3) -> hidden -> hidden -> 3
};

struct FoldingSample {
  Eigen::VectorXd code;
  std::vector<Vec3> target;  // normalized object frame
};

// Chamfer loss of one decoded lattice against `target` plus its analytic
// gradients, nearest-neighbor assignments held fixed: parameter gradients are
// accumulated into g1/g2 and the code gradient (through both stages) into
// dcode. Returns the loss.
double fold_gradients(const FoldingDecoder& decoder, const Eigen::VectorXd& code, int k,
                      const std::vector<Vec3>& target, Mlp::Grads& g1, Mlp::Grads& g2,
                      Eigen::VectorXd& dcode);

struct TrainCurve {
  std::vector<double> epoch_loss;  // mean per-sample loss, one entry per epoch
};

// Minimizes the symmetric squared chamfer distance between decoded lattices
// and the sample targets. Nearest-neighbor assignments are held fixed while
// differentiating each batch.
TrainCurve train_folding(FoldingDecoder& decoder, const std::vector<FoldingSample>& samples,
                         const TrainConfig& cfg);

}  // namespace adaocc
