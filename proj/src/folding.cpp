#include "adaocc/folding.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "adaocc/losses.hpp"
#include "adaocc/parallel.hpp"

namespace adaocc {

Eigen::MatrixXd make_grid2d(int k) {
  if (k < 1) throw std::invalid_argument("lattice needs at least one point");
  const int a = static_cast<int>(std::floor(std::sqrt(static_cast<double>(k))));
  int rows = a, cols = a;
  if (a * a < k) {
    if (a * (a + 1) >= k) {
      cols = a + 1;
    } else {
      rows = a + 1;
      cols = a + 1;
    }
  }
  auto coord = [](int i, int n) {
    return n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  Eigen::MatrixXd grid(k, 2);
  int idx = 0;
  for (int r = 0; r < rows && idx < k; ++r)
    for (int c = 0; c < cols && idx < k; ++c) {
      grid(idx, 0) = coord(r, rows);
      grid(idx, 1) = coord(c, cols);
      ++idx;
    }
  return grid;
}

FoldingDecoder::FoldingDecoder(const FoldingConfig& cfg, Rng& rng) : config(cfg) {
  if (cfg.code_dim < 1 || cfg.hidden_dim < 1 || cfg.grid_points < 1)
    throw std::invalid_argument("folding dimensions must be positive");
  stage1 = Mlp({cfg.code_dim + 2, cfg.hidden_dim, cfg.hidden_dim, 3}, rng);
  stage2 = Mlp({cfg.code_dim + 3, cfg.hidden_dim, cfg.hidden_dim, 3}, rng);
}

namespace {

// Rows are [code, extra] for every lattice point.
Eigen::MatrixXd with_code(const Eigen::VectorXd& code, const Eigen::MatrixXd& extra) {
  Eigen::MatrixXd X(extra.rows(), code.size() + extra.cols());
  X.leftCols(code.size()) = code.transpose().replicate(extra.rows(), 1);
  X.rightCols(extra.cols()) = extra;
  return X;
}

}  // namespace

Eigen::MatrixXd FoldingDecoder::decode(const Eigen::VectorXd& code, int k) const {
  if (code.size() != config.code_dim) throw std::invalid_argument("code dimension mismatch");
  const Eigen::MatrixXd grid = make_grid2d(k);
  const Eigen::MatrixXd p1 = stage1.forward(with_code(code, grid));
  return stage2.forward(with_code(code, p1));
}

PointCloud FoldingDecoder::decode_world(const Eigen::VectorXd& code, int k,
                                        const OrientedBox3& box) const {
  const Eigen::MatrixXd local = decode(code, k);
  const Vec3 half = box.half_size();
  PointCloud out;
  out.class_id = box.class_id;
  out.points.reserve(static_cast<std::size_t>(k));
  for (int r = 0; r < local.rows(); ++r) {
    const Vec3 scaled = local.row(r).transpose().cwiseProduct(half);
    out.points.push_back(box.pose.transform_point(scaled));
  }
  return out;
}

double fold_gradients(const FoldingDecoder& decoder, const Eigen::VectorXd& code, int k,
                      const std::vector<Vec3>& target, Mlp::Grads& g1, Mlp::Grads& g2,
                      Eigen::VectorXd& dcode) {
  if (code.size() != decoder.config.code_dim) throw std::invalid_argument("code dimension mismatch");
  if (target.empty()) throw std::invalid_argument("target cloud is empty");
  const Eigen::MatrixXd grid = make_grid2d(k);
  const int cdim = decoder.config.code_dim;

  Mlp::Cache c1, c2;
  const Eigen::MatrixXd p1 = decoder.stage1.forward_cached(with_code(code, grid), c1);
  const Eigen::MatrixXd p2 = decoder.stage2.forward_cached(with_code(code, p1), c2);

  std::vector<Vec3> decoded(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) decoded[static_cast<std::size_t>(r)] = p2.row(r).transpose();
  std::vector<Vec3> grad_pts;
  const double loss = chamfer_loss_grad(decoded, target, grad_pts);

  Eigen::MatrixXd d2(k, 3);
  for (int r = 0; r < k; ++r) d2.row(r) = grad_pts[static_cast<std::size_t>(r)].transpose();
  const Eigen::MatrixXd dX2 = decoder.stage2.backward(c2, d2, g2);
  const Eigen::MatrixXd dX1 = decoder.stage1.backward(c1, dX2.rightCols(3), g1);

  dcode = dX2.leftCols(cdim).colwise().sum().transpose() +
          dX1.leftCols(cdim).colwise().sum().transpose();
  return loss;
}

TrainCurve train_folding(FoldingDecoder& decoder, const std::vector<FoldingSample>& samples,
                         const TrainConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("no folding samples");
  for (const FoldingSample& s : samples) {
    if (s.code.size() != decoder.config.code_dim)
      throw std::invalid_argument("sample code dimension mismatch");
    if (s.target.empty()) throw std::invalid_argument("sample target cloud is empty");
  }

  const int k = decoder.config.grid_points;
  const Eigen::MatrixXd grid = make_grid2d(k);
  const int cdim = decoder.config.code_dim;

  Rng rng(cfg.seed);
  Optimizer opt1(decoder.stage1, cfg);
  Optimizer opt2(decoder.stage2, cfg);
  Mlp::Grads g1(decoder.stage1), g2(decoder.stage2);

  TrainCurve curve;
  curve.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Per-sample scratch so batch members can run in parallel; gradients are
  // accumulated serially in index order to keep sums byte-deterministic
  // whatever the worker count.
  const std::size_t max_batch = std::min<std::size_t>(samples.size(), cfg.batch_size);
  std::vector<Mlp::Grads> sg1(max_batch, Mlp::Grads(decoder.stage1));
  std::vector<Mlp::Grads> sg2(max_batch, Mlp::Grads(decoder.stage2));
  std::vector<double> sample_loss(max_batch, 0.0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = rng.fork(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);

      parallel_for(stop - start, [&](std::size_t s) {
        const FoldingSample& sample = samples[order[start + s]];
        sg1[s].set_zero();
        sg2[s].set_zero();
        Mlp::Cache c1, c2;
        const Eigen::MatrixXd p1 =
            decoder.stage1.forward_cached(with_code(sample.code, grid), c1);
        const Eigen::MatrixXd p2 =
            decoder.stage2.forward_cached(with_code(sample.code, p1), c2);

        std::vector<Vec3> decoded(static_cast<std::size_t>(k));
        std::vector<Vec3> grad_pts;
        for (int r = 0; r < k; ++r) decoded[static_cast<std::size_t>(r)] = p2.row(r).transpose();
        sample_loss[s] = chamfer_loss_grad(decoded, sample.target, grad_pts);

        Eigen::MatrixXd d2(k, 3);
        for (int r = 0; r < k; ++r) d2.row(r) = grad_pts[static_cast<std::size_t>(r)].transpose();
        const Eigen::MatrixXd dX2 = decoder.stage2.backward(c2, d2, sg2[s]);
        // The code columns are fixed inputs; only the point part flows back.
        decoder.stage1.backward(c1, dX2.rightCols(3), sg1[s]);
      });

      g1.set_zero();
      g2.set_zero();
      for (std::size_t s = 0; s < stop - start; ++s) {
        epoch_loss += sample_loss[s];
        for (std::size_t l = 0; l < g1.dW.size(); ++l) {
          g1.dW[l] += sg1[s].dW[l];
          g1.db[l] += sg1[s].db[l];
        }
        for (std::size_t l = 0; l < g2.dW.size(); ++l) {
          g2.dW[l] += sg2[s].dW[l];
          g2.db[l] += sg2[s].db[l];
        }
      }

      const double inv = 1.0 / static_cast<double>(stop - start);
      g1.scale(inv);
      g2.scale(inv);
      opt1.step(decoder.stage1, g1);
      opt2.step(decoder.stage2, g2);
    }
    const double mean_loss = epoch_loss / static_cast<double>(samples.size());
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    curve.epoch_loss.push_back(mean_loss);
  }
  return curve;
}

}  // namespace adaocc
