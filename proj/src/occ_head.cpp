#include "adaocc/occ_head.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adaocc {

OccupancyHead::OccupancyHead(const OccHeadConfig& cfg, Rng& rng) : config(cfg) {
  if (cfg.feature_dim < 1 || cfg.hidden_dim < 1 || cfg.class_count < 1)
    throw std::invalid_argument("occupancy head dimensions must be positive");
  net = Mlp({input_dim(), cfg.hidden_dim, cfg.class_count + 1}, rng);
}

Eigen::MatrixXd OccupancyHead::logits(const Eigen::MatrixXd& features) const {
  if (features.cols() != input_dim())
    throw std::invalid_argument("feature width does not match head input");
  return net.forward(features);
}

namespace {

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = (z.colwise() - z.rowwise().maxCoeff()).array().exp();
  return p.array().colwise() / p.rowwise().sum().array();
}

}  // namespace

Eigen::MatrixXd OccupancyHead::probabilities(const Eigen::MatrixXd& features) const {
  return row_softmax(logits(features));
}

std::vector<std::uint8_t> OccupancyHead::predict(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd z = logits(features);
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(z.rows()));
  for (int r = 0; r < z.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < z.cols(); ++c) {
      if (z(r, c) > z(r, best)) best = c;  // strict: ties keep the smaller id
    }
    labels[static_cast<std::size_t>(r)] = static_cast<std::uint8_t>(best);
  }
  return labels;
}

Eigen::MatrixXd stack_voxel_features(const FeatureVolume& vol) {
  const std::size_t n = vol.spec.cell_count();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), vol.channels);
  for (std::size_t cell = 0; cell < n; ++cell)
    for (int c = 0; c < vol.channels; ++c)
      rows(static_cast<Eigen::Index>(cell), c) =
          vol.data[cell * static_cast<std::size_t>(vol.channels) + static_cast<std::size_t>(c)];
  return rows;
}

Eigen::MatrixXd stack_voxel_features(const FeatureVolume& prev, const FeatureVolume& cur) {
  if (!(prev.spec == cur.spec) || prev.channels != cur.channels)
    throw std::invalid_argument("frame volumes must share grid and channel count");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(cur.spec.cell_count()), 2 * cur.channels);
  rows.leftCols(prev.channels) = stack_voxel_features(prev);
  rows.rightCols(cur.channels) = stack_voxel_features(cur);
  return rows;
}

SemanticVoxelGrid predict_grid(const OccupancyHead& head, const Eigen::MatrixXd& features,
                               const GridSpec& spec) {
  if (static_cast<std::size_t>(features.rows()) != spec.cell_count())
    throw std::invalid_argument("feature row count does not match grid");
  SemanticVoxelGrid grid(spec, head.config.class_count);
  grid.labels = head.predict(features);
  return grid;
}

namespace {

// Mean focal loss of a row batch and its gradient, accumulated into `grads`.
double focal_batch(const OccupancyHead& head, const Eigen::MatrixXd& X,
                   const std::vector<std::uint8_t>& y, Mlp::Grads& grads) {
  const double alpha = head.config.focal.alpha;
  const double beta = head.config.focal.beta;
  const int n_classes = head.config.class_count + 1;
  const Eigen::Index bn = X.rows();

  Mlp::Cache cache;
  const Eigen::MatrixXd z = head.net.forward_cached(X, cache);
  const Eigen::MatrixXd p = row_softmax(z);

  // d(focal)/dlogit_j = d(focal)/dp_y * p_y * (1[j == y] - p_j)
  double loss = 0.0;
  Eigen::MatrixXd dz(bn, n_classes);
  for (Eigen::Index r = 0; r < bn; ++r) {
    const int target = y[static_cast<std::size_t>(r)];
    const double py = std::max(p(r, target), 1e-12);
    const double one_m = 1.0 - py;
    loss -= alpha * std::pow(one_m, beta) * std::log(py);
    double dpy = -std::pow(one_m, beta) / py;
    if (beta != 0.0 && one_m > 0.0) dpy += beta * std::pow(one_m, beta - 1.0) * std::log(py);
    dpy *= alpha;
    for (int c = 0; c < n_classes; ++c) {
      dz(r, c) = dpy * p(r, target) * ((c == target ? 1.0 : 0.0) - p(r, c));
    }
  }
  dz /= static_cast<double>(bn);
  head.net.backward(cache, dz, grads);
  return loss / static_cast<double>(bn);
}

void check_labels(const OccupancyHead& head, const Eigen::MatrixXd& features,
                  const std::vector<std::uint8_t>& labels) {
  if (features.rows() == 0) throw std::invalid_argument("no labeled voxels");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw std::invalid_argument("label count does not match feature rows");
  const int n_classes = head.config.class_count + 1;
  for (std::uint8_t l : labels)
    if (l >= n_classes) throw std::invalid_argument("label out of range");
}

}  // namespace

double occ_gradients(const OccupancyHead& head, const Eigen::MatrixXd& features,
                     const std::vector<std::uint8_t>& labels, Mlp::Grads& grads) {
  check_labels(head, features, labels);
  head.config.focal.validate();
  return focal_batch(head, features, labels, grads);
}

TrainCurve train_occ_head(OccupancyHead& head, const Eigen::MatrixXd& features,
                          const std::vector<std::uint8_t>& labels, const TrainConfig& cfg) {
  check_labels(head, features, labels);
  head.config.focal.validate();

  Rng rng(cfg.seed);
  Optimizer opt(head.net, cfg);
  Mlp::Grads grads(head.net);

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainCurve curve;
  curve.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = rng.fork(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const Eigen::Index bn = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd X(bn, features.cols());
      std::vector<std::uint8_t> y(static_cast<std::size_t>(bn));
      for (Eigen::Index r = 0; r < bn; ++r) {
        X.row(r) = features.row(static_cast<Eigen::Index>(order[start + r]));
        y[static_cast<std::size_t>(r)] = labels[order[start + r]];
      }
      grads.set_zero();
      epoch_loss += focal_batch(head, X, y, grads) * static_cast<double>(bn);
      opt.step(head.net, grads);
    }
    const double mean_loss = epoch_loss / static_cast<double>(labels.size());
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    curve.epoch_loss.push_back(mean_loss);
  }
  return curve;
}

double label_accuracy(const std::vector<std::uint8_t>& predicted,
                      const std::vector<std::uint8_t>& reference) {
  if (predicted.empty() || predicted.size() != reference.size())
    throw std::invalid_argument("label vectors must be non-empty and equally sized");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == reference[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace adaocc
