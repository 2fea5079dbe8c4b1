#pragma once

#include <cstdint>
#include <vector>

#include "adaocc/feature_volume.hpp"
#include "adaocc/folding.hpp"
#include "adaocc/losses.hpp"
#include "adaocc/mlp.hpp"
#include "adaocc/voxel.hpp"

namespace adaocc {

struct OccHeadConfig {
  int feature_dim = 32;  // channels per input frame
  bool temporal = true;  // consume [previous, current] frame features
  int hidden_dim = 64;
  int class_count = 12;  // semantic classes; logits add one free slot
  FocalConfig focal;
};

// Pointwise classifier mapping per-voxel features to semantic labels
// (0 = free). Every voxel goes through the same small network.
class OccupancyHead {
 public:
  OccupancyHead() = default;
  OccupancyHead(const OccHeadConfig& cfg, Rng& rng);

  int input_dim() const { return config.temporal ? 2 * config.feature_dim : config.feature_dim; }

  Eigen::MatrixXd logits(const Eigen::MatrixXd& features) const;

  // Row-wise softmax of the logits.
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& features) const;

  // Argmax labels; equal scores resolve to the smaller class id.
  std::vector<std::uint8_t> predict(const Eigen::MatrixXd& features) const;

  OccHeadConfig config;
  Mlp net;
};

// Per-voxel feature rows in x-fastest cell order.
Eigen::MatrixXd stack_voxel_features(const FeatureVolume& vol);

// Two aligned frames concatenated per voxel, previous frame first. The
// volumes must share a grid.
Eigen::MatrixXd stack_voxel_features(const FeatureVolume& prev, const FeatureVolume& cur);

// Runs the head over feature rows and shapes the labels into a grid.
SemanticVoxelGrid predict_grid(const OccupancyHead& head, const Eigen::MatrixXd& features,
                               const GridSpec& spec);

// Mean focal loss over the labeled rows plus its parameter gradients,
// accumulated into `grads`. Returns the loss.
double occ_gradients(const OccupancyHead& head, const Eigen::MatrixXd& features,
                     const std::vector<std::uint8_t>& labels, Mlp::Grads& grads);

// Focal-loss training on (feature row, label) pairs. Returns the mean
// per-voxel loss per epoch.
TrainCurve train_occ_head(OccupancyHead& head, const Eigen::MatrixXd& features,
                          const std::vector<std::uint8_t>& labels, const TrainConfig& cfg);

double label_accuracy(const std::vector<std::uint8_t>& predicted,
                      const std::vector<std::uint8_t>& reference);

}  // namespace adaocc
