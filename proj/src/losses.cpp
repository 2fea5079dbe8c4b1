#include "adaocc/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "adaocc/kdtree.hpp"

namespace adaocc {

namespace {
constexpr double kLogClamp = 1e-12;

void check_probs(const std::vector<double>& p) {
  for (double v : p) {
    if (!(v > 0.0) || v > 1.0) throw std::invalid_argument("probabilities must be in (0, 1]");
  }
}
}  // namespace

void FocalConfig::validate() const {
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must be in (0, 1]");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
}

double focal_loss(const std::vector<double>& p_true, const FocalConfig& cfg) {
  cfg.validate();
  check_probs(p_true);
  double loss = 0.0;
  for (double p : p_true) {
    loss -= cfg.alpha * std::pow(1.0 - p, cfg.beta) * std::log(std::max(p, kLogClamp));
  }
  return loss;
}

std::vector<double> focal_loss_grad(const std::vector<double>& p_true, const FocalConfig& cfg) {
  cfg.validate();
  check_probs(p_true);
  std::vector<double> grad(p_true.size());
  for (std::size_t i = 0; i < p_true.size(); ++i) {
    const double p = p_true[i];
    const double one_m = 1.0 - p;
    const double logp = std::log(std::max(p, kLogClamp));
    // d/dp [-(1-p)^b log p] = b (1-p)^(b-1) log p - (1-p)^b / p
    double d = -std::pow(one_m, cfg.beta) / p;
    if (cfg.beta != 0.0 && one_m > 0.0) d += cfg.beta * std::pow(one_m, cfg.beta - 1.0) * logp;
    grad[i] = cfg.alpha * d;
  }
  return grad;
}

double l1_box_loss(const std::vector<BoxParams>& pred, const std::vector<BoxParams>& gt) {
  if (pred.empty() || pred.size() != gt.size())
    throw std::invalid_argument("box lists must be non-empty and equally sized");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    total += (pred[i] - gt[i]).cwiseAbs().sum();
  }
  return total / static_cast<double>(pred.size());
}

std::vector<BoxParams> l1_box_loss_grad(const std::vector<BoxParams>& pred,
                                        const std::vector<BoxParams>& gt) {
  if (pred.empty() || pred.size() != gt.size())
    throw std::invalid_argument("box lists must be non-empty and equally sized");
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  std::vector<BoxParams> grad(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const BoxParams d = pred[i] - gt[i];
    for (int a = 0; a < 10; ++a) {
      grad[i][a] = d[a] > 0.0 ? inv_n : (d[a] < 0.0 ? -inv_n : 0.0);
    }
  }
  return grad;
}

ChamferParts chamfer_parts(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("chamfer clouds must be non-empty");
  const KdTree3 ty(y);
  const KdTree3 tx(x);
  ChamferParts parts;
  for (const Vec3& p : x) parts.x_to_y += ty.nearest(p).squared_distance;
  for (const Vec3& q : y) parts.y_to_x += tx.nearest(q).squared_distance;
  return parts;
}

double chamfer_loss(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  const ChamferParts parts = chamfer_parts(x, y);
  return parts.x_to_y + parts.y_to_x;
}

double chamfer_normalized(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  const ChamferParts parts = chamfer_parts(x, y);
  return parts.x_to_y / static_cast<double>(x.size()) +
         parts.y_to_x / static_cast<double>(y.size());
}

double chamfer_loss_grad(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                         std::vector<Vec3>& grad_x) {
  if (x.empty() || y.empty()) throw std::invalid_argument("chamfer clouds must be non-empty");
  const KdTree3 ty(y);
  const KdTree3 tx(x);
  grad_x.assign(x.size(), Vec3::Zero());
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto hit = ty.nearest(x[i]);
    loss += hit.squared_distance;
    grad_x[i] += 2.0 * (x[i] - y[hit.index]);
  }
  for (const Vec3& q : y) {
    const auto hit = tx.nearest(q);
    loss += hit.squared_distance;
    grad_x[hit.index] += 2.0 * (x[hit.index] - q);
  }
  return loss;
}

void JointLossWeights::validate() const {
  if (!(w_sem >= 0.0) || !(w_det >= 0.0) || !(w_surf >= 0.0))
    throw std::invalid_argument("loss weights must be >= 0");
  if (w_sem == 0.0 && w_det == 0.0 && w_surf == 0.0)
    throw std::invalid_argument("loss weights must not all be zero");
}

double joint_loss(double sem, double det, double surf, const JointLossWeights& w) {
  w.validate();
  if (!std::isfinite(sem) || !std::isfinite(det) || !std::isfinite(surf))
    throw std::invalid_argument("loss terms must be finite");
  return w.w_sem * sem + w.w_det * det + w.w_surf * surf;
}

}  // namespace adaocc
