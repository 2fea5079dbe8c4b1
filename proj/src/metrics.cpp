#include "adaocc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "adaocc/kdtree.hpp"

namespace adaocc {

double iou(const SemanticVoxelGrid& pred, const SemanticVoxelGrid& gt) {
  if (!(pred.spec == gt.spec)) throw std::invalid_argument("grid specs differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const bool a = pred.labels[i] != 0;
    const bool b = gt.labels[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MiouResult miou(const SemanticVoxelGrid& pred, const SemanticVoxelGrid& gt,
                const std::vector<int>& classes) {
  if (!(pred.spec == gt.spec)) throw std::invalid_argument("grid specs differ");
  if (classes.empty()) throw std::invalid_argument("class list is empty");
  MiouResult result;
  double total = 0.0;
  for (int c : classes) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
      const bool a = pred.labels[i] == c;
      const bool b = gt.labels[i] == c;
      inter += a && b;
      uni += a || b;
    }
    if (uni == 0) continue;  // class absent from both grids
    const double v = static_cast<double>(inter) / static_cast<double>(uni);
    result.per_class[c] = v;
    total += v;
  }
  result.miou =
      result.per_class.empty() ? 1.0 : total / static_cast<double>(result.per_class.size());
  return result;
}

double hausdorff(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("hausdorff sets must be non-empty");
  const KdTree3 tx(x);
  const KdTree3 ty(y);
  double worst = 0.0;
  for (const Vec3& p : x) worst = std::max(worst, ty.nearest(p).squared_distance);
  for (const Vec3& q : y) worst = std::max(worst, tx.nearest(q).squared_distance);
  return std::sqrt(worst);
}

std::vector<int> hungarian_assign(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
  if (rows > cols) {
    // Solve the transposed problem and invert the assignment.
    const std::vector<int> col_to_row = hungarian_assign(cost.transpose());
    std::vector<int> row_to_col(static_cast<std::size_t>(rows), -1);
    for (int c = 0; c < cols; ++c)
      if (col_to_row[static_cast<std::size_t>(c)] >= 0)
        row_to_col[static_cast<std::size_t>(col_to_row[static_cast<std::size_t>(c)])] = c;
    return row_to_col;
  }

  // Potentials method, 1-based arrays; p[j] is the row matched to column j.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(rows) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(cols) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(cols) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(cols) + 1, 0);
  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(cols) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(cols) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(rows), -1);
  for (int j = 1; j <= cols; ++j)
    if (p[static_cast<std::size_t>(j)] != 0)
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

MatchResult match_objects(const std::vector<OrientedBox3>& pred,
                          const std::vector<OrientedBox3>& gt, double max_center_distance) {
  MatchResult result;
  if (pred.empty() || gt.empty()) {
    for (int i = 0; i < static_cast<int>(pred.size()); ++i) result.unmatched_pred.push_back(i);
    for (int j = 0; j < static_cast<int>(gt.size()); ++j) result.unmatched_gt.push_back(j);
    return result;
  }
  Eigen::MatrixXd cost(pred.size(), gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < gt.size(); ++j)
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (pred[i].pose.translation - gt[j].pose.translation).norm();

  const std::vector<int> assign = hungarian_assign(cost);
  std::vector<char> gt_used(gt.size(), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int j = assign[i];
    if (j >= 0 && cost(static_cast<Eigen::Index>(i), j) <= max_center_distance) {
      result.pairs.emplace_back(static_cast<int>(i), j);
      gt_used[static_cast<std::size_t>(j)] = 1;
    } else {
      result.unmatched_pred.push_back(static_cast<int>(i));
    }
  }
  for (std::size_t j = 0; j < gt.size(); ++j)
    if (!gt_used[j]) result.unmatched_gt.push_back(static_cast<int>(j));
  return result;
}

namespace {

// Occupied eval-grid centers inside the inflated box; falls back to the box
// center so every matched object has a non-empty point set.
std::vector<Vec3> grid_points_for_box(const SemanticVoxelGrid& grid, const OrientedBox3& box,
                                      double inflation) {
  OrientedBox3 inflated = box;
  inflated.size = box.size + Vec3::Constant(2.0 * inflation);
  std::vector<Vec3> points;
  const GridSpec& spec = grid.spec;
  // Limit the scan to the inflated box's axis-aligned reach.
  const double radius = inflated.bounding_radius();
  const Vec3 lo = inflated.pose.translation - Vec3::Constant(radius);
  const Vec3 hi = inflated.pose.translation + Vec3::Constant(radius);
  const Vec3 glo = world_to_grid(spec, lo);
  const Vec3 ghi = world_to_grid(spec, hi);
  const int i0 = std::max(0, static_cast<int>(std::floor(glo.x())));
  const int j0 = std::max(0, static_cast<int>(std::floor(glo.y())));
  const int k0 = std::max(0, static_cast<int>(std::floor(glo.z())));
  const int i1 = std::min(spec.dims.x(), static_cast<int>(std::ceil(ghi.x())) + 1);
  const int j1 = std::min(spec.dims.y(), static_cast<int>(std::ceil(ghi.y())) + 1);
  const int k1 = std::min(spec.dims.z(), static_cast<int>(std::ceil(ghi.z())) + 1);
  for (int k = k0; k < k1; ++k)
    for (int j = j0; j < j1; ++j)
      for (int i = i0; i < i1; ++i) {
        if (grid.label(i, j, k) == 0) continue;
        const Vec3 c = spec.cell_center(i, j, k);
        if (point_in_box(inflated, c)) points.push_back(c);
      }
  if (points.empty()) points.push_back(box.pose.translation);
  return points;
}

std::vector<Vec3> object_points(const ObjectObservation& obj, const SemanticVoxelGrid& grid,
                                double inflation) {
  if (!obj.cloud.empty()) return obj.cloud.points;
  return grid_points_for_box(grid, obj.box, inflation);
}

}  // namespace

MetricsReport evaluate(const SemanticVoxelGrid& pred, const std::vector<ObjectObservation>& pred_objects,
                       const SemanticVoxelGrid& gt, const std::vector<ObjectObservation>& gt_objects,
                       const SceneBounds& bounds, const std::string& scope, const EvalConfig& cfg) {
  const SemanticVoxelGrid pred_eval = crop(resample(pred, cfg.eval_voxel), bounds);
  const SemanticVoxelGrid gt_eval = crop(resample(gt, cfg.eval_voxel), bounds);

  MetricsReport report;
  report.scope = scope;
  report.iou = iou(pred_eval, gt_eval);

  std::vector<int> classes = cfg.classes;
  if (classes.empty()) {
    const int n = std::max(pred_eval.class_count, gt_eval.class_count);
    for (int c = 1; c <= n; ++c) classes.push_back(c);
  }
  const MiouResult m = miou(pred_eval, gt_eval, classes);
  report.miou = m.miou;
  report.per_class_iou = m.per_class;

  // Range-scope the object lists by box center before matching.
  std::vector<const ObjectObservation*> pred_scoped, gt_scoped;
  for (const auto& o : pred_objects)
    if (bounds.contains(o.box.pose.translation)) pred_scoped.push_back(&o);
  for (const auto& o : gt_objects)
    if (bounds.contains(o.box.pose.translation)) gt_scoped.push_back(&o);
  report.counts.predicted_objects = static_cast<int>(pred_scoped.size());
  report.counts.gt_objects = static_cast<int>(gt_scoped.size());

  std::vector<OrientedBox3> pred_boxes, gt_boxes;
  for (const auto* o : pred_scoped) pred_boxes.push_back(o->box);
  for (const auto* o : gt_scoped) gt_boxes.push_back(o->box);
  const MatchResult match = match_objects(pred_boxes, gt_boxes, cfg.match_gate);
  report.counts.unmatched_predicted = static_cast<int>(match.unmatched_pred.size());
  report.counts.unmatched_gt = static_cast<int>(match.unmatched_gt.size());

  for (const auto& [pi, gi] : match.pairs) {
    const std::vector<Vec3> pp =
        object_points(*pred_scoped[static_cast<std::size_t>(pi)], pred_eval, cfg.box_inflation);
    const std::vector<Vec3> gp =
        object_points(*gt_scoped[static_cast<std::size_t>(gi)], gt_eval, cfg.box_inflation);
    report.hausdorff_per_object.push_back(hausdorff(pp, gp));
  }
  if (!report.hausdorff_per_object.empty()) {
    report.hausdorff_mean =
        std::accumulate(report.hausdorff_per_object.begin(), report.hausdorff_per_object.end(),
                        0.0) /
        static_cast<double>(report.hausdorff_per_object.size());
  }
  return report;
}

MetricsReport evaluate(const AdaptiveMap& pred, const SemanticVoxelGrid& gt,
                       const std::vector<ObjectObservation>& gt_objects, const SceneBounds& bounds,
                       const std::string& scope, const EvalConfig& cfg) {
  pred.validate();
  // Fuse onto the exact spec the gt side will be scored on, so the grids
  // agree bit-for-bit after the shared resample/crop path.
  const GridSpec target = crop(resample(gt, cfg.eval_voxel), bounds).spec;
  std::vector<PointCloud> clouds;
  clouds.reserve(pred.objects.size());
  for (const auto& obj : pred.objects) clouds.push_back(obj.cloud);
  const SemanticVoxelGrid fused = fuse(pred.coarse, clouds, target);

  std::vector<ObjectObservation> pred_objects;
  pred_objects.reserve(pred.objects.size());
  for (const auto& obj : pred.objects) pred_objects.push_back({obj.box, obj.cloud});
  return evaluate(fused, pred_objects, gt, gt_objects, bounds, scope, cfg);
}

std::string report_table(const MetricsReport& report,
                         const std::map<int, std::string>& class_names) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);

  std::vector<std::pair<std::string, std::string>> columns;
  auto fmt = [](double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << v;
    return s.str();
  };
  columns.emplace_back("Scope", report.scope);
  columns.emplace_back("IOU", fmt(report.iou));
  columns.emplace_back("mIOU", fmt(report.miou));
  columns.emplace_back("Hausdorff Distance(m)",
                       report.hausdorff_mean ? fmt(*report.hausdorff_mean) : std::string("-"));
  for (const auto& [cid, v] : report.per_class_iou) {
    const auto it = class_names.find(cid);
    columns.emplace_back(it != class_names.end() ? it->second : "class " + std::to_string(cid),
                         fmt(v));
  }

  std::string header, values;
  for (const auto& [name, value] : columns) {
    const std::size_t w = std::max(name.size(), value.size()) + 2;
    header += name + std::string(w - name.size(), ' ');
    values += value + std::string(w - value.size(), ' ');
  }
  os << header << "\n" << values << "\n";
  os << "objects: predicted " << report.counts.predicted_objects << ", gt "
     << report.counts.gt_objects << ", unmatched predicted " << report.counts.unmatched_predicted
     << ", unmatched gt " << report.counts.unmatched_gt << "\n";
  return os.str();
}

}  // namespace adaocc
