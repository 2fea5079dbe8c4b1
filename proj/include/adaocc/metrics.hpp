#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaocc/geometry.hpp"
#include "adaocc/voxel.hpp"

namespace adaocc {

// Binary occupancy intersection-over-union: any non-free label counts as
// occupied. Both grids empty gives 1, exactly one empty gives 0.
double iou(const SemanticVoxelGrid& pred, const SemanticVoxelGrid& gt);

struct MiouResult {
  double miou = 0.0;
  std::map<int, double> per_class;  // classes present in at least one grid
};

// Per-class IOU on label-equality masks over `classes`; classes absent from
// both grids are left out of the mean. All listed classes absent gives 1.
MiouResult miou(const SemanticVoxelGrid& pred, const SemanticVoxelGrid& gt,
                const std::vector<int>& classes);

// Exact symmetric Hausdorff distance between point sets.
double hausdorff(const std::vector<Vec3>& x, const std::vector<Vec3>& y);

// Minimum-total-cost assignment of rows to columns. Entry r of the result is
// the matched column or -1; when rows exceed columns, the surplus rows stay
// unmatched (and symmetrically for columns).
std::vector<int> hungarian_assign(const Eigen::MatrixXd& cost);

struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // (pred index, gt index)
  std::vector<int> unmatched_pred;
  std::vector<int> unmatched_gt;
};

// Optimal bipartite matching on box-center distance. Matched pairs farther
// apart than `max_center_distance` are rejected afterwards and reported as
// unmatched.
MatchResult match_objects(const std::vector<OrientedBox3>& pred,
                          const std::vector<OrientedBox3>& gt,
                          double max_center_distance = 4.0);

// One detected or ground-truth object: its box plus, when available, the
// point cloud representing its surface. Objects without a cloud fall back to
// occupied grid-cell centers inside the (slightly inflated) box.
struct ObjectObservation {
  OrientedBox3 box;
  PointCloud cloud;
};

struct MetricsReport {
  std::string scope;  // "close_range" or "full_range"
  double iou = 0.0;
  double miou = 0.0;
  std::map<int, double> per_class_iou;
  std::optional<double> hausdorff_mean;
  std::vector<double> hausdorff_per_object;
  struct Counts {
    int predicted_objects = 0;
    int gt_objects = 0;
    int unmatched_predicted = 0;
    int unmatched_gt = 0;
  } counts;
};

struct EvalConfig {
  double eval_voxel = 0.2;
  double match_gate = 4.0;       // meters between matched box centers
  double box_inflation = 0.4;    // meters added around boxes when collecting grid centers
  std::vector<int> classes;      // empty: every class id up to class_count
};

// Resamples both grids to eval resolution, crops to bounds, and scores
// IOU/mIOU plus per-matched-object Hausdorff. Objects whose box centers fall
// outside the bounds are ignored. Predicted objects without clouds use
// occupied eval-grid centers inside their inflated box (the box center alone
// if no cell qualifies).
MetricsReport evaluate(const SemanticVoxelGrid& pred, const std::vector<ObjectObservation>& pred_objects,
                       const SemanticVoxelGrid& gt, const std::vector<ObjectObservation>& gt_objects,
                       const SceneBounds& bounds, const std::string& scope, const EvalConfig& cfg);

// Fuses the adaptive map at eval resolution over `bounds` first, then scores
// it; the map's object clouds provide the predicted Hausdorff point sets.
MetricsReport evaluate(const AdaptiveMap& pred, const SemanticVoxelGrid& gt,
                       const std::vector<ObjectObservation>& gt_objects, const SceneBounds& bounds,
                       const std::string& scope, const EvalConfig& cfg);

// Plain-text table mirroring the report: overall columns followed by
// per-class IOU columns named via `class_names` (falling back to the id).
std::string report_table(const MetricsReport& report,
                         const std::map<int, std::string>& class_names);

}  // namespace adaocc
