#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adaocc/feature_volume.hpp"
#include "adaocc/folding.hpp"
#include "adaocc/io.hpp"
#include "adaocc/losses.hpp"
#include "adaocc/metrics.hpp"
#include "adaocc/occ_head.hpp"
#include "adaocc/scene_sim.hpp"
#include "adaocc/voxel.hpp"

// End-to-end driver: scene batches, model training, inference, evaluation,
// and the ablation studies, all deterministic functions of (config, seed).
namespace adaocc::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 0;
  int scene_count = 20;        // evaluation scenes
  int train_scene_count = 3;   // training scenes, drawn from a disjoint seed stream
  SceneGenConfig scene;

  double train_voxel = 0.8;    // coarse map and feature volume resolution
  double eval_voxel = 0.2;     // fusion and metric resolution
  std::vector<double> resolutions = {0.2, 0.4, 0.8};  // gt grids emitted per scene
  SceneBounds close_bounds{Vec3(-12.8, -12.8, -5.0), Vec3(12.8, 12.8, 3.0)};

  int feature_channels = 32;
  bool temporal = true;
  Vec3 prev_ego_offset = Vec3(-1.0, 0.0, 0.0);
  VisibilityConfig visibility;
  EncoderConfig encoder;

  PoolingConfig pooling;
  FoldingConfig folding;
  int fold_target_points = 800;  // surface samples per training target
  int fold_noise_copies = 0;     // extra samples per object, pooled at detector-noise
                                 // perturbed boxes with targets in the perturbed
                                 // frame; off by default: max pooling barely reacts
                                 // to box shifts, so the copies only blur the fit
  int infer_points = 10000;      // decoded points per object; 0 = folding.grid_points

  int occ_hidden = 64;
  FocalConfig focal;
  DetectorNoise noise;
  JointLossWeights joint_weights;
  TrainConfig occ_train;
  TrainConfig fold_train;

  PipelineConfig();

  // eval_voxel <= train_voxel and both listed in `resolutions`.
  void validate() const;
};

io::json config_to_json(const PipelineConfig& cfg);

// Missing keys keep their defaults, so partial configs are valid.
PipelineConfig config_from_json(const io::json& j);

// splitmix-derived child seed; the basis for every per-scene stream.
std::uint64_t derived_seed(std::uint64_t base, std::uint64_t salt);

// Scene seed streams: evaluation scenes use salts 0..count-1 directly,
// training scenes are offset so the two sets never overlap.
inline constexpr std::uint64_t kTrainSceneSalt = 1000;
inline constexpr std::uint64_t kStudySceneSalt = 5000;

// Everything inference and evaluation need about one scene.
struct ScenePack {
  SceneSpec scene;
  FeatureVolume prev;  // train resolution over the scene bounds
  FeatureVolume cur;
  SemanticVoxelGrid gt_train;
  SemanticVoxelGrid gt_eval;
  std::vector<ObjectObservation> gt_objects;  // boxes plus full-surface clouds
};

SceneSpec scene_for_salt(const PipelineConfig& cfg, std::uint64_t salt);
ScenePack build_scene_pack(const PipelineConfig& cfg, const SceneSpec& scene);

// Ground-truth boxes paired with dense full-visibility surface clouds.
std::vector<ObjectObservation> gt_observations(const PipelineConfig& cfg, const SceneSpec& scene);

// Per-voxel head input rows for one scene ([prev, cur] when temporal).
Eigen::MatrixXd occ_feature_rows(const PipelineConfig& cfg, const ScenePack& pack);

OccupancyHead train_occupancy(const PipelineConfig& cfg, const std::vector<ScenePack>& packs,
                              TrainCurve& curve);

// One sample per scene object: code pooled at the gt box from the current
// frame, target surface points in the normalized object frame.
std::vector<FoldingSample> folding_dataset(const PipelineConfig& cfg,
                                           const std::vector<ScenePack>& packs);

FoldingDecoder train_fold(const PipelineConfig& cfg, const std::vector<ScenePack>& packs,
                          TrainCurve& curve);

struct InferOptions {
  bool oracle_shapes = false;     // gt surface clouds instead of folding output
  bool oracle_occupancy = false;  // gt rasterization instead of the occupancy head
};

struct InferResult {
  SemanticVoxelGrid coarse;         // train resolution
  std::vector<OrientedBox3> boxes;  // detector output
  AdaptiveMap map;                  // coarse + per-box clouds
  SemanticVoxelGrid fused;          // eval resolution over the scene bounds
};

// encode -> occupancy -> detect -> pool -> fold -> fuse. `head` may be null
// only with oracle_occupancy, `decoder` only with oracle_shapes.
InferResult infer_scene(const PipelineConfig& cfg, const ScenePack& pack,
                        const OccupancyHead* head, const FoldingDecoder* decoder,
                        const InferOptions& options = {});

// Scope bounds: the close-range box or the gt grid's full extent.
SceneBounds scope_bounds(const PipelineConfig& cfg, const SemanticVoxelGrid& gt, bool close);

// Fused adaptive map scored against gt.
MetricsReport eval_fused(const PipelineConfig& cfg, const InferResult& result,
                         const ScenePack& pack, bool close);

// Baseline: the coarse grid alone; detected boxes fall back to voxel centers.
MetricsReport eval_coarse(const PipelineConfig& cfg, const InferResult& result,
                          const ScenePack& pack, bool close);

struct StudyRow {
  std::string level;
  double mean = 0.0;
  double stddev = 0.0;
};

// Per pooling mode: decoder trained on that mode's codes, then mean test
// chamfer on boxes perturbed by 0.2 m translation noise.
std::vector<StudyRow> pooling_study(const PipelineConfig& cfg);

// Per pooling mode: mean pooled-feature shift under the same perturbations.
std::vector<StudyRow> pooling_robustness_study(const PipelineConfig& cfg);

// Density-normalized chamfer of one trained decoder at K in {900, 2500,
// 10000, 40000} over the held-out scenes.
std::vector<StudyRow> foldsize_study(const PipelineConfig& cfg, const FoldingDecoder& decoder);

// Close-range fused IOU as the number of boxes given to fusion is capped at
// 0, 2, ..., 10.
std::vector<StudyRow> boxcount_study(const PipelineConfig& cfg);

// Minimal line chart for study results (one polyline over the row order).
void write_study_svg(const std::vector<StudyRow>& rows, const std::string& metric_name,
                     const std::string& path);

void write_study_csv(const std::vector<StudyRow>& rows, const std::string& path);

// CLI-level commands. Paths are created as needed; every run is
// deterministic, so reruns produce byte-identical artifacts.
void cmd_gen_scenes(const PipelineConfig& cfg, int count, std::uint64_t seed,
                    const std::string& out_dir);
void cmd_train(const PipelineConfig& cfg, const std::string& task, bool joint,
               const std::string& out_dir);
void cmd_infer(const PipelineConfig& cfg, const std::string& scene_path,
               const std::string& models_dir, const std::string& out_dir,
               const InferOptions& options);
void cmd_eval(const PipelineConfig& cfg, const std::string& pred_path, const std::string& gt_path,
              const std::string& bounds_name, double eval_voxel, const std::string& out_dir);
void cmd_ablate(const PipelineConfig& cfg, const std::string& study, const std::string& out_dir);

}  // namespace adaocc::pipeline
