#include "adaocc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>

namespace fs = std::filesystem;

namespace adaocc::pipeline {

namespace {

// Salt bases keeping the per-purpose scene streams disjoint.
constexpr std::uint64_t kPoolingTrialSalt = 9000;
constexpr std::uint64_t kBoxcountSceneSalt = 7000;
constexpr std::uint64_t kGtCloudSalt = 2000;       // + object index
constexpr std::uint64_t kOracleShapeSalt = 500;    // + box index
constexpr std::uint64_t kFoldTargetSalt = 3000;    // + object index
constexpr std::uint64_t kFoldNoiseSalt = 4000;     // + object index
constexpr std::uint64_t kEncodeSalt = 1;
constexpr std::uint64_t kDetectorSalt = 2;

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SemanticVoxelGrid fuse_map(const AdaptiveMap& map, const GridSpec& target_spec) {
  std::vector<PointCloud> clouds;
  clouds.reserve(map.objects.size());
  for (const AdaptiveMap::Object& obj : map.objects) clouds.push_back(obj.cloud);
  return fuse(map.coarse, clouds, target_spec);
}

}  // namespace

PipelineConfig::PipelineConfig() {
  scene.object_count = 24;  // dense scenes: the coarse grid misses far more
                            // thin structure than it does in sparse ones
  occ_train.epochs = 40;
  occ_train.batch_size = 256;
  // The decoder needs roughly 100 epochs at this rate before it stops
  // averaging the two shell skins and starts covering both; the lattice is a
  // training resolution only, decode density is chosen at inference.
  folding.grid_points = 1250;
  fold_train.epochs = 300;
  fold_train.learning_rate = 3e-3;
  fold_train.batch_size = 8;
}

void PipelineConfig::validate() const {
  if (!(eval_voxel > 0.0) || !(train_voxel > 0.0))
    throw std::invalid_argument("voxel sizes must be positive");
  if (eval_voxel > train_voxel + 1e-12)
    throw std::invalid_argument("eval voxel size must not exceed the train voxel size");
  auto listed = [&](double v) {
    for (double r : resolutions)
      if (std::abs(r - v) < 1e-12) return true;
    return false;
  };
  if (!listed(train_voxel) || !listed(eval_voxel))
    throw std::invalid_argument("train and eval voxel sizes must appear in `resolutions`");
  if (feature_channels < 4) throw std::invalid_argument("feature_channels must be >= 4");
  if (folding.code_dim != feature_channels)
    throw std::invalid_argument("folding code_dim must equal feature_channels");
  if (fold_target_points < 1) throw std::invalid_argument("fold_target_points must be >= 1");
  if (fold_noise_copies < 0) throw std::invalid_argument("fold_noise_copies must be >= 0");
  if (infer_points < 0) throw std::invalid_argument("infer_points must be >= 0");
  if (occ_hidden < 1) throw std::invalid_argument("occ_hidden must be >= 1");
  if (scene_count < 0 || train_scene_count < 1)
    throw std::invalid_argument("scene counts out of range");
  focal.validate();
  noise.validate();
  joint_weights.validate();
  for (const TrainConfig* t : {&occ_train, &fold_train}) {
    if (t->learning_rate < 0.0 || t->epochs < 1 || t->batch_size < 1)
      throw std::invalid_argument("train config values out of range");
  }
}

namespace {

io::json vec3_json(const Vec3& v) { return io::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const io::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

io::json bounds_json(const SceneBounds& b) {
  return {{"min", vec3_json(b.min)}, {"max", vec3_json(b.max)}};
}

SceneBounds bounds_from(const io::json& j) {
  return SceneBounds(vec3_from(j.at("min")), vec3_from(j.at("max")));
}

io::json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"seed", t.seed},
          {"optimizer", t.optimizer}};
}

template <class T>
void maybe(const io::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_vec3(const io::json& j, const char* key, Vec3& out) {
  if (j.contains(key)) out = vec3_from(j.at(key));
}

void maybe_bounds(const io::json& j, const char* key, SceneBounds& out) {
  if (j.contains(key)) out = bounds_from(j.at(key));
}

void train_from(const io::json& j, TrainConfig& t) {
  maybe(j, "learning_rate", t.learning_rate);
  maybe(j, "epochs", t.epochs);
  maybe(j, "batch_size", t.batch_size);
  maybe(j, "seed", t.seed);
  maybe(j, "optimizer", t.optimizer);
}

}  // namespace

io::json config_to_json(const PipelineConfig& cfg) {
  io::json j;
  j["seed"] = cfg.seed;
  j["scene_count"] = cfg.scene_count;
  j["train_scene_count"] = cfg.train_scene_count;
  j["scene"] = {{"bounds", bounds_json(cfg.scene.bounds)},
                {"object_count", cfg.scene.object_count},
                {"wall_count", cfg.scene.wall_count},
                {"ground_z", cfg.scene.ground_z},
                {"classes", cfg.scene.classes},
                {"max_attempts", cfg.scene.max_attempts}};
  j["train_voxel"] = cfg.train_voxel;
  j["eval_voxel"] = cfg.eval_voxel;
  j["resolutions"] = cfg.resolutions;
  j["close_bounds"] = bounds_json(cfg.close_bounds);
  j["feature_channels"] = cfg.feature_channels;
  j["temporal"] = cfg.temporal;
  j["prev_ego_offset"] = vec3_json(cfg.prev_ego_offset);
  j["visibility"] = {
      {"ego_position", vec3_json(cfg.visibility.ego_position)},
      {"mode", cfg.visibility.mode == VisibilityConfig::Mode::kFull ? "full" : "front_facing"},
      {"max_range", cfg.visibility.max_range}};
  j["encoder"] = {{"points_per_object", cfg.encoder.points_per_object},
                  {"ground_spacing", cfg.encoder.ground_spacing},
                  {"distance_cap", cfg.encoder.distance_cap},
                  {"density_radius", cfg.encoder.density_radius},
                  {"class_radius_near", cfg.encoder.class_radius_near},
                  {"class_radius_far", cfg.encoder.class_radius_far},
                  {"density_norm", cfg.encoder.density_norm}};
  j["pooling"] = {{"mode", pooling_mode_name(cfg.pooling.mode)},
                  {"interp", cfg.pooling.interp == InterpMode::kTricubic ? "tricubic" : "trilinear"},
                  {"n_per_axis", cfg.pooling.n_per_axis}};
  j["folding"] = {{"code_dim", cfg.folding.code_dim},
                  {"hidden_dim", cfg.folding.hidden_dim},
                  {"grid_points", cfg.folding.grid_points}};
  j["fold_target_points"] = cfg.fold_target_points;
  j["fold_noise_copies"] = cfg.fold_noise_copies;
  j["infer_points"] = cfg.infer_points;
  j["occ_hidden"] = cfg.occ_hidden;
  j["focal"] = {{"alpha", cfg.focal.alpha}, {"beta", cfg.focal.beta}};
  j["noise"] = {{"sigma_translation", cfg.noise.sigma_translation},
                {"sigma_yaw", cfg.noise.sigma_yaw},
                {"sigma_size_rel", cfg.noise.sigma_size_rel},
                {"drop_prob", cfg.noise.drop_prob},
                {"class_flip_prob", cfg.noise.class_flip_prob},
                {"seed", cfg.noise.seed}};
  j["joint_weights"] = {{"w_sem", cfg.joint_weights.w_sem},
                        {"w_det", cfg.joint_weights.w_det},
                        {"w_surf", cfg.joint_weights.w_surf}};
  j["occ_train"] = train_json(cfg.occ_train);
  j["fold_train"] = train_json(cfg.fold_train);
  return j;
}

PipelineConfig config_from_json(const io::json& j) {
  PipelineConfig cfg;
  maybe(j, "seed", cfg.seed);
  maybe(j, "scene_count", cfg.scene_count);
  maybe(j, "train_scene_count", cfg.train_scene_count);
  if (j.contains("scene")) {
    const io::json& s = j.at("scene");
    maybe_bounds(s, "bounds", cfg.scene.bounds);
    maybe(s, "object_count", cfg.scene.object_count);
    maybe(s, "wall_count", cfg.scene.wall_count);
    maybe(s, "ground_z", cfg.scene.ground_z);
    maybe(s, "classes", cfg.scene.classes);
    maybe(s, "max_attempts", cfg.scene.max_attempts);
  }
  maybe(j, "train_voxel", cfg.train_voxel);
  maybe(j, "eval_voxel", cfg.eval_voxel);
  maybe(j, "resolutions", cfg.resolutions);
  maybe_bounds(j, "close_bounds", cfg.close_bounds);
  maybe(j, "feature_channels", cfg.feature_channels);
  maybe(j, "temporal", cfg.temporal);
  maybe_vec3(j, "prev_ego_offset", cfg.prev_ego_offset);
  if (j.contains("visibility")) {
    const io::json& v = j.at("visibility");
    maybe_vec3(v, "ego_position", cfg.visibility.ego_position);
    if (v.contains("mode")) {
      const std::string mode = v.at("mode").get<std::string>();
      if (mode == "full") cfg.visibility.mode = VisibilityConfig::Mode::kFull;
      else if (mode == "front_facing") cfg.visibility.mode = VisibilityConfig::Mode::kFrontFacing;
      else throw std::invalid_argument("unknown visibility mode: " + mode);
    }
    maybe(v, "max_range", cfg.visibility.max_range);
  }
  if (j.contains("encoder")) {
    const io::json& e = j.at("encoder");
    maybe(e, "points_per_object", cfg.encoder.points_per_object);
    maybe(e, "ground_spacing", cfg.encoder.ground_spacing);
    maybe(e, "distance_cap", cfg.encoder.distance_cap);
    maybe(e, "density_radius", cfg.encoder.density_radius);
    maybe(e, "class_radius_near", cfg.encoder.class_radius_near);
    maybe(e, "class_radius_far", cfg.encoder.class_radius_far);
    maybe(e, "density_norm", cfg.encoder.density_norm);
  }
  if (j.contains("pooling")) {
    const io::json& p = j.at("pooling");
    if (p.contains("mode")) cfg.pooling.mode = parse_pooling_mode(p.at("mode").get<std::string>());
    if (p.contains("interp")) {
      const std::string interp = p.at("interp").get<std::string>();
      if (interp == "tricubic") cfg.pooling.interp = InterpMode::kTricubic;
      else if (interp == "trilinear") cfg.pooling.interp = InterpMode::kTrilinear;
      else throw std::invalid_argument("unknown interpolation mode: " + interp);
    }
    maybe(p, "n_per_axis", cfg.pooling.n_per_axis);
  }
  if (j.contains("folding")) {
    const io::json& f = j.at("folding");
    maybe(f, "code_dim", cfg.folding.code_dim);
    maybe(f, "hidden_dim", cfg.folding.hidden_dim);
    maybe(f, "grid_points", cfg.folding.grid_points);
  }
  maybe(j, "fold_target_points", cfg.fold_target_points);
  maybe(j, "fold_noise_copies", cfg.fold_noise_copies);
  maybe(j, "infer_points", cfg.infer_points);
  maybe(j, "occ_hidden", cfg.occ_hidden);
  if (j.contains("focal")) {
    maybe(j.at("focal"), "alpha", cfg.focal.alpha);
    maybe(j.at("focal"), "beta", cfg.focal.beta);
  }
  if (j.contains("noise")) {
    const io::json& n = j.at("noise");
    maybe(n, "sigma_translation", cfg.noise.sigma_translation);
    maybe(n, "sigma_yaw", cfg.noise.sigma_yaw);
    maybe(n, "sigma_size_rel", cfg.noise.sigma_size_rel);
    maybe(n, "drop_prob", cfg.noise.drop_prob);
    maybe(n, "class_flip_prob", cfg.noise.class_flip_prob);
    maybe(n, "seed", cfg.noise.seed);
  }
  if (j.contains("joint_weights")) {
    maybe(j.at("joint_weights"), "w_sem", cfg.joint_weights.w_sem);
    maybe(j.at("joint_weights"), "w_det", cfg.joint_weights.w_det);
    maybe(j.at("joint_weights"), "w_surf", cfg.joint_weights.w_surf);
  }
  if (j.contains("occ_train")) train_from(j.at("occ_train"), cfg.occ_train);
  if (j.contains("fold_train")) train_from(j.at("fold_train"), cfg.fold_train);
  cfg.validate();
  return cfg;
}

std::uint64_t derived_seed(std::uint64_t base, std::uint64_t salt) {
  return Rng(base).fork(salt).next_u64();
}

SceneSpec scene_for_salt(const PipelineConfig& cfg, std::uint64_t salt) {
  return gen_scene(derived_seed(cfg.seed, salt), cfg.scene);
}

std::vector<ObjectObservation> gt_observations(const PipelineConfig& cfg, const SceneSpec& scene) {
  std::vector<ObjectObservation> out;
  out.reserve(scene.objects.size());
  VisibilityConfig full;
  full.mode = VisibilityConfig::Mode::kFull;
  full.ego_position = cfg.visibility.ego_position;
  full.max_range = cfg.visibility.max_range;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    Rng rng(derived_seed(scene.seed, kGtCloudSalt + i));
    ObjectObservation obs;
    obs.box = scene.objects[i].box;
    obs.cloud = sample_surface(scene.objects[i], cfg.encoder.points_per_object, full, rng);
    out.push_back(std::move(obs));
  }
  return out;
}

ScenePack build_scene_pack(const PipelineConfig& cfg, const SceneSpec& scene) {
  ScenePack pack;
  pack.scene = scene;
  const GridSpec train_spec = GridSpec::covering(scene.bounds, cfg.train_voxel);
  const GridSpec eval_spec = GridSpec::covering(scene.bounds, cfg.eval_voxel);
  const std::uint64_t enc_seed = derived_seed(scene.seed, kEncodeSalt);
  if (cfg.temporal) {
    auto pair = encode_feature_pair(scene, cfg.visibility, train_spec, cfg.feature_channels,
                                    enc_seed, cfg.prev_ego_offset, cfg.encoder);
    pack.prev = std::move(pair.first);
    pack.cur = std::move(pair.second);
  } else {
    pack.cur = encode_features(scene, cfg.visibility, train_spec, cfg.feature_channels, enc_seed,
                               cfg.encoder);
  }
  pack.gt_train = rasterize_gt(scene, train_spec);
  pack.gt_eval = rasterize_gt(scene, eval_spec);
  pack.gt_objects = gt_observations(cfg, scene);
  return pack;
}

Eigen::MatrixXd occ_feature_rows(const PipelineConfig& cfg, const ScenePack& pack) {
  return cfg.temporal ? stack_voxel_features(pack.prev, pack.cur)
                      : stack_voxel_features(pack.cur);
}

OccupancyHead train_occupancy(const PipelineConfig& cfg, const std::vector<ScenePack>& packs,
                              TrainCurve& curve) {
  if (packs.empty()) throw std::invalid_argument("no training scenes");
  Eigen::Index rows = 0;
  for (const ScenePack& p : packs) rows += static_cast<Eigen::Index>(p.gt_train.spec.cell_count());

  OccHeadConfig hc;
  hc.feature_dim = cfg.feature_channels;
  hc.temporal = cfg.temporal;
  hc.hidden_dim = cfg.occ_hidden;
  hc.class_count = kClassCount;
  hc.focal = cfg.focal;
  Rng init(derived_seed(cfg.occ_train.seed, 11));
  OccupancyHead head(hc, init);

  Eigen::MatrixXd features(rows, head.input_dim());
  std::vector<std::uint8_t> labels;
  labels.reserve(static_cast<std::size_t>(rows));
  Eigen::Index at = 0;
  for (const ScenePack& p : packs) {
    const Eigen::MatrixXd f = occ_feature_rows(cfg, p);
    features.middleRows(at, f.rows()) = f;
    at += f.rows();
    labels.insert(labels.end(), p.gt_train.labels.begin(), p.gt_train.labels.end());
  }
  curve = train_occ_head(head, features, labels, cfg.occ_train);
  return head;
}

std::vector<FoldingSample> folding_dataset(const PipelineConfig& cfg,
                                           const std::vector<ScenePack>& packs) {
  std::vector<FoldingSample> samples;
  for (const ScenePack& pack : packs) {
    VisibilityConfig full;
    full.mode = VisibilityConfig::Mode::kFull;
    full.ego_position = cfg.visibility.ego_position;
    full.max_range = cfg.visibility.max_range;
    for (std::size_t i = 0; i < pack.scene.objects.size(); ++i) {
      const SceneObject& obj = pack.scene.objects[i];
      Rng rng(derived_seed(pack.scene.seed, kFoldTargetSalt + i));
      const PointCloud cloud = sample_surface(obj, cfg.fold_target_points, full, rng);
      if (cloud.points.empty()) continue;

      // One sample per box the decoder might see at inference: the gt box plus
      // detector-noise-perturbed copies. The target is the same surface
      // expressed in each box's normalized frame, so the decoder learns to read
      // the box misalignment out of the pooled code and undo it.
      std::vector<OrientedBox3> boxes{obj.box};
      Rng noise_rng(derived_seed(pack.scene.seed, kFoldNoiseSalt + i));
      for (int a = 0; a < cfg.fold_noise_copies; ++a) {
        Rng r = noise_rng.fork(static_cast<std::uint64_t>(a));
        OrientedBox3 box = obj.box;
        const double tx = r.gaussian(0.0, cfg.noise.sigma_translation);
        const double ty = r.gaussian(0.0, cfg.noise.sigma_translation);
        const double tz = r.gaussian(0.0, cfg.noise.sigma_translation);
        box.pose.translation += Vec3(tx, ty, tz);
        const double dyaw = r.gaussian(0.0, cfg.noise.sigma_yaw);
        if (dyaw != 0.0)
          box.pose.rotation =
              (Eigen::AngleAxisd(dyaw, Vec3::UnitZ()) * box.pose.rotation).normalized();
        const double factor = std::max(1.0 + r.gaussian(0.0, cfg.noise.sigma_size_rel), 1e-3);
        box.size *= factor;
        boxes.push_back(box);
      }

      for (const OrientedBox3& box : boxes) {
        FoldingSample sample;
        try {
          sample.code = pool_box_features(pack.cur, box, cfg.pooling);
        } catch (const std::invalid_argument&) {
          continue;  // perturbed box left the feature volume
        }
        const Vec3 half = box.half_size();
        sample.target.reserve(cloud.points.size());
        for (const Vec3& p : cloud.points) {
          const Vec3 local = box.pose.inverse_transform_point(p);
          sample.target.push_back(local.cwiseQuotient(half));
        }
        samples.push_back(std::move(sample));
      }
    }
  }
  if (samples.empty()) throw std::invalid_argument("no folding samples in the training scenes");
  return samples;
}

FoldingDecoder train_fold(const PipelineConfig& cfg, const std::vector<ScenePack>& packs,
                          TrainCurve& curve) {
  Rng init(derived_seed(cfg.fold_train.seed, 13));
  FoldingDecoder decoder(cfg.folding, init);
  const std::vector<FoldingSample> samples = folding_dataset(cfg, packs);
  curve = train_folding(decoder, samples, cfg.fold_train);
  return decoder;
}

InferResult infer_scene(const PipelineConfig& cfg, const ScenePack& pack,
                        const OccupancyHead* head, const FoldingDecoder* decoder,
                        const InferOptions& options) {
  cfg.validate();
  InferResult result;

  if (options.oracle_occupancy) {
    result.coarse = pack.gt_train;
  } else {
    if (!head) throw std::invalid_argument("occupancy head required without oracle_occupancy");
    result.coarse = predict_grid(*head, occ_feature_rows(cfg, pack), pack.gt_train.spec);
  }

  DetectorNoise noise = cfg.noise;
  noise.seed = derived_seed(pack.scene.seed ^ cfg.noise.seed, kDetectorSalt);
  result.boxes = oracle_detect(pack.scene, noise);

  if (!options.oracle_shapes && !decoder)
    throw std::invalid_argument("folding decoder required without oracle_shapes");

  const int k = cfg.infer_points > 0 ? cfg.infer_points : cfg.folding.grid_points;
  result.map.coarse = result.coarse;
  for (std::size_t i = 0; i < result.boxes.size(); ++i) {
    const OrientedBox3& box = result.boxes[i];
    PointCloud cloud;
    if (options.oracle_shapes) {
      // Swap in the true surface of the nearest gt object.
      if (pack.scene.objects.empty()) continue;
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < pack.scene.objects.size(); ++g) {
        const double d =
            (pack.scene.objects[g].box.pose.translation - box.pose.translation).norm();
        if (d < best_d) {
          best_d = d;
          best = g;
        }
      }
      VisibilityConfig full;
      full.mode = VisibilityConfig::Mode::kFull;
      full.ego_position = cfg.visibility.ego_position;
      full.max_range = cfg.visibility.max_range;
      Rng rng(derived_seed(pack.scene.seed, kOracleShapeSalt + i));
      cloud = sample_surface(pack.scene.objects[best], k, full, rng);
    } else {
      Eigen::VectorXd code;
      try {
        code = pool_box_features(pack.cur, box, cfg.pooling);
      } catch (const std::invalid_argument&) {
        continue;  // box drifted fully outside the feature volume
      }
      cloud = decoder->decode_world(code, k, box);
    }
    if (cloud.empty()) continue;
    result.map.objects.push_back({std::move(cloud), box});
  }

  result.map.validate();
  result.fused = fuse_map(result.map, pack.gt_eval.spec);
  return result;
}

SceneBounds scope_bounds(const PipelineConfig& cfg, const SemanticVoxelGrid& gt, bool close) {
  if (close) return cfg.close_bounds;
  return SceneBounds(gt.spec.origin, gt.spec.extent_max());
}

namespace {

EvalConfig eval_config(const PipelineConfig& cfg) {
  EvalConfig ecfg;
  ecfg.eval_voxel = cfg.eval_voxel;
  return ecfg;
}

}  // namespace

MetricsReport eval_fused(const PipelineConfig& cfg, const InferResult& result,
                         const ScenePack& pack, bool close) {
  return evaluate(result.map, pack.gt_eval, pack.gt_objects,
                  scope_bounds(cfg, pack.gt_eval, close), close ? "close_range" : "full_range",
                  eval_config(cfg));
}

MetricsReport eval_coarse(const PipelineConfig& cfg, const InferResult& result,
                          const ScenePack& pack, bool close) {
  std::vector<ObjectObservation> pred_objects;
  pred_objects.reserve(result.boxes.size());
  for (const OrientedBox3& box : result.boxes) pred_objects.push_back({box, PointCloud{}});
  return evaluate(result.coarse, pred_objects, pack.gt_eval, pack.gt_objects,
                  scope_bounds(cfg, pack.gt_eval, close), close ? "close_range" : "full_range",
                  eval_config(cfg));
}

namespace {

std::vector<ScenePack> train_packs(const PipelineConfig& cfg) {
  std::vector<ScenePack> packs;
  packs.reserve(static_cast<std::size_t>(cfg.train_scene_count));
  for (int i = 0; i < cfg.train_scene_count; ++i)
    packs.push_back(build_scene_pack(cfg, scene_for_salt(cfg, kTrainSceneSalt + i)));
  return packs;
}

// Scene/object/box triples shared by the pooling studies: boxes perturbed by
// per-axis gaussian translation noise.
struct PoolingTrial {
  std::size_t pack_index;
  std::size_t object_index;
  OrientedBox3 noisy_box;
};

std::vector<PoolingTrial> pooling_trials(const PipelineConfig& cfg,
                                         std::vector<ScenePack>& study_packs, int wanted) {
  std::vector<PoolingTrial> trials;
  int salt = 0;
  while (static_cast<int>(trials.size()) < wanted) {
    study_packs.push_back(
        build_scene_pack(cfg, scene_for_salt(cfg, kStudySceneSalt + salt)));
    const std::size_t pi = study_packs.size() - 1;
    const ScenePack& pack = study_packs.back();
    for (std::size_t oi = 0;
         oi < pack.scene.objects.size() && static_cast<int>(trials.size()) < wanted; ++oi) {
      Rng rng(derived_seed(cfg.seed, kPoolingTrialSalt + trials.size()));
      OrientedBox3 box = pack.scene.objects[oi].box;
      const double tx = rng.gaussian(0.0, 0.2);
      const double ty = rng.gaussian(0.0, 0.2);
      const double tz = rng.gaussian(0.0, 0.2);
      box.pose.translation += Vec3(tx, ty, tz);
      trials.push_back({pi, oi, box});
    }
    ++salt;
    if (salt > 1000) throw std::runtime_error("cannot assemble pooling trials");
  }
  return trials;
}

const std::vector<PoolingMode> kPoolingModes = {PoolingMode::kMax, PoolingMode::kAvg,
                                                PoolingMode::kGlobalMax, PoolingMode::kGlobalMean};

}  // namespace

std::vector<StudyRow> pooling_study(const PipelineConfig& cfg) {
  cfg.validate();
  const std::vector<ScenePack> training = train_packs(cfg);
  std::vector<ScenePack> study_packs;
  const std::vector<PoolingTrial> trials = pooling_trials(cfg, study_packs, 100);

  std::vector<StudyRow> rows;
  for (PoolingMode mode : kPoolingModes) {
    PipelineConfig mode_cfg = cfg;
    mode_cfg.pooling.mode = mode;
    TrainCurve curve;
    const FoldingDecoder decoder = train_fold(mode_cfg, training, curve);

    std::vector<double> chamfers;
    chamfers.reserve(trials.size());
    for (const PoolingTrial& trial : trials) {
      const ScenePack& pack = study_packs[trial.pack_index];
      Eigen::VectorXd code;
      try {
        code = pool_box_features(pack.cur, trial.noisy_box, mode_cfg.pooling);
      } catch (const std::invalid_argument&) {
        continue;
      }
      const PointCloud decoded =
          decoder.decode_world(code, cfg.folding.grid_points, trial.noisy_box);
      const PointCloud& gt = pack.gt_objects[trial.object_index].cloud;
      if (gt.empty()) continue;
      chamfers.push_back(chamfer_normalized(decoded.points, gt.points));
    }
    rows.push_back({pooling_mode_name(mode), sample_mean(chamfers), sample_stddev(chamfers)});
  }
  return rows;
}

std::vector<StudyRow> pooling_robustness_study(const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<ScenePack> study_packs;
  const std::vector<PoolingTrial> trials = pooling_trials(cfg, study_packs, 100);

  std::vector<StudyRow> rows;
  for (PoolingMode mode : kPoolingModes) {
    PoolingConfig pooling = cfg.pooling;
    pooling.mode = mode;
    std::vector<double> shifts;
    shifts.reserve(trials.size());
    for (const PoolingTrial& trial : trials) {
      const ScenePack& pack = study_packs[trial.pack_index];
      const OrientedBox3& clean = pack.scene.objects[trial.object_index].box;
      try {
        const Eigen::VectorXd a = pool_box_features(pack.cur, clean, pooling);
        const Eigen::VectorXd b = pool_box_features(pack.cur, trial.noisy_box, pooling);
        shifts.push_back((a - b).norm());
      } catch (const std::invalid_argument&) {
        continue;
      }
    }
    rows.push_back({pooling_mode_name(mode), sample_mean(shifts), sample_stddev(shifts)});
  }
  return rows;
}

std::vector<StudyRow> foldsize_study(const PipelineConfig& cfg, const FoldingDecoder& decoder) {
  cfg.validate();
  const int scenes = std::min(cfg.scene_count, 8);
  if (scenes < 1) throw std::invalid_argument("foldsize study needs at least one scene");
  std::vector<ScenePack> packs;
  for (int i = 0; i < scenes; ++i)
    packs.push_back(build_scene_pack(cfg, scene_for_salt(cfg, static_cast<std::uint64_t>(i))));

  std::vector<StudyRow> rows;
  for (int k : {900, 2500, 10000, 40000}) {
    std::vector<double> chamfers;
    for (const ScenePack& pack : packs) {
      for (std::size_t oi = 0; oi < pack.scene.objects.size(); ++oi) {
        const OrientedBox3& box = pack.scene.objects[oi].box;
        Eigen::VectorXd code;
        try {
          code = pool_box_features(pack.cur, box, cfg.pooling);
        } catch (const std::invalid_argument&) {
          continue;
        }
        const PointCloud decoded = decoder.decode_world(code, k, box);
        const PointCloud& gt = pack.gt_objects[oi].cloud;
        if (gt.empty()) continue;
        chamfers.push_back(chamfer_normalized(decoded.points, gt.points));
      }
    }
    rows.push_back({std::to_string(k), sample_mean(chamfers), sample_stddev(chamfers)});
  }
  return rows;
}

std::vector<StudyRow> boxcount_study(const PipelineConfig& cfg) {
  PipelineConfig study_cfg = cfg;
  study_cfg.scene.object_count = 10;
  study_cfg.validate();

  const std::vector<ScenePack> training = train_packs(study_cfg);
  TrainCurve occ_curve, fold_curve;
  const OccupancyHead head = train_occupancy(study_cfg, training, occ_curve);
  const FoldingDecoder decoder = train_fold(study_cfg, training, fold_curve);

  const int scenes = std::min(std::max(cfg.scene_count, 1), 8);
  std::vector<InferResult> results;
  std::vector<ScenePack> packs;
  for (int i = 0; i < scenes; ++i) {
    packs.push_back(
        build_scene_pack(study_cfg, scene_for_salt(study_cfg, kBoxcountSceneSalt + i)));
    results.push_back(infer_scene(study_cfg, packs.back(), &head, &decoder));
  }

  std::vector<StudyRow> rows;
  for (int level : {0, 2, 4, 6, 8, 10}) {
    std::vector<double> ious;
    for (int i = 0; i < scenes; ++i) {
      InferResult capped = results[i];
      if (static_cast<int>(capped.map.objects.size()) > level)
        capped.map.objects.resize(static_cast<std::size_t>(level));
      capped.fused = fuse_map(capped.map, packs[i].gt_eval.spec);
      // Score the capped map directly; empty maps are legal here.
      const SemanticVoxelGrid pred = crop(capped.fused, study_cfg.close_bounds);
      const SemanticVoxelGrid gt = crop(packs[i].gt_eval, study_cfg.close_bounds);
      ious.push_back(iou(pred, gt));
    }
    rows.push_back({std::to_string(level), sample_mean(ious), sample_stddev(ious)});
  }
  return rows;
}

void write_study_csv(const std::vector<StudyRow>& rows, const std::string& path) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const StudyRow& row : rows)
    cells.push_back({row.level, io::fmt_double(row.mean), io::fmt_double(row.stddev)});
  io::write_csv(path, {"level", "mean", "std"}, cells);
}

void write_study_svg(const std::vector<StudyRow>& rows, const std::string& metric_name,
                     const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("no study rows to plot");
  const double width = 640, height = 400, ml = 70, mr = 20, mt = 40, mb = 60;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double lo = rows[0].mean, hi = rows[0].mean;
  for (const StudyRow& r : rows) {
    lo = std::min(lo, r.mean - r.stddev);
    hi = std::max(hi, r.mean + r.stddev);
  }
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto xat = [&](std::size_t i) {
    return rows.size() == 1 ? ml + pw / 2
                            : ml + pw * static_cast<double>(i) /
                                       static_cast<double>(rows.size() - 1);
  };
  auto yat = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\">\n",
                width, height, width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
                "text-anchor=\"middle\">%s</text>\n",
                width / 2, metric_name.c_str());
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt,
                ml, mt + ph);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml,
                mt + ph, ml + pw, mt + ph);
  svg += buf;
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" "
                  "text-anchor=\"end\">%.4g</text>\n",
                  ml - 6, yat(v) + 4, v);
    svg += buf;
  }
  // Error bars, then the mean polyline with markers and x labels.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].stddev > 0.0) {
      std::snprintf(buf, sizeof buf,
                    "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#888\"/>\n", xat(i),
                    yat(rows[i].mean - rows[i].stddev), xat(i), yat(rows[i].mean + rows[i].stddev));
      svg += buf;
    }
  }
  std::string poly = "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%g,%g", i ? " " : "", xat(i), yat(rows[i].mean));
    poly += buf;
  }
  poly += "\"/>\n";
  svg += poly;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%g\" cy=\"%g\" r=\"3\" fill=\"#1f6fb2\"/>\n",
                  xat(i), yat(rows[i].mean));
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
                  "text-anchor=\"middle\">%s</text>\n",
                  xat(i), mt + ph + 20, rows[i].level.c_str());
    svg += buf;
  }
  svg += "</svg>\n";
  io::write_text(svg, path);
}

namespace {

std::string scene_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%03d", index);
  return buf;
}

std::string resolution_tag(double v) { return io::fmt_double(v); }

[[noreturn]] void stage_error(const std::string& stage, const std::exception& e) {
  throw std::runtime_error(stage + ": " + e.what());
}

}  // namespace

void cmd_gen_scenes(const PipelineConfig& cfg, int count, std::uint64_t seed,
                    const std::string& out_dir) {
  cfg.validate();
  if (count < 0) throw std::invalid_argument("scene count must be >= 0");
  fs::create_directories(out_dir);

  io::json manifest;
  manifest["seed"] = seed;
  manifest["count"] = count;
  manifest["scenes"] = io::json::array();
  for (int i = 0; i < count; ++i) {
    const SceneSpec scene = gen_scene(derived_seed(seed, static_cast<std::uint64_t>(i)), cfg.scene);
    const std::string name = scene_name(i);
    const std::string scene_file = name + ".json";
    io::write_json(io::scene_to_json(scene), out_dir + "/" + scene_file);

    io::json entry;
    entry["scene"] = scene_file;
    entry["seed"] = scene.seed;
    entry["gt_grids"] = io::json::object();
    for (double res : cfg.resolutions) {
      const SemanticVoxelGrid grid = rasterize_gt(scene, GridSpec::covering(cfg.scene.bounds, res));
      const std::string grid_file = name + "_gt_" + resolution_tag(res) + ".ocg";
      io::save_grid(grid, out_dir + "/" + grid_file);
      entry["gt_grids"][resolution_tag(res)] = grid_file;
    }
    entry["objects"] = io::json::array();
    const std::vector<ObjectObservation> objects = gt_observations(cfg, scene);
    for (std::size_t oi = 0; oi < objects.size(); ++oi) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%s_obj_%02zu.ply", name.c_str(), oi);
      io::save_ply(objects[oi].cloud, out_dir + "/" + buf);
      entry["objects"].push_back(buf);
    }
    manifest["scenes"].push_back(std::move(entry));
  }
  io::write_json(manifest, out_dir + "/manifest.json");
}

namespace {

void write_curve_csv(const TrainCurve& curve, const std::string& value_name,
                     const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(curve.epoch_loss.size());
  for (std::size_t e = 0; e < curve.epoch_loss.size(); ++e)
    rows.push_back({std::to_string(e), io::fmt_double(curve.epoch_loss[e])});
  io::write_csv(path, {"epoch", value_name}, rows);
}

// Constant detection diagnostic: mean matched-pair L1 box loss of the noisy
// detector against gt over the training scenes. The detector has no trainable
// parameters, so this does not change across epochs.
double detection_loss(const PipelineConfig& cfg, const std::vector<ScenePack>& packs) {
  std::vector<BoxParams> pred, gt;
  for (const ScenePack& pack : packs) {
    DetectorNoise noise = cfg.noise;
    noise.seed = derived_seed(pack.scene.seed ^ cfg.noise.seed, kDetectorSalt);
    const std::vector<OrientedBox3> detected = oracle_detect(pack.scene, noise);
    std::vector<OrientedBox3> gt_boxes;
    for (const SceneObject& obj : pack.scene.objects) gt_boxes.push_back(obj.box);
    const MatchResult match = match_objects(detected, gt_boxes);
    for (const auto& [pi, gi] : match.pairs) {
      pred.push_back(box_params(detected[static_cast<std::size_t>(pi)]));
      gt.push_back(box_params(gt_boxes[static_cast<std::size_t>(gi)]));
    }
  }
  return pred.empty() ? 0.0 : l1_box_loss(pred, gt);
}

}  // namespace

void cmd_train(const PipelineConfig& cfg, const std::string& task, bool joint,
               const std::string& out_dir) {
  cfg.validate();
  if (!joint && task != "occ" && task != "fold")
    throw std::invalid_argument("unknown training task: " + task);
  fs::create_directories(out_dir);
  const std::vector<ScenePack> packs = train_packs(cfg);

  if (!joint) {
    if (task == "occ") {
      TrainCurve curve;
      const OccupancyHead head = train_occupancy(cfg, packs, curve);
      io::save_occ_head(head, out_dir + "/occ_head.och");
      write_curve_csv(curve, "mean_focal", out_dir + "/occ_loss.csv");
    } else {
      TrainCurve curve;
      const FoldingDecoder decoder = train_fold(cfg, packs, curve);
      io::save_folding(decoder, out_dir + "/folding.fld");
      write_curve_csv(curve, "mean_chamfer", out_dir + "/fold_loss.csv");
    }
    return;
  }

  // Joint mode: the two heads share the feature volumes but no parameters, so
  // alternating their batches equals training them in sequence; task weights
  // scale the learning rates and a zero weight skips the task entirely.
  TrainCurve occ_curve, fold_curve;
  if (cfg.joint_weights.w_sem > 0.0) {
    PipelineConfig occ_cfg = cfg;
    occ_cfg.occ_train.learning_rate *= cfg.joint_weights.w_sem;
    const OccupancyHead head = train_occupancy(occ_cfg, packs, occ_curve);
    io::save_occ_head(head, out_dir + "/occ_head.och");
    write_curve_csv(occ_curve, "mean_focal", out_dir + "/occ_loss.csv");
  }
  if (cfg.joint_weights.w_surf > 0.0) {
    PipelineConfig fold_cfg = cfg;
    fold_cfg.fold_train.learning_rate *= cfg.joint_weights.w_surf;
    const FoldingDecoder decoder = train_fold(fold_cfg, packs, fold_curve);
    io::save_folding(decoder, out_dir + "/folding.fld");
    write_curve_csv(fold_curve, "mean_chamfer", out_dir + "/fold_loss.csv");
  }

  const double det = detection_loss(cfg, packs);
  const std::size_t epochs = std::max(occ_curve.epoch_loss.size(), fold_curve.epoch_loss.size());
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < epochs; ++e) {
    // Shorter curves hold their final value once their task has finished.
    const double sem = occ_curve.epoch_loss.empty()
                           ? 0.0
                           : occ_curve.epoch_loss[std::min(e, occ_curve.epoch_loss.size() - 1)];
    const double surf = fold_curve.epoch_loss.empty()
                            ? 0.0
                            : fold_curve.epoch_loss[std::min(e, fold_curve.epoch_loss.size() - 1)];
    const double total = joint_loss(sem, det, surf, cfg.joint_weights);
    rows.push_back({std::to_string(e), io::fmt_double(sem), io::fmt_double(det),
                    io::fmt_double(surf), io::fmt_double(total)});
  }
  io::write_csv(out_dir + "/joint_loss.csv", {"epoch", "sem_loss", "det_loss", "surf_loss", "joint_loss"},
                rows);
}

void cmd_infer(const PipelineConfig& cfg, const std::string& scene_path,
               const std::string& models_dir, const std::string& out_dir,
               const InferOptions& options) {
  cfg.validate();
  SceneSpec scene;
  try {
    scene = io::scene_from_json(io::read_json(scene_path));
  } catch (const std::exception& e) {
    stage_error("load-scene", e);
  }

  ScenePack pack;
  try {
    pack = build_scene_pack(cfg, scene);
  } catch (const std::exception& e) {
    stage_error("encode-features", e);
  }

  OccupancyHead head;
  FoldingDecoder decoder;
  try {
    if (!options.oracle_occupancy) head = io::load_occ_head(models_dir + "/occ_head.och");
    if (!options.oracle_shapes) decoder = io::load_folding(models_dir + "/folding.fld");
  } catch (const std::exception& e) {
    stage_error("load-models", e);
  }

  InferResult result;
  try {
    result = infer_scene(cfg, pack, options.oracle_occupancy ? nullptr : &head,
                         options.oracle_shapes ? nullptr : &decoder, options);
  } catch (const std::exception& e) {
    stage_error("inference", e);
  }

  try {
    fs::create_directories(out_dir + "/objects");
    io::save_grid(result.coarse, out_dir + "/coarse.ocg");
    io::write_json(io::boxes_to_json(result.boxes), out_dir + "/boxes.json");
    for (std::size_t i = 0; i < result.map.objects.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "obj_%03zu.ply", i);
      io::save_ply(result.map.objects[i].cloud, out_dir + "/objects/" + buf);
    }
    io::save_grid(result.fused, out_dir + "/fused.ocg");
  } catch (const std::exception& e) {
    stage_error("write-outputs", e);
  }
}

void cmd_eval(const PipelineConfig& cfg, const std::string& pred_path, const std::string& gt_path,
              const std::string& bounds_name, double eval_voxel, const std::string& out_dir) {
  cfg.validate();
  if (bounds_name != "close" && bounds_name != "full")
    throw std::invalid_argument("bounds must be 'close' or 'full'");
  EvalConfig ecfg;
  ecfg.eval_voxel = eval_voxel > 0.0 ? eval_voxel : cfg.eval_voxel;

  SemanticVoxelGrid gt;
  std::vector<ObjectObservation> gt_objects;
  if (gt_path.size() > 5 && gt_path.substr(gt_path.size() - 5) == ".json") {
    const SceneSpec scene = io::scene_from_json(io::read_json(gt_path));
    gt = rasterize_gt(scene, GridSpec::covering(scene.bounds, ecfg.eval_voxel));
    gt_objects = gt_observations(cfg, scene);
  } else {
    gt = io::load_grid(gt_path);
  }

  SemanticVoxelGrid pred;
  std::vector<ObjectObservation> pred_objects;
  if (fs::is_directory(pred_path)) {
    pred = io::load_grid(pred_path + "/fused.ocg");
    const std::vector<OrientedBox3> boxes =
        io::boxes_from_json(io::read_json(pred_path + "/boxes.json"));
    std::vector<std::string> ply_files;
    if (fs::is_directory(pred_path + "/objects")) {
      for (const auto& entry : fs::directory_iterator(pred_path + "/objects"))
        if (entry.path().extension() == ".ply") ply_files.push_back(entry.path().string());
      std::sort(ply_files.begin(), ply_files.end());
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      ObjectObservation obs;
      obs.box = boxes[i];
      if (i < ply_files.size()) obs.cloud = io::load_ply(ply_files[i]);
      pred_objects.push_back(std::move(obs));
    }
  } else {
    pred = io::load_grid(pred_path);
  }

  const bool close = bounds_name == "close";
  const SceneBounds bounds = scope_bounds(cfg, gt, close);
  const MetricsReport report = evaluate(pred, pred_objects, gt, gt_objects, bounds,
                                        close ? "close_range" : "full_range", ecfg);

  fs::create_directories(out_dir);
  io::write_json(io::report_to_json(report), out_dir + "/report.json");
  std::map<int, std::string> names;
  for (int c = 1; c <= kClassCount; ++c) names[c] = class_name(c);
  io::write_text(report_table(report, names), out_dir + "/report.txt");
}

void cmd_ablate(const PipelineConfig& cfg, const std::string& study, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  if (study == "pooling") {
    const std::vector<StudyRow> rows = pooling_study(cfg);
    write_study_csv(rows, out_dir + "/pooling.csv");
    write_study_svg(rows, "test chamfer by pooling mode", out_dir + "/pooling.svg");
    const std::vector<StudyRow> robustness = pooling_robustness_study(cfg);
    write_study_csv(robustness, out_dir + "/pooling_robustness.csv");
    write_study_svg(robustness, "feature shift under box noise", out_dir + "/pooling_robustness.svg");
  } else if (study == "foldsize") {
    const std::vector<ScenePack> training = train_packs(cfg);
    TrainCurve curve;
    const FoldingDecoder decoder = train_fold(cfg, training, curve);
    const std::vector<StudyRow> rows = foldsize_study(cfg, decoder);
    write_study_csv(rows, out_dir + "/foldsize.csv");
    write_study_svg(rows, "density-normalized chamfer by fold size", out_dir + "/foldsize.svg");
  } else if (study == "boxcount") {
    const std::vector<StudyRow> rows = boxcount_study(cfg);
    write_study_csv(rows, out_dir + "/boxcount.csv");
    write_study_svg(rows, "close-range fused IOU by box budget", out_dir + "/boxcount.svg");
  } else {
    throw std::invalid_argument("unknown study: " + study);
  }
}

}  // namespace adaocc::pipeline
