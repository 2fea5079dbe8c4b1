#include "adaocc.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "adaocc/io.hpp"
#include "adaocc/metrics.hpp"
#include "adaocc/pipeline.hpp"
#include "adaocc/voxel.hpp"

namespace {

thread_local std::string g_last_error = "no error";

template <class Fn>
adaocc_status wrap(Fn&& fn) {
  try {
    fn();
    return ADAOCC_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return ADAOCC_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return ADAOCC_IO_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ADAOCC_RUNTIME_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return ADAOCC_RUNTIME_ERROR;
  }
}

adaocc_status fail_null(const char* what) {
  g_last_error = std::string(what) + " must not be null";
  return ADAOCC_INVALID_ARGUMENT;
}

adaocc::pipeline::PipelineConfig parse_config(const char* config_json) {
  if (!config_json || !*config_json) return adaocc::pipeline::PipelineConfig{};
  adaocc::io::json j;
  try {
    j = adaocc::io::json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return adaocc::pipeline::config_from_json(j);
}

}  // namespace

struct adaocc_grid {
  adaocc::SemanticVoxelGrid grid;
};

struct adaocc_cloud {
  adaocc::PointCloud cloud;
};

extern "C" {

const char* adaocc_last_error(void) { return g_last_error.c_str(); }

const char* adaocc_version(void) { return "1.0.0"; }

adaocc_status adaocc_grid_load(const char* path, adaocc_grid** out) {
  if (!path) return fail_null("path");
  if (!out) return fail_null("out");
  return wrap([&] { *out = new adaocc_grid{adaocc::io::load_grid(path)}; });
}

adaocc_status adaocc_grid_save(const adaocc_grid* grid, const char* path) {
  if (!grid) return fail_null("grid");
  if (!path) return fail_null("path");
  return wrap([&] { adaocc::io::save_grid(grid->grid, path); });
}

adaocc_status adaocc_grid_dims(const adaocc_grid* grid, uint32_t* nx, uint32_t* ny, uint32_t* nz) {
  if (!grid) return fail_null("grid");
  if (!nx || !ny || !nz) return fail_null("out");
  *nx = static_cast<uint32_t>(grid->grid.spec.dims.x());
  *ny = static_cast<uint32_t>(grid->grid.spec.dims.y());
  *nz = static_cast<uint32_t>(grid->grid.spec.dims.z());
  return ADAOCC_OK;
}

adaocc_status adaocc_grid_voxel_size(const adaocc_grid* grid, double* out) {
  if (!grid) return fail_null("grid");
  if (!out) return fail_null("out");
  *out = grid->grid.spec.voxel_size;
  return ADAOCC_OK;
}

adaocc_status adaocc_grid_origin(const adaocc_grid* grid, double origin[3]) {
  if (!grid) return fail_null("grid");
  if (!origin) return fail_null("origin");
  origin[0] = grid->grid.spec.origin.x();
  origin[1] = grid->grid.spec.origin.y();
  origin[2] = grid->grid.spec.origin.z();
  return ADAOCC_OK;
}

adaocc_status adaocc_grid_class_count(const adaocc_grid* grid, uint32_t* out) {
  if (!grid) return fail_null("grid");
  if (!out) return fail_null("out");
  *out = static_cast<uint32_t>(grid->grid.class_count);
  return ADAOCC_OK;
}

adaocc_status adaocc_grid_label_at(const adaocc_grid* grid, uint32_t i, uint32_t j, uint32_t k,
                                   uint8_t* out) {
  if (!grid) return fail_null("grid");
  if (!out) return fail_null("out");
  return wrap([&] {
    const adaocc::GridSpec& spec = grid->grid.spec;
    if (!spec.contains_cell(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)))
      throw std::invalid_argument("voxel index out of range");
    *out = grid->grid.labels[spec.linear_index(static_cast<int>(i), static_cast<int>(j),
                                               static_cast<int>(k))];
  });
}

adaocc_status adaocc_grid_resample(const adaocc_grid* grid, double target_voxel_size,
                                   adaocc_grid** out) {
  if (!grid) return fail_null("grid");
  if (!out) return fail_null("out");
  return wrap([&] { *out = new adaocc_grid{adaocc::resample(grid->grid, target_voxel_size)}; });
}

adaocc_status adaocc_grid_iou(const adaocc_grid* a, const adaocc_grid* b, double* out) {
  if (!a || !b) return fail_null("grid");
  if (!out) return fail_null("out");
  return wrap([&] { *out = adaocc::iou(a->grid, b->grid); });
}

void adaocc_grid_free(adaocc_grid* grid) { delete grid; }

adaocc_status adaocc_cloud_load(const char* path, adaocc_cloud** out) {
  if (!path) return fail_null("path");
  if (!out) return fail_null("out");
  return wrap([&] { *out = new adaocc_cloud{adaocc::io::load_ply(path)}; });
}

adaocc_status adaocc_cloud_save(const adaocc_cloud* cloud, const char* path) {
  if (!cloud) return fail_null("cloud");
  if (!path) return fail_null("path");
  return wrap([&] { adaocc::io::save_ply(cloud->cloud, path); });
}

adaocc_status adaocc_cloud_size(const adaocc_cloud* cloud, size_t* out) {
  if (!cloud) return fail_null("cloud");
  if (!out) return fail_null("out");
  *out = cloud->cloud.points.size();
  return ADAOCC_OK;
}

adaocc_status adaocc_cloud_point(const adaocc_cloud* cloud, size_t index, double xyz[3]) {
  if (!cloud) return fail_null("cloud");
  if (!xyz) return fail_null("xyz");
  return wrap([&] {
    if (index >= cloud->cloud.points.size())
      throw std::invalid_argument("point index out of range");
    const adaocc::Vec3& p = cloud->cloud.points[index];
    xyz[0] = p.x();
    xyz[1] = p.y();
    xyz[2] = p.z();
  });
}

adaocc_status adaocc_cloud_class_id(const adaocc_cloud* cloud, int* out) {
  if (!cloud) return fail_null("cloud");
  if (!out) return fail_null("out");
  *out = cloud->cloud.class_id.value_or(-1);
  return ADAOCC_OK;
}

void adaocc_cloud_free(adaocc_cloud* cloud) { delete cloud; }

adaocc_status adaocc_cmd_gen_scenes(const char* config_json, int count, int has_seed,
                                    uint64_t seed, const char* out_dir) {
  if (!out_dir) return fail_null("out_dir");
  return wrap([&] {
    const adaocc::pipeline::PipelineConfig cfg = parse_config(config_json);
    adaocc::pipeline::cmd_gen_scenes(cfg, count < 0 ? cfg.scene_count : count,
                                     has_seed ? seed : cfg.seed, out_dir);
  });
}

adaocc_status adaocc_cmd_train(const char* config_json, const char* task, int joint,
                               const char* out_dir) {
  if (!task) return fail_null("task");
  if (!out_dir) return fail_null("out_dir");
  return wrap([&] {
    adaocc::pipeline::cmd_train(parse_config(config_json), task, joint != 0, out_dir);
  });
}

adaocc_status adaocc_cmd_infer(const char* config_json, const char* scene_path,
                               const char* models_dir, const char* out_dir, int oracle_shapes,
                               int oracle_occupancy) {
  if (!scene_path) return fail_null("scene_path");
  if (!models_dir) return fail_null("models_dir");
  if (!out_dir) return fail_null("out_dir");
  return wrap([&] {
    adaocc::pipeline::InferOptions options;
    options.oracle_shapes = oracle_shapes != 0;
    options.oracle_occupancy = oracle_occupancy != 0;
    adaocc::pipeline::cmd_infer(parse_config(config_json), scene_path, models_dir, out_dir,
                                options);
  });
}

adaocc_status adaocc_cmd_eval(const char* config_json, const char* pred_path, const char* gt_path,
                              const char* bounds, double eval_voxel, const char* out_dir) {
  if (!pred_path) return fail_null("pred_path");
  if (!gt_path) return fail_null("gt_path");
  if (!bounds) return fail_null("bounds");
  if (!out_dir) return fail_null("out_dir");
  return wrap([&] {
    adaocc::pipeline::cmd_eval(parse_config(config_json), pred_path, gt_path, bounds, eval_voxel,
                               out_dir);
  });
}

adaocc_status adaocc_cmd_ablate(const char* config_json, const char* study, const char* out_dir) {
  if (!study) return fail_null("study");
  if (!out_dir) return fail_null("out_dir");
  return wrap([&] { adaocc::pipeline::cmd_ablate(parse_config(config_json), study, out_dir); });
}

}  // extern "C"
