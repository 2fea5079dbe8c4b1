#ifndef ADAOCC_H
#define ADAOCC_H

/* C interface to the adaptive-occupancy library.
 *
 * Every function returns an adaocc_status; on failure adaocc_last_error()
 * describes what went wrong (thread-local, valid until the next call on the
 * same thread). Objects returned through out-parameters are owned by the
 * caller and released with the matching _free function.
 *
 * Commands take a pipeline configuration as a JSON string; NULL or "" selects
 * the built-in defaults, and a partial object overrides only the keys it
 * names. Set ADAOCC_THREADS to cap worker threads (0 or unset = hardware
 * concurrency).
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum adaocc_status {
  ADAOCC_OK = 0,
  ADAOCC_INVALID_ARGUMENT = 1, /* bad parameters, malformed config, null pointers */
  ADAOCC_IO_ERROR = 2,         /* file system failures */
  ADAOCC_RUNTIME_ERROR = 3     /* anything else (corrupt data, diverged training, ...) */
} adaocc_status;

/* Message for the most recent failure on this thread; never NULL. */
const char* adaocc_last_error(void);

const char* adaocc_version(void);

/* ---- semantic voxel grids (.ocg) ---- */

typedef struct adaocc_grid adaocc_grid;

adaocc_status adaocc_grid_load(const char* path, adaocc_grid** out);
adaocc_status adaocc_grid_save(const adaocc_grid* grid, const char* path);
adaocc_status adaocc_grid_dims(const adaocc_grid* grid, uint32_t* nx, uint32_t* ny, uint32_t* nz);
adaocc_status adaocc_grid_voxel_size(const adaocc_grid* grid, double* out);
adaocc_status adaocc_grid_origin(const adaocc_grid* grid, double origin[3]);
adaocc_status adaocc_grid_class_count(const adaocc_grid* grid, uint32_t* out);
adaocc_status adaocc_grid_label_at(const adaocc_grid* grid, uint32_t i, uint32_t j, uint32_t k,
                                   uint8_t* out);
/* Integer-factor resolution change (replicate up, majority-label down). */
adaocc_status adaocc_grid_resample(const adaocc_grid* grid, double target_voxel_size,
                                   adaocc_grid** out);
/* Occupied-versus-occupied intersection over union; grids must share a spec. */
adaocc_status adaocc_grid_iou(const adaocc_grid* a, const adaocc_grid* b, double* out);
void adaocc_grid_free(adaocc_grid* grid);

/* ---- point clouds (ASCII PLY) ---- */

typedef struct adaocc_cloud adaocc_cloud;

adaocc_status adaocc_cloud_load(const char* path, adaocc_cloud** out);
adaocc_status adaocc_cloud_save(const adaocc_cloud* cloud, const char* path);
adaocc_status adaocc_cloud_size(const adaocc_cloud* cloud, size_t* out);
adaocc_status adaocc_cloud_point(const adaocc_cloud* cloud, size_t index, double xyz[3]);
/* -1 when the cloud carries no class label. */
adaocc_status adaocc_cloud_class_id(const adaocc_cloud* cloud, int* out);
void adaocc_cloud_free(adaocc_cloud* cloud);

/* ---- pipeline commands ---- */

/* Scenes, per-resolution gt grids, object clouds, and a manifest under
 * out_dir. count < 0 takes the configured scene count; has_seed == 0 takes
 * the configured seed. */
adaocc_status adaocc_cmd_gen_scenes(const char* config_json, int count, int has_seed,
                                    uint64_t seed, const char* out_dir);

/* task is "occ" or "fold"; joint != 0 trains both under the configured task
 * weights and writes a combined loss curve. */
adaocc_status adaocc_cmd_train(const char* config_json, const char* task, int joint,
                               const char* out_dir);

/* Runs the full scene pipeline on a scene JSON. models_dir must hold
 * occ_head.och / folding.fld unless the matching oracle flag is set. */
adaocc_status adaocc_cmd_infer(const char* config_json, const char* scene_path,
                               const char* models_dir, const char* out_dir, int oracle_shapes,
                               int oracle_occupancy);

/* pred_path: an infer output directory or a bare .ocg; gt_path: a scene JSON
 * or a .ocg. bounds is "close" or "full"; eval_voxel <= 0 takes the
 * configured value. Writes report.json and report.txt. */
adaocc_status adaocc_cmd_eval(const char* config_json, const char* pred_path, const char* gt_path,
                              const char* bounds, double eval_voxel, const char* out_dir);

/* study is "pooling", "foldsize", or "boxcount"; writes <study>.csv/.svg. */
adaocc_status adaocc_cmd_ablate(const char* config_json, const char* study, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ADAOCC_H */
