#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "adaocc/feature_volume.hpp"
#include "adaocc/folding.hpp"
#include "adaocc/geometry.hpp"
#include "adaocc/metrics.hpp"
#include "adaocc/occ_head.hpp"
#include "adaocc/scene_sim.hpp"
#include "adaocc/voxel.hpp"

// File formats. All binary formats are little-endian regardless of host; all
// writers are deterministic so identical data produces identical bytes.
namespace adaocc::io {

using json = nlohmann::ordered_json;

// Labeled voxel grid, OCCGRID v1: magic "OCG1", u32 nx, ny, nz,
// f64 origin[3], f64 voxel_size, u32 class_count, then nx*ny*nz u8 labels in
// x-fastest order.
void save_grid(const SemanticVoxelGrid& grid, const std::string& path);
SemanticVoxelGrid load_grid(const std::string& path);

// Feature volume, FEATVOL v1: magic "FVL1", u32 nx, ny, nz, C,
// f64 origin[3], f64 voxel_size, then f32 data x-fastest, channel-innermost.
void save_volume(const FeatureVolume& vol, const std::string& path);
FeatureVolume load_volume(const std::string& path);

// Folding decoder, FOLD v1: magic "FLD1", u32 code_dim, hidden_dim,
// grid_points, then stage-1 and stage-2 layers in order; each layer is its
// row-major f64 weight matrix followed by its f64 bias vector. Layer shapes
// are implied by the header dims.
void save_folding(const FoldingDecoder& decoder, const std::string& path);
FoldingDecoder load_folding(const std::string& path);

// Occupancy head, OCCH v1: magic "OCH1", u32 feature_dim, hidden_dim,
// class_count, temporal (0/1), then the network layers as in FOLD v1.
void save_occ_head(const OccupancyHead& head, const std::string& path);
OccupancyHead load_occ_head(const std::string& path);

// ASCII PLY with float32 vertex x, y, z and, when the cloud carries a class,
// a "comment class_id <n>" header line. Coordinates are printed with %.9g,
// enough digits to round-trip float32 exactly.
void save_ply(const PointCloud& cloud, const std::string& path);
PointCloud load_ply(const std::string& path);

// Box <-> JSON with keys {class_id, score, translation, rotation, size};
// rotation is [qx, qy, qz, qw].
json box_to_json(const OrientedBox3& box);
OrientedBox3 box_from_json(const json& j);

json boxes_to_json(const std::vector<OrientedBox3>& boxes);
std::vector<OrientedBox3> boxes_from_json(const json& j);

// Scene <-> JSON in canonical key order. Objects are boxes plus a "shape"
// key; walls are plain boxes.
json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const json& j);

json report_to_json(const MetricsReport& report);

// Whole-file JSON helpers; writing appends a trailing newline.
void write_json(const json& j, const std::string& path);
json read_json(const std::string& path);

// CSV with a header row; numeric cells should be formatted with fmt_double
// so reruns are byte-identical.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Shortest decimal form that parses back to exactly the same double.
std::string fmt_double(double v);

std::string read_text(const std::string& path);
void write_text(const std::string& text, const std::string& path);

}  // namespace adaocc::io
