#include "adaocc/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace adaocc::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::string& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

// Sequential little-endian reader over a loaded file.
struct Reader {
  const std::string& path;
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) fail(path, "truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
  void magic(const char* tag) {
    need(4);
    if (std::memcmp(bytes.data() + pos, tag, 4) != 0)
      fail(path, std::string("bad magic, expected ") + tag);
    pos += 4;
  }
  void done() const {
    if (pos != bytes.size()) fail(path, "trailing bytes");
  }
};

void write_file(const std::string& bytes, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "write failed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in && !in.eof()) fail(path, "read failed");
  return buf.str();
}

void put_mlp(std::string& out, const Mlp& mlp) {
  for (const Mlp::Layer& layer : mlp.layers) {
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) put_f64(out, layer.W(r, c));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) put_f64(out, layer.b(r));
  }
}

Mlp get_mlp(Reader& in, const std::vector<int>& layer_sizes) {
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    Mlp::Layer layer;
    layer.W.resize(layer_sizes[l + 1], layer_sizes[l]);
    layer.b.resize(layer_sizes[l + 1]);
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = in.f64();
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b(r) = in.f64();
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

int positive_dim(const Reader& in, std::uint32_t v, const char* what) {
  if (v == 0 || v > 1u << 24) fail(in.path, std::string("unreasonable ") + what);
  return static_cast<int>(v);
}

}  // namespace

void save_grid(const SemanticVoxelGrid& grid, const std::string& path) {
  std::string out;
  out.reserve(44 + grid.labels.size());
  out += "OCG1";
  put_u32(out, static_cast<std::uint32_t>(grid.spec.dims.x()));
  put_u32(out, static_cast<std::uint32_t>(grid.spec.dims.y()));
  put_u32(out, static_cast<std::uint32_t>(grid.spec.dims.z()));
  for (int a = 0; a < 3; ++a) put_f64(out, grid.spec.origin[a]);
  put_f64(out, grid.spec.voxel_size);
  put_u32(out, static_cast<std::uint32_t>(grid.class_count));
  out.append(reinterpret_cast<const char*>(grid.labels.data()), grid.labels.size());
  write_file(out, path);
}

SemanticVoxelGrid load_grid(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader in{path, bytes};
  in.magic("OCG1");
  const int nx = positive_dim(in, in.u32(), "nx");
  const int ny = positive_dim(in, in.u32(), "ny");
  const int nz = positive_dim(in, in.u32(), "nz");
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = in.f64();
  const double voxel_size = in.f64();
  const int class_count = positive_dim(in, in.u32(), "class_count");
  SemanticVoxelGrid grid(GridSpec(origin, voxel_size, {nx, ny, nz}), class_count);
  in.need(grid.labels.size());
  std::memcpy(grid.labels.data(), bytes.data() + in.pos, grid.labels.size());
  in.pos += grid.labels.size();
  in.done();
  return grid;
}

void save_volume(const FeatureVolume& vol, const std::string& path) {
  std::string out;
  out.reserve(52 + 4 * vol.data.size());
  out += "FVL1";
  put_u32(out, static_cast<std::uint32_t>(vol.spec.dims.x()));
  put_u32(out, static_cast<std::uint32_t>(vol.spec.dims.y()));
  put_u32(out, static_cast<std::uint32_t>(vol.spec.dims.z()));
  put_u32(out, static_cast<std::uint32_t>(vol.channels));
  for (int a = 0; a < 3; ++a) put_f64(out, vol.spec.origin[a]);
  put_f64(out, vol.spec.voxel_size);
  for (float v : vol.data) put_f32(out, v);
  write_file(out, path);
}

FeatureVolume load_volume(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader in{path, bytes};
  in.magic("FVL1");
  const int nx = positive_dim(in, in.u32(), "nx");
  const int ny = positive_dim(in, in.u32(), "ny");
  const int nz = positive_dim(in, in.u32(), "nz");
  const int channels = positive_dim(in, in.u32(), "channel count");
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = in.f64();
  const double voxel_size = in.f64();
  FeatureVolume vol(GridSpec(origin, voxel_size, {nx, ny, nz}), channels);
  for (float& v : vol.data) v = in.f32();
  in.done();
  return vol;
}

void save_folding(const FoldingDecoder& decoder, const std::string& path) {
  std::string out = "FLD1";
  put_u32(out, static_cast<std::uint32_t>(decoder.config.code_dim));
  put_u32(out, static_cast<std::uint32_t>(decoder.config.hidden_dim));
  put_u32(out, static_cast<std::uint32_t>(decoder.config.grid_points));
  put_mlp(out, decoder.stage1);
  put_mlp(out, decoder.stage2);
  write_file(out, path);
}

FoldingDecoder load_folding(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader in{path, bytes};
  in.magic("FLD1");
  FoldingDecoder decoder;
  decoder.config.code_dim = positive_dim(in, in.u32(), "code_dim");
  decoder.config.hidden_dim = positive_dim(in, in.u32(), "hidden_dim");
  decoder.config.grid_points = positive_dim(in, in.u32(), "grid_points");
  const int c = decoder.config.code_dim, h = decoder.config.hidden_dim;
  decoder.stage1 = get_mlp(in, {c + 2, h, h, 3});
  decoder.stage2 = get_mlp(in, {c + 3, h, h, 3});
  in.done();
  return decoder;
}

void save_occ_head(const OccupancyHead& head, const std::string& path) {
  std::string out = "OCH1";
  put_u32(out, static_cast<std::uint32_t>(head.config.feature_dim));
  put_u32(out, static_cast<std::uint32_t>(head.config.hidden_dim));
  put_u32(out, static_cast<std::uint32_t>(head.config.class_count));
  put_u32(out, head.config.temporal ? 1u : 0u);
  put_mlp(out, head.net);
  write_file(out, path);
}

OccupancyHead load_occ_head(const std::string& path) {
  const std::string bytes = read_file(path);
  Reader in{path, bytes};
  in.magic("OCH1");
  OccupancyHead head;
  head.config.feature_dim = positive_dim(in, in.u32(), "feature_dim");
  head.config.hidden_dim = positive_dim(in, in.u32(), "hidden_dim");
  head.config.class_count = positive_dim(in, in.u32(), "class_count");
  const std::uint32_t temporal = in.u32();
  if (temporal > 1) fail(path, "temporal flag must be 0 or 1");
  head.config.temporal = temporal == 1;
  head.net = get_mlp(in, {head.input_dim(), head.config.hidden_dim, head.config.class_count + 1});
  in.done();
  return head;
}

void save_ply(const PointCloud& cloud, const std::string& path) {
  std::string out = "ply\nformat ascii 1.0\n";
  if (cloud.class_id) out += "comment class_id " + std::to_string(*cloud.class_id) + "\n";
  out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\nend_header\n";
  char line[96];
  for (const Vec3& p : cloud.points) {
    // %.9g prints enough digits to recover the float32 exactly.
    std::snprintf(line, sizeof line, "%.9g %.9g %.9g\n", static_cast<double>(static_cast<float>(p.x())),
                  static_cast<double>(static_cast<float>(p.y())),
                  static_cast<double>(static_cast<float>(p.z())));
    out += line;
  }
  write_file(out, path);
}

PointCloud load_ply(const std::string& path) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string line;
  if (!std::getline(in, line) || line != "ply") fail(path, "not an ascii ply file");
  if (!std::getline(in, line) || line != "format ascii 1.0") fail(path, "unsupported ply format");

  PointCloud cloud;
  long vertex_count = -1;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") {
      std::string key;
      ls >> key;
      if (key == "class_id") {
        int id = 0;
        if (!(ls >> id)) fail(path, "malformed class_id comment");
        cloud.class_id = id;
      }
    } else if (word == "element") {
      std::string kind;
      ls >> kind >> vertex_count;
      if (kind != "vertex" || vertex_count < 0) fail(path, "unsupported element");
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      if (type != "float") fail(path, "unsupported property type");
      props.push_back(name);
    } else {
      fail(path, "unexpected header line: " + line);
    }
  }
  if (vertex_count < 0) fail(path, "missing vertex element");
  if (props != std::vector<std::string>{"x", "y", "z"}) fail(path, "expected float x y z properties");

  cloud.points.reserve(static_cast<std::size_t>(vertex_count));
  for (long i = 0; i < vertex_count; ++i) {
    if (!std::getline(in, line)) fail(path, "missing vertex data");
    const char* s = line.c_str();
    char* end = nullptr;
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      const float v = std::strtof(s, &end);
      if (end == s) fail(path, "malformed vertex line: " + line);
      p[a] = static_cast<double>(v);
      s = end;
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

json box_to_json(const OrientedBox3& box) {
  json j;
  j["class_id"] = box.class_id;
  j["score"] = box.score;
  j["translation"] = {box.pose.translation.x(), box.pose.translation.y(),
                      box.pose.translation.z()};
  j["rotation"] = {box.pose.rotation.x(), box.pose.rotation.y(), box.pose.rotation.z(),
                   box.pose.rotation.w()};
  j["size"] = {box.size.x(), box.size.y(), box.size.z()};
  return j;
}

namespace {

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

OrientedBox3 box_from_json(const json& j) {
  OrientedBox3 box;
  box.class_id = j.at("class_id").get<int>();
  box.score = j.at("score").get<double>();
  box.pose.translation = vec3_from_json(j.at("translation"));
  const json& r = j.at("rotation");
  if (!r.is_array() || r.size() != 4) throw std::invalid_argument("rotation must be [qx,qy,qz,qw]");
  Quat q(r[3].get<double>(), r[0].get<double>(), r[1].get<double>(), r[2].get<double>());
  const double n2 = q.squaredNorm();
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw std::invalid_argument("rotation must be non-zero");
  // Keep already-unit quaternions bit-exact so round trips are byte-stable.
  if (std::abs(n2 - 1.0) > 1e-9) q.normalize();
  box.pose.rotation = q;
  box.size = vec3_from_json(j.at("size"));
  if (!(box.size.array() > 0.0).all()) throw std::invalid_argument("box size must be positive");
  return box;
}

json boxes_to_json(const std::vector<OrientedBox3>& boxes) {
  json j = json::array();
  for (const OrientedBox3& box : boxes) j.push_back(box_to_json(box));
  return j;
}

std::vector<OrientedBox3> boxes_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("boxes file must hold an array");
  std::vector<OrientedBox3> out;
  out.reserve(j.size());
  for (const json& e : j) out.push_back(box_from_json(e));
  return out;
}

json scene_to_json(const SceneSpec& scene) {
  json j;
  j["seed"] = scene.seed;
  j["bounds"] = {{"min", {scene.bounds.min.x(), scene.bounds.min.y(), scene.bounds.min.z()}},
                 {"max", {scene.bounds.max.x(), scene.bounds.max.y(), scene.bounds.max.z()}}};
  j["ground_z"] = scene.ground_z;
  j["ground_class"] = scene.ground_class;
  j["walls"] = json::array();
  for (const WallSegment& wall : scene.walls) j["walls"].push_back(box_to_json(wall.box));
  j["objects"] = json::array();
  for (const SceneObject& obj : scene.objects) {
    json o = box_to_json(obj.box);
    o["shape"] = shape_name(obj.shape);
    j["objects"].push_back(std::move(o));
  }
  return j;
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec scene;
  scene.seed = j.at("seed").get<std::uint64_t>();
  scene.bounds = SceneBounds(vec3_from_json(j.at("bounds").at("min")),
                             vec3_from_json(j.at("bounds").at("max")));
  scene.ground_z = j.at("ground_z").get<double>();
  scene.ground_class = j.at("ground_class").get<int>();
  for (const json& w : j.at("walls")) {
    const OrientedBox3 box = box_from_json(w);
    scene.walls.push_back({box.class_id, box});
  }
  for (const json& o : j.at("objects")) {
    const OrientedBox3 box = box_from_json(o);
    scene.objects.push_back({box.class_id, parse_shape(o.at("shape").get<std::string>()), box});
  }
  return scene;
}

json report_to_json(const MetricsReport& report) {
  json j;
  j["scope"] = report.scope;
  j["iou"] = report.iou;
  j["miou"] = report.miou;
  json per_class = json::object();
  for (const auto& [id, value] : report.per_class_iou) per_class[std::to_string(id)] = value;
  j["per_class_iou"] = std::move(per_class);
  if (report.hausdorff_mean) j["hausdorff_mean"] = *report.hausdorff_mean;
  else j["hausdorff_mean"] = nullptr;
  j["hausdorff_per_object"] = report.hausdorff_per_object;
  j["counts"] = {{"predicted_objects", report.counts.predicted_objects},
                 {"gt_objects", report.counts.gt_objects},
                 {"unmatched_predicted", report.counts.unmatched_predicted},
                 {"unmatched_gt", report.counts.unmatched_gt}};
  return j;
}

void write_json(const json& j, const std::string& path) {
  write_file(j.dump(2) + "\n", path);
}

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(path, e.what());
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += row[c];
    }
    out += '\n';
  }
  write_file(out, path);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::string& path) { return read_file(path); }

void write_text(const std::string& text, const std::string& path) { write_file(text, path); }

}  // namespace adaocc::io
