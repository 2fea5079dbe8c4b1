// Command-line front end. Talks to the library exclusively through the C API.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "adaocc.h"

namespace {

// Config comes from --config <file> or --config-json <inline>; empty selects
// the built-in defaults.
struct ConfigArg {
  std::string path;
  std::string inline_json;

  std::string resolve() const {
    if (!inline_json.empty()) return inline_json;
    if (path.empty()) return {};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void attach(CLI::App* app) {
    app->add_option("--config", path, "pipeline config JSON file");
    app->add_option("--config-json", inline_json, "inline pipeline config JSON")
        ->excludes(app->get_option("--config"));
  }
};

int run(adaocc_status status) {
  if (status == ADAOCC_OK) return 0;
  std::fprintf(stderr, "error: %s\n", adaocc_last_error());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive-resolution occupancy pipeline"};
  app.require_subcommand(1);

  // gen-scenes
  auto* gen = app.add_subcommand("gen-scenes", "generate scenes, gt grids, and object clouds");
  ConfigArg gen_cfg;
  gen_cfg.attach(gen);
  int gen_count = -1;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "scenes";
  gen->add_option("--count", gen_count, "number of scenes (default: config scene_count)");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "base seed (default: config seed)");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train the occupancy head or the folding decoder");
  ConfigArg train_cfg;
  train_cfg.attach(train);
  std::string train_task = "occ";
  bool train_joint = false;
  std::string train_out = "models";
  train->add_option("--task", train_task, "occ | fold")
      ->check(CLI::IsMember({"occ", "fold"}));
  train->add_flag("--joint", train_joint, "train both tasks under the joint loss weights");
  train->add_option("--out", train_out, "output directory")->required();

  // infer
  auto* infer = app.add_subcommand("infer", "run the full pipeline on one scene");
  ConfigArg infer_cfg;
  infer_cfg.attach(infer);
  std::string infer_scene, infer_models, infer_out;
  bool oracle_shapes = false, oracle_occupancy = false;
  infer->add_option("--scene", infer_scene, "scene JSON file")->required();
  infer->add_option("--models", infer_models, "directory with occ_head.och / folding.fld");
  infer->add_flag("--oracle-shapes", oracle_shapes, "use gt surfaces instead of the decoder");
  infer->add_flag("--oracle-occupancy", oracle_occupancy,
                  "use the gt rasterization instead of the occupancy head");
  infer->add_option("--out", infer_out, "output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "score a prediction against ground truth");
  ConfigArg eval_cfg;
  eval_cfg.attach(eval);
  std::string eval_pred, eval_gt, eval_bounds = "close", eval_out;
  double eval_voxel = 0.0;
  eval->add_option("--pred", eval_pred, "infer output directory or .ocg file")->required();
  eval->add_option("--gt", eval_gt, "scene JSON or .ocg file")->required();
  eval->add_option("--bounds", eval_bounds, "close | full")
      ->check(CLI::IsMember({"close", "full"}));
  eval->add_option("--eval-voxel", eval_voxel, "metric resolution (default: config eval_voxel)");
  eval->add_option("--out", eval_out, "output directory")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run an ablation study");
  ConfigArg ablate_cfg;
  ablate_cfg.attach(ablate);
  std::string ablate_study, ablate_out;
  ablate->add_option("--study", ablate_study, "pooling | foldsize | boxcount")
      ->required()
      ->check(CLI::IsMember({"pooling", "foldsize", "boxcount"}));
  ablate->add_option("--out", ablate_out, "output directory")->required();

  try {
    app.parse(argc, argv);

    if (gen->parsed()) {
      return run(adaocc_cmd_gen_scenes(gen_cfg.resolve().c_str(), gen_count,
                                       gen_seed_opt->count() > 0 ? 1 : 0, gen_seed,
                                       gen_out.c_str()));
    }
    if (train->parsed()) {
      return run(adaocc_cmd_train(train_cfg.resolve().c_str(), train_task.c_str(),
                                  train_joint ? 1 : 0, train_out.c_str()));
    }
    if (infer->parsed()) {
      return run(adaocc_cmd_infer(infer_cfg.resolve().c_str(), infer_scene.c_str(),
                                  infer_models.c_str(), infer_out.c_str(), oracle_shapes ? 1 : 0,
                                  oracle_occupancy ? 1 : 0));
    }
    if (eval->parsed()) {
      return run(adaocc_cmd_eval(eval_cfg.resolve().c_str(), eval_pred.c_str(), eval_gt.c_str(),
                                 eval_bounds.c_str(), eval_voxel, eval_out.c_str()));
    }
    if (ablate->parsed()) {
      return run(adaocc_cmd_ablate(ablate_cfg.resolve().c_str(), ablate_study.c_str(),
                                   ablate_out.c_str()));
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems exit 1, --help exits 0
  }
  return 1;
}
