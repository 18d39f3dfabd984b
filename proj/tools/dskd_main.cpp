// Command-line front end for the sense-distillation pipeline.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "dskd/pipeline.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  dskd::u64 seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "master seed override")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads, "worker threads");
}

dskd::RunConfig make_config(const CommonArgs& args) {
  dskd::FlatConfig fc;
  if (!args.config_path.empty()) fc = dskd::FlatConfig::load(args.config_path);
  if (args.seed_set) fc.set("seed", std::to_string(args.seed));
  if (!args.out_dir.empty()) fc.set("out", args.out_dir);
  if (args.threads > 0) fc.set("threads", std::to_string(args.threads));
  return dskd::parse_run_config(fc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DSKD: sense knowledge distillation for toy decoders"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string mode_str = "dskd";
  std::string axis;
  std::string checkpoint_path, evalset_path, per_item_csv;

  auto* c_pipeline = app.add_subcommand("pipeline", "run the full pipeline");
  add_common(c_pipeline, args);
  auto* c_gen = app.add_subcommand("gen-corpus", "generate world and corpora");
  add_common(c_gen, args);
  auto* c_teacher = app.add_subcommand("train-teacher", "train the teacher");
  add_common(c_teacher, args);
  auto* c_collect =
      app.add_subcommand("collect", "collect contextual embeddings");
  add_common(c_collect, args);
  auto* c_dict = app.add_subcommand("build-dict", "cluster sense dictionary");
  add_common(c_dict, args);
  auto* c_rel = app.add_subcommand("expand-relations",
                                   "ingest and expand lexical relations");
  add_common(c_rel, args);
  auto* c_compose =
      app.add_subcommand("compose", "compose word-level sense entries");
  add_common(c_compose, args);
  auto* c_train = app.add_subcommand("train", "train a student");
  add_common(c_train, args);
  c_train->add_option("--mode", mode_str, "kd or dskd")
      ->check(CLI::IsMember({"kd", "dskd"}));
  auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(c_eval, args);
  c_eval->add_option("--checkpoint", checkpoint_path, "model checkpoint");
  c_eval->add_option("--eval-set", evalset_path, "eval set json");
  c_eval->add_option("--csv", per_item_csv, "per-item log-likelihood csv");
  auto* c_sweep = app.add_subcommand("sweep", "run an ablation sweep");
  add_common(c_sweep, args);
  c_sweep->add_option("--axis", axis, "sweep axis")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_pipeline->parsed()) {
      dskd::run_pipeline(make_config(args));
    } else if (c_gen->parsed()) {
      dskd::cmd_gen_corpus(make_config(args));
    } else if (c_teacher->parsed()) {
      dskd::cmd_train_teacher(make_config(args));
    } else if (c_collect->parsed()) {
      dskd::cmd_collect(make_config(args));
    } else if (c_dict->parsed()) {
      dskd::cmd_build_dict(make_config(args));
    } else if (c_rel->parsed()) {
      dskd::cmd_expand_relations(make_config(args));
    } else if (c_compose->parsed()) {
      dskd::cmd_compose(make_config(args));
    } else if (c_train->parsed()) {
      dskd::cmd_train(make_config(args), mode_str == "kd"
                                             ? dskd::TrainMode::KD
                                             : dskd::TrainMode::DSKD);
    } else if (c_eval->parsed()) {
      dskd::RunConfig cfg = make_config(args);
      dskd::RunPaths p = dskd::RunPaths::in(cfg.out_dir);
      if (checkpoint_path.empty()) checkpoint_path = p.student_dskd_ckpt;
      if (evalset_path.empty()) evalset_path = p.evalset_json;
      dskd::cmd_eval(checkpoint_path, evalset_path, per_item_csv);
    } else if (c_sweep->parsed()) {
      dskd::run_sweep(make_config(args), axis);
    }
  } catch (const dskd::validation_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
