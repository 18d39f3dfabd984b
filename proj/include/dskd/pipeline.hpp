#pragma once

#include <map>
#include <string>
#include <vector>

#include "dskd/config.hpp"
#include "dskd/corpus.hpp"
#include "dskd/distill.hpp"
#include "dskd/eval.hpp"
#include "dskd/report.hpp"

namespace dskd {

// Full run configuration assembled from the flat config file plus CLI
// overrides. Validated as a whole before any stage runs.
struct RunConfig {
  u64 seed = 1;
  int threads = 1;
  std::string out_dir = "out";

  WorldConfig world;
  u32 corpus_sequences = 1200;
  u32 corpus_seq_len = 32;

  ModelConfig teacher_cfg;
  TrainOptions teacher_opt;

  u32 collect_cap = 2000;
  u32 dict_k = 5;
  CompositionConfig comp;

  int student_total = 4;
  int student_trainable = 2;
  TrainOptions student_opt;
  DistillConfig distill;

  u32 eval_sequences = 100;
  u32 eval_seq_len = 32;
  u32 eval_items = 240;
  u32 eval_choices = 4;

  std::map<std::string, std::vector<double>> sweep;
  std::map<std::string, std::string> echo;

  void validate() const;
};

RunConfig parse_run_config(const FlatConfig& fc);

// Canonical artifact locations under the output directory.
struct RunPaths {
  std::string dir;
  std::string world_json, relations_tsv, base_tsv, relations_expanded_tsv;
  std::string corpus_bin, corpus_labels_bin, evalset_json;
  std::string teacher_ckpt, teacher_loss_csv;
  std::string store_bin, dict_bin, dict_composed_bin, keep_rates_csv;
  std::string student_kd_ckpt, student_dskd_ckpt, loss_kd_csv, loss_dskd_csv;
  std::string eval_teacher_csv, eval_kd_csv, eval_dskd_csv;
  std::string metrics_json, senses_svg, summary_txt, manifest_json;

  static RunPaths in(const std::string& dir);
};

struct PipelineResult {
  EvalMetrics teacher, kd, dskd;
};

// One end-to-end run: world, corpus, teacher, store, dictionary, relations,
// composition, KD and DSKD students, evaluation, reports, manifest.
PipelineResult run_pipeline(const RunConfig& cfg);

// One pipeline point per axis value; per-point failures are recorded and the
// sweep continues. Emits an aggregated CSV and an SVG line chart.
void run_sweep(const RunConfig& cfg, const std::string& axis);

// File-based single-stage commands (read inputs from the out directory).
void cmd_gen_corpus(const RunConfig& cfg);
void cmd_train_teacher(const RunConfig& cfg);
void cmd_collect(const RunConfig& cfg);
void cmd_build_dict(const RunConfig& cfg);
void cmd_expand_relations(const RunConfig& cfg);
void cmd_compose(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, TrainMode mode);
EvalMetrics cmd_eval(const std::string& checkpoint_path,
                     const std::string& evalset_path,
                     const std::string& per_item_csv);

}  // namespace dskd
