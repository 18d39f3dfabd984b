#include "dskd/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace dskd {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  world.validate();
  teacher_cfg.validate();
  distill.validate();
  comp.validate();
  if (corpus_seq_len < 2 || corpus_sequences < 1)
    throw validation_error("config: corpus dimensions must be positive");
  if (teacher_cfg.vocab_size != static_cast<int>(world.vocab_size))
    throw validation_error("config: teacher vocab must equal world vocab");
  if (corpus_seq_len > static_cast<u32>(teacher_cfg.max_seq_len))
    throw validation_error("config: corpus.seq_len exceeds teacher max_seq_len");
  if (eval_seq_len + world.m_max > static_cast<u32>(teacher_cfg.max_seq_len))
    throw validation_error(
        "config: eval.seq_len + m_max exceeds teacher max_seq_len");
  if (student_total < 1 || student_trainable < 0 ||
      student_trainable > student_total)
    throw validation_error("config: bad student layer counts");
  if (student_total > teacher_cfg.num_layers)
    throw validation_error("config: student.total_layers " +
                           std::to_string(student_total) +
                           " exceeds teacher layers " +
                           std::to_string(teacher_cfg.num_layers));
  if (teacher_opt.steps < 1 || teacher_opt.batch_size < 1 ||
      student_opt.steps < 1 || student_opt.batch_size < 1)
    throw validation_error("config: training steps/batch must be positive");
  if (collect_cap < 1) throw validation_error("config: collect.cap must be >= 1");
  if (dict_k < 1) throw validation_error("config: dict.k must be >= 1");
  if (eval_choices < 2)
    throw validation_error("config: eval.num_choices must be >= 2");
}

RunConfig parse_run_config(const FlatConfig& fc) {
  RunConfig c;
  c.seed = fc.get_u64("seed", 1);
  c.threads = fc.get_int("threads", 1);
  c.out_dir = fc.get_str("out", "out");

  c.world.vocab_size = static_cast<u32>(fc.get_int("corpus.vocab_size", 200));
  c.world.content_words =
      static_cast<u32>(fc.get_int("corpus.content_words", 80));
  c.world.polysemous = static_cast<u32>(fc.get_int("corpus.polysemous", 24));
  c.world.senses = static_cast<u32>(fc.get_int("corpus.senses", 2));
  c.world.multi_words = static_cast<u32>(fc.get_int("corpus.multi_words", 12));
  c.world.multi_len_max =
      static_cast<u32>(fc.get_int("corpus.multi_len_max", 3));
  c.world.synonym_pairs =
      static_cast<u32>(fc.get_int("corpus.synonym_pairs", 20));
  c.world.antonym_pairs =
      static_cast<u32>(fc.get_int("corpus.antonym_pairs", 12));
  c.world.negation_entries =
      static_cast<u32>(fc.get_int("corpus.negation_entries", 6));
  c.world.signal_ratio = fc.get_double("corpus.signal_ratio", 0.7);
  c.world.m_max = static_cast<u32>(fc.get_int("compose.m_max", 3));
  c.world.seed = c.seed;
  c.corpus_sequences =
      static_cast<u32>(fc.get_int("corpus.num_sequences", 1200));
  c.corpus_seq_len = static_cast<u32>(fc.get_int("corpus.seq_len", 32));

  c.teacher_cfg.num_layers = fc.get_int("teacher.layers", 8);
  c.teacher_cfg.hidden_dim = fc.get_int("teacher.hidden_dim", 64);
  c.teacher_cfg.num_heads = fc.get_int("teacher.heads", 4);
  c.teacher_cfg.ffn_dim = fc.get_int("teacher.ffn_dim", 256);
  c.teacher_cfg.vocab_size = static_cast<int>(c.world.vocab_size);
  c.teacher_cfg.max_seq_len =
      fc.get_int("teacher.max_seq_len",
                 static_cast<int>(c.corpus_seq_len + c.world.m_max + 4));
  c.teacher_cfg.use_rotary = fc.get_bool("teacher.rotary", false);
  c.teacher_cfg.seed = mix_seed(c.seed, 0x7EAC11ull);
  c.teacher_opt.steps = fc.get_int("teacher.steps", 800);
  c.teacher_opt.batch_size = fc.get_int("teacher.batch_size", 12);
  c.teacher_opt.lr = fc.get_double("teacher.lr", 1e-3);
  c.teacher_opt.seed = mix_seed(c.seed, 0x7E54ull);
  c.teacher_opt.threads = c.threads;

  c.collect_cap = static_cast<u32>(fc.get_int("collect.cap", 2000));
  c.dict_k = static_cast<u32>(fc.get_int("dict.k", 5));
  c.comp.m_max = c.world.m_max;
  c.comp.k = c.dict_k;

  c.student_total = fc.get_int("student.total_layers", 4);
  c.student_trainable = fc.get_int("student.trainable_layers", 2);
  c.student_opt.steps = fc.get_int("student.steps", 450);
  c.student_opt.batch_size = fc.get_int("student.batch_size", 12);
  c.student_opt.lr = fc.get_double("student.lr", 1e-3);
  c.student_opt.seed = mix_seed(c.seed, 0x57D0ull);
  c.student_opt.threads = c.threads;

  c.distill.alpha = fc.get_double("distill.alpha", 1.0);
  c.distill.t_kl = fc.get_double("distill.t_kl", 2.0);
  c.distill.kappa = fc.get_int("distill.kappa", 5);
  c.distill.beta_p = fc.get_double("distill.beta_p", 1.0);
  c.distill.beta_n = fc.get_double("distill.beta_n", 1.0);
  c.distill.gamma = fc.get_double("distill.gamma", 1.0);
  c.distill.supervision_fraction =
      fc.get_double("distill.supervision_fraction", 1.0);
  c.distill.seed = mix_seed(c.seed, 0x5EEDull);

  c.eval_sequences = static_cast<u32>(fc.get_int("eval.num_sequences", 100));
  c.eval_seq_len = static_cast<u32>(fc.get_int("eval.seq_len", 32));
  c.eval_items = static_cast<u32>(fc.get_int("eval.num_items", 240));
  c.eval_choices = static_cast<u32>(fc.get_int("eval.num_choices", 4));

  for (const char* axis : {"total_layers", "trainable_layers", "k", "kappa",
                           "beta", "alpha"}) {
    std::string key = std::string("sweep.") + axis;
    if (fc.has(key)) c.sweep[axis] = fc.get_list(key);
  }
  c.echo = fc.entries();
  return c;
}

RunPaths RunPaths::in(const std::string& dir) {
  RunPaths p;
  p.dir = dir;
  auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
  p.world_json = at("world.json");
  p.relations_tsv = at("relations.tsv");
  p.base_tsv = at("base.tsv");
  p.relations_expanded_tsv = at("relations_expanded.tsv");
  p.corpus_bin = at("corpus.bin");
  p.corpus_labels_bin = at("corpus_labels.bin");
  p.evalset_json = at("eval_set.json");
  p.teacher_ckpt = at("teacher.ckpt");
  p.teacher_loss_csv = at("teacher_loss.csv");
  p.store_bin = at("store.bin");
  p.dict_bin = at("dict.bin");
  p.dict_composed_bin = at("dict_composed.bin");
  p.keep_rates_csv = at("keep_rates.csv");
  p.student_kd_ckpt = at("student_kd.ckpt");
  p.student_dskd_ckpt = at("student_dskd.ckpt");
  p.loss_kd_csv = at("loss_kd.csv");
  p.loss_dskd_csv = at("loss_dskd.csv");
  p.eval_teacher_csv = at("eval_teacher.csv");
  p.eval_kd_csv = at("eval_kd.csv");
  p.eval_dskd_csv = at("eval_dskd.csv");
  p.metrics_json = at("metrics.json");
  p.senses_svg = at("senses_pca.svg");
  p.summary_txt = at("summary.txt");
  p.manifest_json = at("manifest.json");
  return p;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

namespace {

template <class F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const validation_error& e) {
    throw validation_error(std::string("stage ") + name + ": " + e.what());
  } catch (const io_error& e) {
    throw io_error(std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
  }
}

World stage_world(const RunConfig& cfg, const RunPaths& p, RunManifest* man) {
  World world = build_world(cfg.world);
  save_vocab_spec(world.spec, p.world_json);
  write_text_file(p.relations_tsv, world.relations_tsv);
  write_text_file(p.base_tsv, world.base_tsv);
  if (man) {
    man->record(p.world_json);
    man->record(p.relations_tsv);
    man->record(p.base_tsv);
  }
  return world;
}

Corpus stage_corpus(const RunConfig& cfg, const VocabSpec& spec,
                    const RunPaths& p, RunManifest* man) {
  Corpus corpus = generate_corpus(spec, cfg.corpus_sequences, cfg.corpus_seq_len);
  save_corpus(corpus, p.corpus_bin, p.corpus_labels_bin);
  if (man) {
    man->record(p.corpus_bin);
    man->record(p.corpus_labels_bin);
  }
  return corpus;
}

EvalSet stage_evalset(const RunConfig& cfg, const VocabSpec& spec,
                      const RunPaths& p, RunManifest* man) {
  EvalSet es = make_eval_set(spec, cfg.eval_sequences, cfg.eval_seq_len,
                             cfg.eval_items, cfg.eval_choices, 0);
  save_eval_set(es, p.evalset_json);
  if (man) man->record(p.evalset_json);
  return es;
}

ToyDecoder<float> stage_teacher(const RunConfig& cfg, const Corpus& corpus,
                                const RunPaths& p, RunManifest* man) {
  ToyDecoder<float> teacher = init_decoder<float>(cfg.teacher_cfg);
  auto trace = train_lm(teacher, corpus, cfg.teacher_opt);
  save_checkpoint(teacher, p.teacher_ckpt);
  std::ofstream csv(p.teacher_loss_csv);
  if (!csv) throw io_error("cannot open for write: " + p.teacher_loss_csv);
  csv << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", trace[i]);
    csv << i << "," << buf << "\n";
  }
  csv.close();
  if (man) {
    man->record(p.teacher_ckpt);
    man->record(p.teacher_loss_csv);
  }
  return teacher;
}

EmbeddingStore stage_collect(const RunConfig& cfg,
                             const ToyDecoder<float>& teacher,
                             const Corpus& corpus, const RunPaths& p,
                             RunManifest* man) {
  EmbeddingStore store = collect(teacher, corpus, cfg.collect_cap,
                                 mix_seed(cfg.seed, 0xC011ull), cfg.threads);
  save_store(store, p.store_bin);
  if (man) man->record(p.store_bin);
  return store;
}

SenseDict stage_dict(const RunConfig& cfg, const EmbeddingStore& store,
                     const RunPaths& p, RunManifest* man) {
  SenseDict dict = build_sense_dict(store, cfg.dict_k,
                                    mix_seed(cfg.seed, 0xD1C7ull), cfg.threads);
  save_sense_dict(dict, p.dict_bin);
  if (man) man->record(p.dict_bin);
  return dict;
}

RelationSet stage_relations(const RunPaths& p, RunManifest* man) {
  RelationSet rels = ingest(p.relations_tsv, p.base_tsv);
  std::vector<std::string> log;
  RelationSet expanded = expand_morphological(rels, &log);
  for (const auto& msg : log) std::cerr << "[expand-relations] " << msg << "\n";
  save_relations_tsv(expanded, p.relations_expanded_tsv);
  if (man) man->record(p.relations_expanded_tsv);
  return expanded;
}

SenseDict stage_compose(const RunConfig& cfg, const SenseDict& dict,
                        const RelationSet& rels, const VocabSpec& spec,
                        const RunPaths& p, RunManifest* man) {
  std::vector<std::string> log;
  CompositionConfig comp = cfg.comp;
  comp.k = cfg.dict_k;
  SenseDict composed = populate_word_senses(dict, rels, spec, comp, &log);
  for (const auto& msg : log) std::cerr << "[compose] " << msg << "\n";
  save_sense_dict(composed, p.dict_composed_bin);
  std::vector<u32> ms;
  for (u32 m = 1; m <= std::max<u32>(5, comp.m_max); ++m) ms.push_back(m);
  write_keep_rate_csv(p.keep_rates_csv, rels, spec, ms);
  if (man) {
    man->record(p.dict_composed_bin);
    man->record(p.keep_rates_csv);
  }
  return composed;
}

ToyDecoder<float> stage_train_student(const RunConfig& cfg,
                                      const ToyDecoder<float>& teacher,
                                      const Corpus& corpus,
                                      const SenseDict& dict,
                                      const RelationSet& rels,
                                      const VocabSpec& spec, TrainMode mode,
                                      const std::string& ckpt_path,
                                      const std::string& csv_path,
                                      RunManifest* man) {
  ToyDecoder<float> student =
      make_student(teacher, cfg.student_total, cfg.student_trainable);
  std::ofstream csv(csv_path);
  if (!csv) throw io_error("cannot open for write: " + csv_path);
  train_distill(teacher, student, corpus, dict, rels, spec, cfg.distill,
                cfg.student_opt, mode, &csv);
  csv.close();
  save_checkpoint(student, ckpt_path);
  if (man) {
    man->record(csv_path);
    man->record(ckpt_path);
  }
  return student;
}

void write_metrics_json(const std::string& path,
                        const std::map<std::string, EvalMetrics>& metrics,
                        RunManifest* man) {
  json j;
  for (const auto& [name, m] : metrics) {
    j[name] = {{"next_token_accuracy", m.next_token_accuracy},
               {"perplexity", m.perplexity},
               {"cloze_accuracy", m.cloze_accuracy},
               {"positions", m.positions},
               {"items", m.items}};
  }
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for write: " + path);
  os << j.dump(2) << "\n";
  os.close();
  if (man) man->record(path);
}

void stage_sense_scatter(const SenseDict& dict, const std::string& path,
                         RunManifest* man) {
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<int> classes;
  for (const auto& [token, m] : dict.token_senses) {
    (void)token;
    for (int r = 0; r < m.rows(); ++r) {
      rows.push_back(m.row(r));
      classes.push_back(r);
    }
  }
  if (rows.empty()) return;
  Eigen::MatrixXd stacked(static_cast<int>(rows.size()), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    stacked.row(static_cast<int>(i)) = rows[i];
  Eigen::MatrixXd proj = pca_2d(stacked);
  std::vector<ScatterPoint> pts(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    pts[i] = {proj(static_cast<int>(i), 0), proj(static_cast<int>(i), 1),
              classes[i], ""};
  svg_scatter(path, "Sense embeddings (2-D PCA, colored by sense index)", pts);
  if (man) man->record(path);
}

std::string metrics_line(const std::string& name, const EvalMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%-8s next-token acc %.4f   perplexity %8.3f   cloze acc %.4f",
                name.c_str(), m.next_token_accuracy, m.perplexity,
                m.cloze_accuracy);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

PipelineResult run_pipeline(const RunConfig& cfg) {
  cfg.validate();  // pre-flight: reject before any compute or artifact
  RunPaths p = RunPaths::in(cfg.out_dir);
  fs::create_directories(cfg.out_dir);
  RunManifest man("pipeline");
  man.set_config(cfg.echo);

  World world = run_stage("world", [&] { return stage_world(cfg, p, &man); });
  Corpus corpus = run_stage(
      "corpus", [&] { return stage_corpus(cfg, world.spec, p, &man); });
  EvalSet evalset = run_stage(
      "eval-set", [&] { return stage_evalset(cfg, world.spec, p, &man); });
  ToyDecoder<float> teacher =
      run_stage("train-teacher", [&] { return stage_teacher(cfg, corpus, p, &man); });
  EmbeddingStore store = run_stage(
      "collect", [&] { return stage_collect(cfg, teacher, corpus, p, &man); });
  SenseDict dict =
      run_stage("build-dict", [&] { return stage_dict(cfg, store, p, &man); });
  RelationSet rels =
      run_stage("expand-relations", [&] { return stage_relations(p, &man); });
  SenseDict composed = run_stage("compose", [&] {
    return stage_compose(cfg, dict, rels, world.spec, p, &man);
  });
  ToyDecoder<float> kd = run_stage("train-kd", [&] {
    return stage_train_student(cfg, teacher, corpus, composed, rels,
                               world.spec, TrainMode::KD, p.student_kd_ckpt,
                               p.loss_kd_csv, &man);
  });
  ToyDecoder<float> dskd = run_stage("train-dskd", [&] {
    return stage_train_student(cfg, teacher, corpus, composed, rels,
                               world.spec, TrainMode::DSKD,
                               p.student_dskd_ckpt, p.loss_dskd_csv, &man);
  });

  PipelineResult res;
  run_stage("eval", [&] {
    res.teacher = evaluate_model(teacher, evalset, p.eval_teacher_csv);
    res.kd = evaluate_model(kd, evalset, p.eval_kd_csv);
    res.dskd = evaluate_model(dskd, evalset, p.eval_dskd_csv);
    man.record(p.eval_teacher_csv);
    man.record(p.eval_kd_csv);
    man.record(p.eval_dskd_csv);
    write_metrics_json(p.metrics_json,
                       {{"teacher", res.teacher}, {"kd", res.kd},
                        {"dskd", res.dskd}},
                       &man);
    return 0;
  });

  run_stage("report", [&] {
    stage_sense_scatter(composed, p.senses_svg, &man);
    std::ostringstream ss;
    ss << "pipeline summary (seed " << cfg.seed << ")\n\n";
    ss << metrics_line("teacher", res.teacher) << "\n";
    ss << metrics_line("kd", res.kd) << "\n";
    ss << metrics_line("dskd", res.dskd) << "\n\n";
    ss << "random cloze baseline: " << 1.0 / cfg.eval_choices << "\n";
    write_text_file(p.summary_txt, ss.str());
    man.record(p.summary_txt);
    return 0;
  });

  man.write(p.manifest_json);
  std::cout << metrics_line("teacher", res.teacher) << "\n"
            << metrics_line("kd", res.kd) << "\n"
            << metrics_line("dskd", res.dskd) << "\n";
  return res;
}

void cmd_gen_corpus(const RunConfig& cfg) {
  cfg.validate();
  RunPaths p = RunPaths::in(cfg.out_dir);
  fs::create_directories(cfg.out_dir);
  RunManifest man("gen-corpus");
  man.set_config(cfg.echo);
  World world = run_stage("world", [&] { return stage_world(cfg, p, &man); });
  run_stage("corpus", [&] { return stage_corpus(cfg, world.spec, p, &man); });
  run_stage("eval-set",
            [&] { return stage_evalset(cfg, world.spec, p, &man); });
  man.write((fs::path(cfg.out_dir) / "manifest_gen_corpus.json").string());
}

void cmd_train_teacher(const RunConfig& cfg) {
  cfg.validate();
  RunPaths p = RunPaths::in(cfg.out_dir);
  RunManifest man("train-teacher");
  man.set_config(cfg.echo);
  Corpus corpus = load_corpus(p.corpus_bin, p.corpus_labels_bin);
  run_stage("train-teacher", [&] { return stage_teacher(cfg, corpus, p, &man); });
  man.write((fs::path(cfg.out_dir) / "manifest_train_teacher.json").string());
}

void cmd_collect(const RunConfig& cfg) {
  cfg.validate();
  RunPaths p = RunPaths::in(cfg.out_dir);
  RunManifest man("collect");
  man.set_config(cfg.echo);
  auto teacher = load_checkpoint<float>(p.teacher_ckpt);
  Corpus corpus = load_corpus(p.corpus_bin, p.corpus_labels_bin);
  run_stage("collect",
            [&] { return stage_collect(cfg, teacher, corpus, p, &man); });
  man.write((fs::path(cfg.out_dir) / "manifest_collect.json").string());
}

void cmd_build_dict(const RunConfig& cfg) {
  cfg.validate();
  RunPaths p = RunPaths::in(cfg.out_dir);
  RunManifest man("build-dict");
  man.set_config(cfg.echo);
  EmbeddingStore store = load_store(p.store_bin);
  run_stage("build-dict", [&] { return stage_dict(cfg, store, p, &man); });
  man.write((fs::path(cfg.out_dir) / "manifest_build_dict.json").string());
}

void cmd_expand_relations(const RunConfig& cfg) {
  RunPaths p = RunPaths::in(cfg.out_dir);
  RunManifest man("expand-relations");
  man.set_config(cfg.echo);
  run_stage("expand-relations", [&] { return stage_relations(p, &man); });
  man.write(
      (fs::path(cfg.out_dir) / "manifest_expand_relations.json").string());
}

void cmd_compose(const RunConfig& cfg) {
  cfg.validate();
  RunPaths p = RunPaths::in(cfg.out_dir);
  RunManifest man("compose");
  man.set_config(cfg.echo);
  VocabSpec spec = load_vocab_spec(p.world_json);
  SenseDict dict = load_sense_dict(p.dict_bin);
  RelationSet rels;
  {
    std::ifstream rel(p.relations_expanded_tsv);
    if (!rel) throw io_error("cannot open: " + p.relations_expanded_tsv);
    std::ifstream base(p.base_tsv);
    if (!base) throw io_error("cannot open: " + p.base_tsv);
    rels = ingest_streams(rel, base, p.relations_expanded_tsv, p.base_tsv);
  }
  run_stage("compose",
            [&] { return stage_compose(cfg, dict, rels, spec, p, &man); });
  man.write((fs::path(cfg.out_dir) / "manifest_compose.json").string());
}

void cmd_train(const RunConfig& cfg, TrainMode mode) {
  cfg.validate();
  RunPaths p = RunPaths::in(cfg.out_dir);
  RunManifest man(mode == TrainMode::KD ? "train-kd" : "train-dskd");
  man.set_config(cfg.echo);
  auto teacher = load_checkpoint<float>(p.teacher_ckpt);
  Corpus corpus = load_corpus(p.corpus_bin, p.corpus_labels_bin);
  VocabSpec spec = load_vocab_spec(p.world_json);
  SenseDict dict = load_sense_dict(p.dict_composed_bin);
  RelationSet rels;
  {
    std::ifstream rel(p.relations_expanded_tsv);
    if (!rel) throw io_error("cannot open: " + p.relations_expanded_tsv);
    std::ifstream base(p.base_tsv);
    if (!base) throw io_error("cannot open: " + p.base_tsv);
    rels = ingest_streams(rel, base, p.relations_expanded_tsv, p.base_tsv);
  }
  const bool kd = mode == TrainMode::KD;
  run_stage(kd ? "train-kd" : "train-dskd", [&] {
    return stage_train_student(cfg, teacher, corpus, dict, rels, spec, mode,
                               kd ? p.student_kd_ckpt : p.student_dskd_ckpt,
                               kd ? p.loss_kd_csv : p.loss_dskd_csv, &man);
  });
  man.write((fs::path(cfg.out_dir) /
             (kd ? "manifest_train_kd.json" : "manifest_train_dskd.json"))
                .string());
}

EvalMetrics cmd_eval(const std::string& checkpoint_path,
                     const std::string& evalset_path,
                     const std::string& per_item_csv) {
  auto model = load_checkpoint<float>(checkpoint_path);
  EvalSet es = load_eval_set(evalset_path);
  EvalMetrics m = evaluate_model(model, es, per_item_csv);
  std::cout << metrics_line("model", m) << "\n";
  return m;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

struct SweepRow {
  double value = 0;
  std::string mode;
  bool ok = false;
  std::string error;
  EvalMetrics metrics;
};

}  // namespace

void run_sweep(const RunConfig& cfg, const std::string& axis) {
  auto axis_it = cfg.sweep.find(axis);
  if (axis_it == cfg.sweep.end() || axis_it->second.empty())
    throw validation_error("sweep: axis '" + axis +
                           "' not declared in config (sweep." + axis + ")");
  cfg.validate();
  const std::vector<double>& values = axis_it->second;

  fs::create_directories(cfg.out_dir);
  RunManifest man("sweep-" + axis);
  man.set_config(cfg.echo);
  RunPaths shared = RunPaths::in(cfg.out_dir);

  // Shared prefix: world, corpus, teacher, eval set, store; dictionary too
  // unless the axis rebuilds it.
  World world = run_stage("world", [&] { return stage_world(cfg, shared, &man); });
  Corpus corpus = run_stage(
      "corpus", [&] { return stage_corpus(cfg, world.spec, shared, &man); });
  EvalSet evalset = run_stage(
      "eval-set", [&] { return stage_evalset(cfg, world.spec, shared, &man); });
  ToyDecoder<float> teacher = run_stage(
      "train-teacher", [&] { return stage_teacher(cfg, corpus, shared, &man); });
  EmbeddingStore store = run_stage("collect", [&] {
    return stage_collect(cfg, teacher, corpus, shared, &man);
  });
  RelationSet rels = run_stage("expand-relations",
                               [&] { return stage_relations(shared, &man); });

  SenseDict base_composed;
  if (axis != "k") {
    SenseDict dict =
        run_stage("build-dict", [&] { return stage_dict(cfg, store, shared, &man); });
    base_composed = run_stage("compose", [&] {
      return stage_compose(cfg, dict, rels, world.spec, shared, &man);
    });
  }

  const bool run_kd_too = axis == "total_layers" || axis == "trainable_layers";
  std::vector<SweepRow> rows;
  for (double v : values) {
    RunConfig point = cfg;
    char vdir[64];
    std::snprintf(vdir, sizeof(vdir), "%s_%g", axis.c_str(), v);
    point.out_dir = (fs::path(cfg.out_dir) / "sweep" / vdir).string();
    fs::create_directories(point.out_dir);
    RunPaths pp = RunPaths::in(point.out_dir);

    if (axis == "total_layers")
      point.student_total = static_cast<int>(v);
    else if (axis == "trainable_layers")
      point.student_trainable = static_cast<int>(v);
    else if (axis == "k")
      point.dict_k = static_cast<u32>(v);
    else if (axis == "kappa")
      point.distill.kappa = static_cast<int>(v);
    else if (axis == "beta") {
      point.distill.beta_p = v;
      point.distill.beta_n = v;
    } else if (axis == "alpha")
      point.distill.alpha = v;

    auto run_point = [&](TrainMode mode) {
      SweepRow row;
      row.value = v;
      row.mode = mode == TrainMode::KD ? "kd" : "dskd";
      try {
        point.validate();
        const SenseDict* dict_for_point = &base_composed;
        SenseDict rebuilt;
        if (axis == "k") {
          SenseDict d = stage_dict(point, store, pp, &man);
          rebuilt = stage_compose(point, d, rels, world.spec, pp, &man);
          dict_for_point = &rebuilt;
        }
        const bool kd = mode == TrainMode::KD;
        ToyDecoder<float> student = stage_train_student(
            point, teacher, corpus, *dict_for_point, rels, world.spec, mode,
            kd ? pp.student_kd_ckpt : pp.student_dskd_ckpt,
            kd ? pp.loss_kd_csv : pp.loss_dskd_csv, &man);
        row.metrics = evaluate_model(student, evalset,
                                     kd ? pp.eval_kd_csv : pp.eval_dskd_csv);
        man.record(kd ? pp.eval_kd_csv : pp.eval_dskd_csv);
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
        std::cerr << "[sweep] point " << axis << "=" << v << " (" << row.mode
                  << ") failed: " << e.what() << "\n";
      }
      rows.push_back(row);
    };
    if (run_kd_too) run_point(TrainMode::KD);
    run_point(TrainMode::DSKD);
  }

  // Aggregated CSV.
  std::string csv_path =
      (fs::path(cfg.out_dir) / ("sweep_" + axis + ".csv")).string();
  {
    std::ofstream os(csv_path);
    if (!os) throw io_error("cannot open for write: " + csv_path);
    os << "axis,value,mode,ok,cloze_accuracy,next_token_accuracy,perplexity,"
          "error\n";
    char buf[256];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s,%g,%s,%d,%.6f,%.6f,%.6f,%s\n",
                    axis.c_str(), r.value, r.mode.c_str(), r.ok ? 1 : 0,
                    r.metrics.cloze_accuracy, r.metrics.next_token_accuracy,
                    r.metrics.perplexity, r.error.c_str());
      os << buf;
    }
  }
  man.record(csv_path);

  // Line chart of cloze accuracy vs axis value.
  std::string svg_path =
      (fs::path(cfg.out_dir) / ("sweep_" + axis + ".svg")).string();
  std::vector<ChartSeries> series;
  for (const char* mode : {"kd", "dskd"}) {
    ChartSeries s;
    s.name = mode;
    for (const auto& r : rows)
      if (r.ok && r.mode == mode) s.points.push_back({r.value, r.metrics.cloze_accuracy});
    if (!s.points.empty()) series.push_back(std::move(s));
  }
  svg_line_chart(svg_path, "sweep over " + axis, axis, "cloze accuracy",
                 series);
  man.record(svg_path);

  // Observation for the kappa axis: compare kappa=1 against kappa=5.
  if (axis == "kappa") {
    double acc1 = -1, acc5 = -1;
    for (const auto& r : rows) {
      if (!r.ok || r.mode != "dskd") continue;
      if (r.value == 1) acc1 = r.metrics.cloze_accuracy;
      if (r.value == 5) acc5 = r.metrics.cloze_accuracy;
    }
    if (acc1 >= 0 && acc5 >= 0) {
      std::ostringstream ss;
      ss << "kappa=1 cloze accuracy " << acc1 << ", kappa=5 cloze accuracy "
         << acc5 << " (observation: kappa=1 expected lower; measured "
         << (acc1 < acc5 ? "lower" : "not lower") << ")\n";
      std::string obs_path =
          (fs::path(cfg.out_dir) / "sweep_kappa_observation.txt").string();
      write_text_file(obs_path, ss.str());
      man.record(obs_path);
      std::cout << ss.str();
    }
  }

  man.write(
      (fs::path(cfg.out_dir) / ("manifest_sweep_" + axis + ".json")).string());
}

}  // namespace dskd
