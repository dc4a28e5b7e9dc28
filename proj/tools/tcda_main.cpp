// Command-line surface: synthetic data generation, DAG building and export,
// training, evaluation, prediction, gradient checking, ablations and the
// rotary decay tables.
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tcda/drope.hpp"
#include "tcda/grad_check.hpp"
#include "tcda/pipeline.hpp"

namespace {

using namespace tcda;

std::vector<uint64_t> parse_seed_list(const std::string& s) {
  std::vector<uint64_t> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(std::stoull(tok));
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

std::vector<std::string> parse_name_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(tok);
  return out;
}

// A tiny fixed two-utterance dialogue for gradient checking.
Dialogue grad_check_dialogue() {
  return parse_dialogue(R"({"doc_id":"gradcheck",
    "sentences":[{"speaker":"s0","tokens":["T0","f1","f2"],"reply":-1},
                 {"speaker":"s1","tokens":["A0","P0"],"reply":0}],
    "quadruples":[{"target":[0,0],"aspect":[3,3],"opinion":[4,4],"sentiment":"pos"}]})");
}

int cmd_gen_synth(const std::string& spec_path, const std::string& out_path) {
  SyntheticSpec spec = SyntheticSpec::parse(read_text_file(spec_path));
  auto data = gen_synthetic(spec);
  save_dialogues(out_path, data);
  std::printf("wrote %zu dialogues to %s\n", data.size(), out_path.c_str());
  return 0;
}

int cmd_build_dag(const std::string& input, int window, const std::string& variant,
                  const std::string& dot_out) {
  auto dialogues = load_dialogues(input);
  const GraphVariant gv = graph_variant_from_name(variant);
  std::ostringstream dots;
  int violations = 0;
  for (const auto& d : dialogues) {
    auto td = decompose_threads(d);
    TcDag g = build_tc_dag(d, td, window, gv);
    auto report = validate_dag(g, d, td);
    for (const auto& line : report)
      std::fprintf(stderr, "%s: %s\n", d.doc_id.c_str(), line.c_str());
    violations += int(report.size());
    dots << export_dot(g, d);
  }
  if (!dot_out.empty()) write_text_file(dot_out, dots.str());
  std::printf("%zu dialogues, %d violations\n", dialogues.size(), violations);
  return violations == 0 ? 0 : 1;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume) {
  PipelineConfig cfg = PipelineConfig::parse_file(config_path);
  apply_env_overrides(cfg);
  auto train_set = load_dialogues(data_dir + "/train.jsonl", cfg.allow_null_spans);
  std::vector<Dialogue> dev_set;
  try {
    dev_set = load_dialogues(data_dir + "/dev.jsonl", cfg.allow_null_spans);
  } catch (const ParseError&) {
    // dev split is optional
  }

  ensure_dir(out_dir);
  TrainState state = TrainState::fresh(cfg.seed);
  std::unique_ptr<Model> model;
  if (!resume.empty()) {
    model = std::make_unique<Model>(load_model(resume, &state));
  } else {
    model = std::make_unique<Model>(cfg, build_vocab(train_set));
  }

  TrainOptions opts;
  opts.log = &std::cout;
  TrainResult r = train_model(*model, train_set, dev_set, opts, &state);

  const std::string ckpt = out_dir + "/ckpt.tcda";
  save_model(*model, ckpt, &state);
  write_text_file(out_dir + "/config.txt", model->config().serialize());

  std::ostringstream hist;
  hist << "epoch\tloss\tdev_f1\ttrain_f1\n";
  for (const auto& e : r.history)
    hist << e.epoch << "\t" << e.loss << "\t" << e.dev_f1 << "\t" << e.train_f1
         << "\n";
  write_text_file(out_dir + "/history.tsv", hist.str());

  Metrics m = evaluate_model(*model, dev_set.empty() ? train_set : dev_set);
  write_text_file(out_dir + "/metrics.txt", m.to_text());
  write_text_file(out_dir + "/metrics.json", m.to_json());
  write_run_manifest(out_dir, model->config(),
                     {{"ckpt.tcda", ckpt},
                      {"config.txt", out_dir + "/config.txt"},
                      {"metrics.txt", out_dir + "/metrics.txt"},
                      {"metrics.json", out_dir + "/metrics.json"},
                      {"history.tsv", out_dir + "/history.tsv"}});

  std::printf("trained %d epochs; best dev micro F1 %.4f (epoch %d)\n",
              r.epochs_run, r.best_dev_f1, r.best_epoch);
  std::printf("%s", m.to_text().c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data,
             const std::string& metrics_out) {
  Model model = load_model(ckpt);
  auto dataset = load_dialogues(data, model.config().allow_null_spans);
  Metrics m = evaluate_model(model, dataset);
  std::printf("%s", m.to_text().c_str());
  if (!metrics_out.empty()) write_text_file(metrics_out, m.to_json());
  return 0;
}

int cmd_predict(const std::string& ckpt, const std::string& input,
                const std::string& output) {
  Model model = load_model(ckpt);
  auto dataset = load_dialogues(input, true);
  std::ostringstream os;
  for (const auto& d : dataset)
    os << prediction_to_json(d, model.predict(d)) << "\n";
  write_text_file(output, os.str());
  std::printf("wrote predictions for %zu dialogues to %s\n", dataset.size(),
              output.c_str());
  return 0;
}

int cmd_check_grad(const std::string& config_path) {
  PipelineConfig cfg = config_path.empty() ? PipelineConfig{}
                                           : PipelineConfig::parse_file(config_path);
  if (config_path.empty()) {
    cfg.embedding_dim = 16;
    cfg.rotary_dim = 16;
    cfg.encoder_depth = 1;
    cfg.gcn_layers = 2;
    cfg.dag_layers = 1;
    cfg.topk_ratio = 1.0;  // selection cannot flip under perturbation
    cfg.dropout = 0.0;
  }
  apply_env_overrides(cfg);
  Dialogue d = grad_check_dialogue();
  Model model(cfg, build_vocab({d}));
  // pin the semantic adjacency: its top-k selection is discrete and finite
  // differences must not step across a selection boundary
  freeze_adjacency(model, {d});
  auto f = [&]() { return model.loss(d, nullptr, false); };
  GradCheckResult r = grad_check(model.params(), f);
  std::printf("parameters: %lld\n", (long long)model.params().total_size());
  std::printf("max relative error: %.3e (param %s[%lld], analytic %.6e numeric %.6e)\n",
              r.max_rel_err, r.worst_param.c_str(), (long long)r.worst_index,
              r.analytic, r.numeric);
  return r.max_rel_err <= 1e-4 ? 0 : 1;
}

int cmd_ablate(const std::string& config_path, const std::string& train_path,
               const std::string& dev_path, const std::string& variants,
               const std::string& seeds, const std::string& out_dir, bool sweep,
               int epochs) {
  PipelineConfig cfg = PipelineConfig::parse_file(config_path);
  apply_env_overrides(cfg);
  if (epochs > 0) cfg.epochs = epochs;
  auto train_set = load_dialogues(train_path, cfg.allow_null_spans);
  std::vector<Dialogue> dev_set;
  if (!dev_path.empty()) dev_set = load_dialogues(dev_path, cfg.allow_null_spans);

  TrainOptions opts;
  std::string table;
  if (sweep) {
    SweepResult r = run_sweep(cfg, train_set, dev_set, opts);
    table = r.table_text;
  } else {
    AblationResult r = run_ablation(cfg, train_set, dev_set,
                                    parse_name_list(variants),
                                    parse_seed_list(seeds), opts);
    table = r.table_text;
  }
  std::printf("%s", table.c_str());
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text_file(out_dir + (sweep ? "/sweep.txt" : "/ablation.txt"), table);
  }
  return 0;
}

int cmd_decay_curve(double theta_mic, double theta_mac, int width, int max_dist,
                    int samples, const std::string& out) {
  auto t = drope::decay_curve(width, theta_mic, theta_mac, max_dist, samples, 7);
  const std::string text = drope::decay_table_text(t);
  if (out.empty())
    std::printf("%s", text.c_str());
  else
    write_text_file(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thread-constrained DAG + dual-scale rotary grid tagger"};
  app.require_subcommand(1);

  std::string spec_path, out_path;
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic corpus");
  gen->add_option("--spec", spec_path, "synthetic spec JSON")->required();
  gen->add_option("--out", out_path, "output JSONL path")->required();

  std::string dag_input, dag_variant = "tc", dag_dot;
  int dag_window = 3;
  auto* bdag = app.add_subcommand("build-dag", "build and validate dialogue DAGs");
  bdag->add_option("--input", dag_input, "dialogue JSONL/JSON file")->required();
  bdag->add_option("--window", dag_window, "same-speaker window");
  bdag->add_option("--variant", dag_variant, "tc | standard | reply");
  bdag->add_option("--dot", dag_dot, "write graphviz text here");

  std::string tr_config, tr_data, tr_out, tr_resume;
  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", tr_config, "config file")->required();
  tr->add_option("--data", tr_data, "directory with train.jsonl [dev.jsonl]")->required();
  tr->add_option("--out", tr_out, "run output directory")->required();
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");

  std::string ev_ckpt, ev_data, ev_metrics;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--ckpt", ev_ckpt)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--metrics-out", ev_metrics, "write metrics JSON here");

  std::string pr_ckpt, pr_in, pr_out;
  auto* pr = app.add_subcommand("predict", "predict quadruples");
  pr->add_option("--ckpt", pr_ckpt)->required();
  pr->add_option("--input", pr_in)->required();
  pr->add_option("--output", pr_out)->required();

  std::string cg_config;
  auto* cg = app.add_subcommand("check-grad", "finite-difference gradient check");
  cg->add_option("--config", cg_config, "config file (defaults to a small preset)");

  std::string ab_config, ab_train, ab_dev, ab_variants = "full,no_tcdag,no_drope,no_both";
  std::string ab_seeds = "1,2,3,4,5", ab_out;
  bool ab_sweep = false;
  int ab_epochs = 0;
  auto* ab = app.add_subcommand("ablate", "ablation table or parameter sweep");
  ab->add_option("--config", ab_config)->required();
  ab->add_option("--data", ab_train, "training JSONL")->required();
  ab->add_option("--dev", ab_dev, "dev JSONL");
  ab->add_option("--variants", ab_variants);
  ab->add_option("--seeds", ab_seeds);
  ab->add_option("--out", ab_out, "output directory");
  ab->add_flag("--sweep", ab_sweep, "sweep dag layers 1..4 and window 1..4");
  ab->add_option("--epochs", ab_epochs, "override epoch budget");

  double dc_mic = 10000.0, dc_mac = 100.0;
  int dc_width = 32, dc_max = 64, dc_samples = 256;
  std::string dc_out;
  auto* dc = app.add_subcommand("decay-curve", "rotary correlation decay table");
  dc->add_option("--theta-mic", dc_mic);
  dc->add_option("--theta-mac", dc_mac);
  dc->add_option("--width", dc_width);
  dc->add_option("--max-distance", dc_max);
  dc->add_option("--samples", dc_samples);
  dc->add_option("--out", dc_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_synth(spec_path, out_path);
    if (bdag->parsed()) return cmd_build_dag(dag_input, dag_window, dag_variant, dag_dot);
    if (tr->parsed()) return cmd_train(tr_config, tr_data, tr_out, tr_resume);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_metrics);
    if (pr->parsed()) return cmd_predict(pr_ckpt, pr_in, pr_out);
    if (cg->parsed()) return cmd_check_grad(cg_config);
    if (ab->parsed())
      return cmd_ablate(ab_config, ab_train, ab_dev, ab_variants, ab_seeds, ab_out,
                        ab_sweep, ab_epochs);
    if (dc->parsed())
      return cmd_decay_curve(dc_mic, dc_mac, dc_width, dc_max, dc_samples, dc_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
