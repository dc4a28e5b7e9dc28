// End-to-end assembly: configuration, the full model (encoder, thread GCNs,
// utterance DAG propagation, cross attention, rotary grid heads), training
// with AdamW and two learning-rate groups, checkpointing, evaluation, and the
// ablation / sweep harnesses.
#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tcda/dag_gnn.hpp"
#include "tcda/encoder.hpp"
#include "tcda/grid_tagger.hpp"
#include "tcda/synth.hpp"
#include "tcda/tc_dag.hpp"

namespace tcda {

struct PipelineConfig {
  int embedding_dim = 64;
  int encoder_depth = 2;
  int gcn_layers = 3;
  int dag_layers = 2;
  int window = 3;
  double topk_ratio = 0.8;
  double theta_mic = 10000.0;
  double theta_mac = 100.0;
  double dropout = 0.1;
  int batch_size = 2;
  double lr_encoder = 1e-5;
  double lr_rest = 1e-4;
  int epochs = 100;
  uint64_t seed = 42;
  double class_weight_main = 1.0;
  double class_weight_other = 0.25;
  double class_weight_other_ent = -1.0;   // < 0 falls back to class_weight_other
  double class_weight_other_pair = -1.0;
  double class_weight_other_pol = -1.0;
  std::string graph_variant = "tc";     // tc | standard | reply
  std::string position_mode = "drope";  // drope | standard
  int rotary_dim = 0;  // 0 -> embedding_dim
  int early_stop_patience = 20;
  int eval_every = 1;
  double weight_decay = 0.01;
  bool allow_null_spans = false;
  std::string adjacency_file;

  bool operator==(const PipelineConfig&) const = default;
  int rotary_width() const { return rotary_dim > 0 ? rotary_dim : embedding_dim; }
  void validate() const;
  std::string serialize() const;  // key = value lines, round-trip exact
  static PipelineConfig parse(const std::string& text);
  static PipelineConfig parse_file(const std::string& path);
};

// TCDA_SEED overrides the configured seed when set.
void apply_env_overrides(PipelineConfig& cfg);

class Model {
 public:
  Model(const PipelineConfig& cfg, Vocab vocab);
  Model(const PipelineConfig& cfg, Vocab vocab, ParamStore&& ps);

  const PipelineConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore& params() { return ps_; }
  const ParamStore& params() const { return ps_; }

  struct ForwardOutputs {
    GridLogits logits;
    TokenIndexMap tim;
  };
  ForwardOutputs forward(const Dialogue& d, Rng* rng, bool train) const;
  Tensor loss(const Dialogue& d, Rng* rng, bool train) const;
  std::vector<Quadruple> predict(const Dialogue& d) const;  // wrapped spans

  GridWeights grid_weights() const;
  void set_adjacency_overrides(std::map<std::string, AdjacencyOverride> m);

 private:
  void register_params();
  PipelineConfig cfg_;
  Vocab vocab_;
  ParamStore ps_;
  std::map<std::string, AdjacencyOverride> adjacency_overrides_;
};

// ----------------------------------------------------------------- training --

struct TrainState {
  int next_epoch = 0;
  Rng shuffle_rng;
  Rng dropout_rng;
  static TrainState fresh(uint64_t seed);
  std::string serialize() const;
  static TrainState deserialize(const std::string& text);
};

struct TrainOptions {
  int max_epochs = 0;             // 0 -> config epochs
  bool track_train_f1 = false;
  double target_train_f1 = -1.0;  // stop once reached (checked at eval points)
  std::ostream* log = nullptr;
  int log_every = 10;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double dev_f1 = -1.0;
  double train_f1 = -1.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  double best_dev_f1 = -1.0;
  int best_epoch = -1;
  double final_train_f1 = -1.0;
  int epochs_run = 0;
  bool reached_target = false;
};

TrainResult train_model(Model& model, const std::vector<Dialogue>& train_set,
                        const std::vector<Dialogue>& dev_set,
                        const TrainOptions& opts, TrainState* state = nullptr);

std::vector<DocQuads> predict_corpus(const Model& m,
                                     const std::vector<Dialogue>& data);
std::vector<DocQuads> gold_corpus(const std::vector<Dialogue>& data);
Metrics evaluate_model(const Model& m, const std::vector<Dialogue>& data);

// --------------------------------------------------------------- checkpoint --

void save_model(const Model& m, const std::string& path,
                const TrainState* state = nullptr,
                const std::map<std::string, std::string>& extra_meta = {});
Model load_model(const std::string& path, TrainState* state_out = nullptr);

std::map<std::string, AdjacencyOverride> load_adjacency_file(
    const std::string& path, std::string* checksum_out = nullptr);

// Snapshot the default adjacency of each dialogue at the current parameters
// and pin it on the model. Gradient checking needs this: the semantic graph
// is a discrete top-k selection, so finite differences across its decision
// boundaries would not measure the training gradient.
void freeze_adjacency(Model& m, const std::vector<Dialogue>& data);

// ----------------------------------------------------------------- ablation --

// Variants: full | no_tcdag | no_drope | no_both.
PipelineConfig make_variant_config(const PipelineConfig& base,
                                   const std::string& variant);

struct AblationRow {
  std::string variant;
  uint64_t seed = 0;
  double dev_f1 = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::map<std::string, double> mean_dev_f1;
  std::string table_text;
};

AblationResult run_ablation(const PipelineConfig& base,
                            const std::vector<Dialogue>& train_set,
                            const std::vector<Dialogue>& dev_set,
                            const std::vector<std::string>& variants,
                            const std::vector<uint64_t>& seeds,
                            const TrainOptions& opts);

struct SweepRow {
  std::string param;
  int value = 0;
  double dev_f1 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string table_text;
};

// Layer sweep L in 1..4 (window fixed), then window 1..4 (layers fixed).
SweepResult run_sweep(const PipelineConfig& base,
                      const std::vector<Dialogue>& train_set,
                      const std::vector<Dialogue>& dev_set,
                      const TrainOptions& opts);

// ------------------------------------------------------------------ run dir --

void ensure_dir(const std::string& path);
void write_run_manifest(const std::string& dir, const PipelineConfig& cfg,
                        const std::map<std::string, std::string>& files);

}  // namespace tcda
