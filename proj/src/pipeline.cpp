#include "tcda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

namespace tcda {

// ------------------------------------------------------------------ config --

void PipelineConfig::validate() const {
  if (embedding_dim < 2 || embedding_dim % 2 != 0)
    throw ConfigError("embedding_dim must be a positive even number");
  if (encoder_depth < 1 || gcn_layers < 1 || dag_layers < 1 || window < 1 ||
      batch_size < 1 || epochs < 1 || eval_every < 1)
    throw ConfigError("depth, layer, window, batch and epoch counts must be >= 1");
  if (!(topk_ratio > 0.0 && topk_ratio <= 1.0))
    throw ConfigError("topk_ratio must be in (0, 1]");
  if (!(theta_mic > theta_mac && theta_mac > 1.0))
    throw ConfigError("need theta_mic > theta_mac > 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (lr_encoder <= 0.0 || lr_rest <= 0.0) throw ConfigError("learning rates must be positive");
  if (class_weight_main <= 0.0 || class_weight_other <= 0.0)
    throw ConfigError("class weights must be positive");
  const int dr = rotary_width();
  if (dr % 2 != 0 || (dr / 2) % 2 != 0)
    throw ConfigError("rotary width must have even halves");
  graph_variant_from_name(graph_variant);
  if (position_mode != "drope" && position_mode != "standard")
    throw ConfigError("position_mode must be drope or standard");
}

namespace {

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string PipelineConfig::serialize() const {
  std::ostringstream os;
  os << "embedding_dim = " << embedding_dim << "\n";
  os << "encoder_depth = " << encoder_depth << "\n";
  os << "gcn_layers = " << gcn_layers << "\n";
  os << "dag_layers = " << dag_layers << "\n";
  os << "window = " << window << "\n";
  os << "topk_ratio = " << fmt_double(topk_ratio) << "\n";
  os << "theta_mic = " << fmt_double(theta_mic) << "\n";
  os << "theta_mac = " << fmt_double(theta_mac) << "\n";
  os << "dropout = " << fmt_double(dropout) << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "lr_encoder = " << fmt_double(lr_encoder) << "\n";
  os << "lr_rest = " << fmt_double(lr_rest) << "\n";
  os << "epochs = " << epochs << "\n";
  os << "seed = " << seed << "\n";
  os << "class_weight_main = " << fmt_double(class_weight_main) << "\n";
  os << "class_weight_other = " << fmt_double(class_weight_other) << "\n";
  os << "class_weight_other_ent = " << fmt_double(class_weight_other_ent) << "\n";
  os << "class_weight_other_pair = " << fmt_double(class_weight_other_pair) << "\n";
  os << "class_weight_other_pol = " << fmt_double(class_weight_other_pol) << "\n";
  os << "graph_variant = " << graph_variant << "\n";
  os << "position_mode = " << position_mode << "\n";
  os << "rotary_dim = " << rotary_dim << "\n";
  os << "early_stop_patience = " << early_stop_patience << "\n";
  os << "eval_every = " << eval_every << "\n";
  os << "weight_decay = " << fmt_double(weight_decay) << "\n";
  os << "allow_null_spans = " << (allow_null_spans ? 1 : 0) << "\n";
  os << "adjacency_file = " << adjacency_file << "\n";
  return os.str();
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
  PipelineConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "embedding_dim") c.embedding_dim = std::stoi(val);
      else if (key == "encoder_depth") c.encoder_depth = std::stoi(val);
      else if (key == "gcn_layers") c.gcn_layers = std::stoi(val);
      else if (key == "dag_layers") c.dag_layers = std::stoi(val);
      else if (key == "window") c.window = std::stoi(val);
      else if (key == "topk_ratio") c.topk_ratio = std::stod(val);
      else if (key == "theta_mic") c.theta_mic = std::stod(val);
      else if (key == "theta_mac") c.theta_mac = std::stod(val);
      else if (key == "dropout") c.dropout = std::stod(val);
      else if (key == "batch_size") c.batch_size = std::stoi(val);
      else if (key == "lr_encoder") c.lr_encoder = std::stod(val);
      else if (key == "lr_rest") c.lr_rest = std::stod(val);
      else if (key == "epochs") c.epochs = std::stoi(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "class_weight_main") c.class_weight_main = std::stod(val);
      else if (key == "class_weight_other") c.class_weight_other = std::stod(val);
      else if (key == "class_weight_other_ent") c.class_weight_other_ent = std::stod(val);
      else if (key == "class_weight_other_pair") c.class_weight_other_pair = std::stod(val);
      else if (key == "class_weight_other_pol") c.class_weight_other_pol = std::stod(val);
      else if (key == "graph_variant") c.graph_variant = val;
      else if (key == "position_mode") c.position_mode = val;
      else if (key == "rotary_dim") c.rotary_dim = std::stoi(val);
      else if (key == "early_stop_patience") c.early_stop_patience = std::stoi(val);
      else if (key == "eval_every") c.eval_every = std::stoi(val);
      else if (key == "weight_decay") c.weight_decay = std::stod(val);
      else if (key == "allow_null_spans") c.allow_null_spans = std::stoi(val) != 0;
      else if (key == "adjacency_file") c.adjacency_file = val;
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": bad value for " + key);
    }
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::parse_file(const std::string& path) {
  return parse(read_text_file(path));
}

void apply_env_overrides(PipelineConfig& cfg) {
  if (const char* s = std::getenv("TCDA_SEED")) cfg.seed = std::strtoull(s, nullptr, 10);
}

// ------------------------------------------------------------------- model --

Model::Model(const PipelineConfig& cfg, Vocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)), ps_(cfg.seed) {
  cfg_.validate();
  register_params();
  if (!cfg_.adjacency_file.empty())
    adjacency_overrides_ = load_adjacency_file(cfg_.adjacency_file);
}

Model::Model(const PipelineConfig& cfg, Vocab vocab, ParamStore&& ps)
    : cfg_(cfg), vocab_(std::move(vocab)), ps_(std::move(ps)) {
  cfg_.validate();
  if (!ps_.has("encoder.embed"))
    throw ConfigError("checkpoint does not contain encoder parameters");
  if (!cfg_.adjacency_file.empty())
    adjacency_overrides_ = load_adjacency_file(cfg_.adjacency_file);
}

void Model::register_params() {
  EncoderConfig ec{cfg_.embedding_dim, cfg_.encoder_depth, cfg_.gcn_layers,
                   cfg_.topk_ratio};
  register_encoder_params(ps_, ec, vocab_.size());
  if (cfg_.graph_variant == "reply")
    register_reply_gcn_params(ps_, cfg_.embedding_dim, cfg_.dag_layers);
  else
    register_dag_gnn_params(ps_, cfg_.embedding_dim, cfg_.dag_layers);
  ScoringConfig sc{cfg_.embedding_dim, cfg_.rotary_width(), cfg_.theta_mic,
                   cfg_.theta_mac, cfg_.position_mode == "standard"};
  register_task_head_params(ps_, sc);
}

void Model::set_adjacency_overrides(std::map<std::string, AdjacencyOverride> m) {
  adjacency_overrides_ = std::move(m);
}

GridWeights Model::grid_weights() const {
  auto other = [this](double v) { return v >= 0.0 ? v : cfg_.class_weight_other; };
  return make_grid_weights(cfg_.class_weight_main,
                           other(cfg_.class_weight_other_ent),
                           other(cfg_.class_weight_other_pair),
                           other(cfg_.class_weight_other_pol));
}

Model::ForwardOutputs Model::forward(const Dialogue& d, Rng* rng,
                                     bool train) const {
  const EncoderConfig ec{cfg_.embedding_dim, cfg_.encoder_depth, cfg_.gcn_layers,
                         cfg_.topk_ratio};
  auto td = decompose_threads(d);
  auto tim = build_token_index(d, td);
  auto layouts = make_thread_layouts(d, td, tim, vocab_);

  std::vector<Tensor> thread_feats;
  thread_feats.reserve(layouts.size());
  for (const auto& tl : layouts) thread_feats.push_back(embed_encode(tl, ps_, ec));

  std::optional<AdjacencyOverride> ov;
  auto it = adjacency_overrides_.find(d.doc_id);
  if (it != adjacency_overrides_.end()) ov = it->second;
  CkOutputs ck = ck_encode(d, tim, layouts, thread_feats, ps_, ec, ov);

  Tensor h_utt = topk_aggregate(ck.h_tok_fused, d, tim, cfg_.topk_ratio, ps_);

  Tensor h_utt_ctx;
  if (cfg_.graph_variant == "reply") {
    h_utt_ctx = reply_gcn_forward(d, h_utt, ps_, cfg_.dag_layers);
  } else {
    TcDag dag = build_tc_dag(d, td, cfg_.window,
                             graph_variant_from_name(cfg_.graph_variant));
    DagForwardOpts opts;
    opts.dropout = cfg_.dropout;
    opts.rng = rng;
    opts.train = train && rng != nullptr;
    h_utt_ctx = dag_forward(dag, h_utt, ps_, cfg_.dag_layers, opts);
  }

  Tensor h_final = global_local_interact(ck.h_tok_fused, h_utt_ctx, ps_);

  const int n = tim.n_tokens();
  GridScoreInputs in;
  in.h_final = h_final;
  std::vector<int> utt_of(static_cast<size_t>(n));
  in.p_tok.resize(size_t(n));
  in.p_utt.resize(size_t(n));
  in.flat_pos.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    utt_of[size_t(i)] = tim.tokens[size_t(i)].utterance_id - 1;
    in.p_tok[size_t(i)] = tim.tokens[size_t(i)].p_tok;
    in.p_utt[size_t(i)] = tim.tokens[size_t(i)].p_utt;
    in.flat_pos[size_t(i)] = i;
  }
  in.h_utt_broadcast = gather_rows(h_utt_ctx, utt_of);
  in.same_thread.assign(size_t(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      in.same_thread[size_t(i) * n + j] =
          same_thread(tim.tokens[size_t(i)].thread_id,
                      tim.tokens[size_t(j)].thread_id)
              ? 1
              : 0;

  ScoringConfig sc{cfg_.embedding_dim, cfg_.rotary_width(), cfg_.theta_mic,
                   cfg_.theta_mac, cfg_.position_mode == "standard"};
  ForwardOutputs out;
  out.logits = score_grids(in, ps_, sc);
  out.tim = std::move(tim);
  return out;
}

Tensor Model::loss(const Dialogue& d, Rng* rng, bool train) const {
  ForwardOutputs f = forward(d, rng, train);
  LabelGrids gold = encode_grids(f.tim, d.gold);
  return weighted_ce_loss(f.logits, gold, grid_weights());
}

std::vector<Quadruple> Model::predict(const Dialogue& d) const {
  NoGradGuard ng;
  ForwardOutputs f = forward(d, nullptr, false);
  LabelGrids gold_mask = encode_grids(f.tim, {});
  LabelGrids pred = argmax_grids(f.logits, gold_mask.mask);
  return decode_quadruples(pred);
}

// ---------------------------------------------------------------- training --

TrainState TrainState::fresh(uint64_t seed) {
  TrainState s;
  s.shuffle_rng.seed(mix_seed(seed, 0x51u));
  s.dropout_rng.seed(mix_seed(seed, 0xd0u));
  return s;
}

std::string TrainState::serialize() const {
  std::ostringstream os;
  os << next_epoch << "\n" << shuffle_rng << "\n" << dropout_rng << "\n";
  return os.str();
}

TrainState TrainState::deserialize(const std::string& text) {
  TrainState s;
  std::istringstream is(text);
  is >> s.next_epoch >> s.shuffle_rng >> s.dropout_rng;
  if (!is) throw ParseError("train state: malformed");
  return s;
}

TrainResult train_model(Model& model, const std::vector<Dialogue>& train_set,
                        const std::vector<Dialogue>& dev_set,
                        const TrainOptions& opts, TrainState* state) {
  if (train_set.empty()) throw ConfigError("train: dataset is empty");
  const PipelineConfig& cfg = model.config();
  TrainState local = TrainState::fresh(cfg.seed);
  TrainState* st = state ? state : &local;

  const int max_epochs = opts.max_epochs > 0 ? opts.max_epochs : cfg.epochs;
  AdamConfig adam;
  adam.weight_decay = cfg.weight_decay;
  auto lr_for = [&cfg](const std::string& name) {
    return name.rfind("encoder.", 0) == 0 ? cfg.lr_encoder : cfg.lr_rest;
  };

  TrainResult res;
  int evals_since_best = 0;
  for (int epoch = st->next_epoch; epoch < max_epochs; ++epoch) {
    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), st->shuffle_rng);

    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t b0 = 0; b0 < order.size(); b0 += size_t(cfg.batch_size)) {
      model.params().zero_grads();
      const size_t b1 = std::min(order.size(), b0 + size_t(cfg.batch_size));
      Tensor total;
      for (size_t k = b0; k < b1; ++k) {
        Tensor l = model.loss(train_set[size_t(order[k])], &st->dropout_rng, true);
        total = total.defined() ? add(total, l) : l;
      }
      total = scale(total, 1.0 / double(b1 - b0));
      if (!std::isfinite(total.item()))
        throw StructureError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch + 1) + ", batch " +
                             std::to_string(batches + 1));
      total.backward();
      model.params().adamw_step(lr_for, adam);
      epoch_loss += total.item();
      ++batches;
    }
    st->next_epoch = epoch + 1;

    EpochStats es;
    es.epoch = epoch + 1;
    es.loss = epoch_loss / std::max(batches, 1);
    const bool eval_now =
        ((epoch + 1) % cfg.eval_every == 0) || (epoch + 1 == max_epochs);
    if (eval_now) {
      if (!dev_set.empty()) {
        es.dev_f1 = evaluate_model(model, dev_set).micro.f1;
        if (es.dev_f1 > res.best_dev_f1) {
          res.best_dev_f1 = es.dev_f1;
          res.best_epoch = epoch + 1;
          evals_since_best = 0;
        } else {
          ++evals_since_best;
        }
      }
      if (opts.track_train_f1 || opts.target_train_f1 >= 0.0) {
        es.train_f1 = evaluate_model(model, train_set).micro.f1;
        res.final_train_f1 = es.train_f1;
      }
    }
    res.history.push_back(es);
    res.epochs_run = epoch + 1;
    if (opts.log && opts.log_every > 0 && (epoch + 1) % opts.log_every == 0) {
      (*opts.log) << "epoch " << es.epoch << " loss " << es.loss;
      if (es.dev_f1 >= 0) (*opts.log) << " dev_f1 " << es.dev_f1;
      if (es.train_f1 >= 0) (*opts.log) << " train_f1 " << es.train_f1;
      (*opts.log) << "\n";
    }
    if (opts.target_train_f1 >= 0.0 && es.train_f1 >= opts.target_train_f1) {
      res.reached_target = true;
      break;
    }
    if (!dev_set.empty() && cfg.early_stop_patience > 0 &&
        evals_since_best >= cfg.early_stop_patience)
      break;
  }
  return res;
}

std::vector<DocQuads> predict_corpus(const Model& m,
                                     const std::vector<Dialogue>& data) {
  std::vector<DocQuads> out(data.size());
  NoGradGuard ng;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < int(data.size()); ++i) {
    out[size_t(i)].doc_id = data[size_t(i)].doc_id;
    out[size_t(i)].quads = m.predict(data[size_t(i)]);
  }
  return out;
}

std::vector<DocQuads> gold_corpus(const std::vector<Dialogue>& data) {
  std::vector<DocQuads> out(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    out[i].doc_id = data[i].doc_id;
    out[i].quads = data[i].gold;
  }
  return out;
}

Metrics evaluate_model(const Model& m, const std::vector<Dialogue>& data) {
  return evaluate(predict_corpus(m, data), gold_corpus(data));
}

// -------------------------------------------------------------- checkpoint --

void save_model(const Model& m, const std::string& path, const TrainState* state,
                const std::map<std::string, std::string>& extra_meta) {
  std::map<std::string, std::string> meta = extra_meta;
  meta["format"] = "tcda-ckpt-1";
  meta["config"] = m.config().serialize();
  meta["vocab"] = m.vocab().serialize();
  if (state) meta["train_state"] = state->serialize();
  m.params().save(path, meta);
}

Model load_model(const std::string& path, TrainState* state_out) {
  std::map<std::string, std::string> meta;
  ParamStore ps = ParamStore::load(path, &meta);
  if (!meta.count("config") || !meta.count("vocab"))
    throw ParseError("checkpoint: config or vocab metadata missing");
  PipelineConfig cfg = PipelineConfig::parse(meta["config"]);
  Vocab vocab = Vocab::deserialize(meta["vocab"]);
  if (state_out) {
    if (!meta.count("train_state"))
      throw ParseError("checkpoint: no train state recorded");
    *state_out = TrainState::deserialize(meta["train_state"]);
  }
  return Model(cfg, std::move(vocab), std::move(ps));
}

std::map<std::string, AdjacencyOverride> load_adjacency_file(
    const std::string& path, std::string* checksum_out) {
  const std::string text = read_text_file(path);
  if (checksum_out) *checksum_out = sha256_hex(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("adjacency file: invalid JSON: " + std::string(e.what()));
  }
  std::map<std::string, AdjacencyOverride> out;
  for (auto& [doc, spec] : j.items()) {
    AdjacencyOverride ov;
    auto read_pairs = [&](const char* key, std::vector<std::pair<int, int>>& dst) {
      if (!spec.contains(key)) return;
      for (const auto& p : spec[key]) dst.emplace_back(p[0].get<int>(), p[1].get<int>());
    };
    read_pairs("syn", ov.syn);
    read_pairs("sem", ov.sem);
    out[doc] = std::move(ov);
  }
  return out;
}

void freeze_adjacency(Model& m, const std::vector<Dialogue>& data) {
  NoGradGuard ng;
  const PipelineConfig& cfg = m.config();
  const EncoderConfig ec{cfg.embedding_dim, cfg.encoder_depth, cfg.gcn_layers,
                         cfg.topk_ratio};
  std::map<std::string, AdjacencyOverride> frozen;
  for (const auto& d : data) {
    auto td = decompose_threads(d);
    auto tim = build_token_index(d, td);
    auto layouts = make_thread_layouts(d, td, tim, m.vocab());
    AdjacencyOverride ov;
    for (const auto& tl : layouts) {
      Tensor feats = embed_encode(tl, m.params(), ec);
      ThreadAdjacency adj = default_adjacency(tl, tim, feats);
      const int L = int(tl.token_ids.size());
      for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) {
          if (adj.syn[size_t(i) * L + j] != 0.0)
            ov.syn.push_back({tl.global_index[size_t(i)], tl.global_index[size_t(j)]});
          if (adj.sem[size_t(i) * L + j] != 0.0)
            ov.sem.push_back({tl.global_index[size_t(i)], tl.global_index[size_t(j)]});
        }
    }
    frozen[d.doc_id] = std::move(ov);
  }
  m.set_adjacency_overrides(std::move(frozen));
}

// ----------------------------------------------------------------- ablation --

PipelineConfig make_variant_config(const PipelineConfig& base,
                                   const std::string& variant) {
  PipelineConfig c = base;
  if (variant == "full") return c;
  if (variant == "no_tcdag") {
    c.graph_variant = "reply";
    return c;
  }
  if (variant == "no_drope") {
    c.position_mode = "standard";
    return c;
  }
  if (variant == "no_both") {
    c.graph_variant = "reply";
    c.position_mode = "standard";
    return c;
  }
  throw ConfigError("unknown ablation variant '" + variant + "'");
}

namespace {

const char* variant_display(const std::string& v) {
  if (v == "full") return "TCDA (full)";
  if (v == "no_tcdag") return "w/o TC-DAG";
  if (v == "no_drope") return "w/o D-RoPE";
  if (v == "no_both") return "w/o Both";
  return v.c_str();
}

double run_single(const PipelineConfig& cfg, const Vocab& vocab,
                  const std::vector<Dialogue>& train_set,
                  const std::vector<Dialogue>& dev_set,
                  const TrainOptions& opts) {
  Model m(cfg, vocab);
  TrainResult r = train_model(m, train_set, dev_set, opts);
  if (!dev_set.empty() && r.best_dev_f1 >= 0.0) return r.best_dev_f1;
  return evaluate_model(m, train_set).micro.f1;
}

}  // namespace

AblationResult run_ablation(const PipelineConfig& base,
                            const std::vector<Dialogue>& train_set,
                            const std::vector<Dialogue>& dev_set,
                            const std::vector<std::string>& variants,
                            const std::vector<uint64_t>& seeds,
                            const TrainOptions& opts) {
  if (variants.empty()) throw ConfigError("ablation: variant list is empty");
  if (seeds.empty()) throw ConfigError("ablation: need at least one seed");
  Vocab vocab = build_vocab(train_set);

  AblationResult res;
  for (const auto& v : variants)
    for (uint64_t s : seeds) {
      PipelineConfig cfg = make_variant_config(base, v);
      cfg.seed = s;
      AblationRow row;
      row.variant = v;
      row.seed = s;
      row.dev_f1 = run_single(cfg, vocab, train_set, dev_set, opts);
      res.rows.push_back(row);
    }

  for (const auto& v : variants) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : res.rows)
      if (r.variant == v) {
        sum += r.dev_f1;
        ++n;
      }
    res.mean_dev_f1[v] = sum / std::max(n, 1);
  }

  std::ostringstream os;
  char buf[128];
  os << "Variant            MicroF1    Delta\n";
  const bool has_full = res.mean_dev_f1.count("full") > 0;
  const double full_f1 = has_full ? res.mean_dev_f1.at("full") : 0.0;
  for (const auto& v : variants) {
    const double f1 = res.mean_dev_f1.at(v);
    if (has_full && v != "full")
      std::snprintf(buf, sizeof(buf), "%-18s %.4f     %+.4f\n", variant_display(v),
                    f1, f1 - full_f1);
    else
      std::snprintf(buf, sizeof(buf), "%-18s %.4f     -\n", variant_display(v), f1);
    os << buf;
  }
  res.table_text = os.str();
  return res;
}

SweepResult run_sweep(const PipelineConfig& base,
                      const std::vector<Dialogue>& train_set,
                      const std::vector<Dialogue>& dev_set,
                      const TrainOptions& opts) {
  Vocab vocab = build_vocab(train_set);
  SweepResult res;
  for (int layers = 1; layers <= 4; ++layers) {
    PipelineConfig cfg = base;
    cfg.dag_layers = layers;
    res.rows.push_back({"layers", layers,
                        run_single(cfg, vocab, train_set, dev_set, opts)});
  }
  for (int w = 1; w <= 4; ++w) {
    PipelineConfig cfg = base;
    cfg.window = w;
    res.rows.push_back({"window", w,
                        run_single(cfg, vocab, train_set, dev_set, opts)});
  }
  std::ostringstream os;
  os << "Param    Value   MicroF1\n";
  char buf[64];
  for (const auto& r : res.rows) {
    std::snprintf(buf, sizeof(buf), "%-8s %-7d %.4f\n", r.param.c_str(), r.value,
                  r.dev_f1);
    os << buf;
  }
  res.table_text = os.str();
  return res;
}

// ------------------------------------------------------------------ run dir --

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ConfigError("cannot create directory " + path + ": " + ec.message());
}

void write_run_manifest(const std::string& dir, const PipelineConfig& cfg,
                        const std::map<std::string, std::string>& files) {
  nlohmann::json j;
  j["tool"] = "tcda";
  j["config_hash"] = sha256_hex(cfg.serialize());
  nlohmann::json jf;
  for (const auto& [name, path] : files) {
    jf[name] = sha256_hex(read_text_file(path));
  }
  j["files"] = jf;
  write_text_file(dir + "/manifest.json", j.dump(2));
}

}  // namespace tcda
