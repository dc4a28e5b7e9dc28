#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "tcda/grad_check.hpp"
#include "tcda/pipeline.hpp"

using namespace tcda;

namespace {

PipelineConfig tiny_config() {
  PipelineConfig c;
  c.embedding_dim = 8;
  c.rotary_dim = 8;
  c.encoder_depth = 1;
  c.gcn_layers = 1;
  c.dag_layers = 1;
  c.window = 2;
  c.topk_ratio = 1.0;
  c.dropout = 0.1;
  c.batch_size = 2;
  c.epochs = 2;
  c.seed = 7;
  c.early_stop_patience = 0;
  return c;
}

SyntheticSpec tiny_spec() {
  SyntheticSpec s;
  s.num_dialogues = 6;
  s.min_utterances = 4;
  s.max_utterances = 6;
  s.branching = 2;
  s.quads_per_dialogue = 1;
  s.distractors = 1;
  s.min_tokens = 1;
  s.max_tokens = 3;
  s.seed = 5;
  return s;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("config serialisation round trips exactly") {
  PipelineConfig c = tiny_config();
  c.topk_ratio = 0.8;
  c.lr_rest = 3.14159e-4;
  c.adjacency_file = "";
  PipelineConfig back = PipelineConfig::parse(c.serialize());
  CHECK(back == c);
  CHECK(back.serialize() == c.serialize());
}

TEST_CASE("config validation rejects bad values") {
  PipelineConfig c = tiny_config();
  c.topk_ratio = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.theta_mac = 20000.0;  // must stay below theta_mic
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.graph_variant = "ring";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("no_such_key = 1\n"), ConfigError);
}

TEST_CASE("TCDA_SEED environment override") {
  PipelineConfig c = tiny_config();
  setenv("TCDA_SEED", "12345", 1);
  apply_env_overrides(c);
  unsetenv("TCDA_SEED");
  CHECK(c.seed == 12345);
}

TEST_CASE("synthetic generator is pure and self-consistent") {
  SyntheticSpec spec = tiny_spec();
  auto a = gen_synthetic(spec);
  auto b = gen_synthetic(spec);
  REQUIRE(a.size() == size_t(spec.num_dialogues));
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(dialogue_to_json(a[i]) == dialogue_to_json(b[i]));

  for (const auto& d : a) {
    // the record passes the regular parse path and grid encoding
    Dialogue re = parse_dialogue(dialogue_to_json(d));
    CHECK(int(re.gold.size()) == spec.quads_per_dialogue);
    auto tim = build_token_index(re, decompose_threads(re));
    CHECK_NOTHROW(encode_grids(tim, re.gold));
  }
}

TEST_CASE("infeasible synthetic specs are rejected") {
  SyntheticSpec s = tiny_spec();
  s.quads_per_dialogue = 5;  // more quads than threads
  CHECK_THROWS_AS(s.validate(), ConfigError);
  SyntheticSpec s2 = tiny_spec();
  s2.max_utterances = 2;
  CHECK_THROWS_AS(s2.validate(), ConfigError);
}

TEST_CASE("synthetic spec serialisation round trips") {
  SyntheticSpec s = tiny_spec();
  SyntheticSpec back = SyntheticSpec::parse(s.serialize());
  CHECK(back.serialize() == s.serialize());
}

TEST_CASE("forward pass and prediction run on every graph and position mode") {
  auto data = gen_synthetic(tiny_spec());
  for (const char* gv : {"tc", "standard", "reply"})
    for (const char* pm : {"drope", "standard"}) {
      PipelineConfig cfg = tiny_config();
      cfg.graph_variant = gv;
      cfg.position_mode = pm;
      Model m(cfg, build_vocab(data));
      Tensor l = m.loss(data[0], nullptr, false);
      CHECK(std::isfinite(l.item()));
      CHECK_NOTHROW(m.predict(data[0]));
    }
}

TEST_CASE("fixed seed makes losses and training deterministic") {
  auto data = gen_synthetic(tiny_spec());
  PipelineConfig cfg = tiny_config();

  Model a(cfg, build_vocab(data));
  Model b(cfg, build_vocab(data));
  CHECK(a.loss(data[0], nullptr, false).item() ==
        b.loss(data[0], nullptr, false).item());

  TrainOptions opts;
  Model ta(cfg, build_vocab(data));
  Model tb(cfg, build_vocab(data));
  TrainResult ra = train_model(ta, data, {}, opts);
  TrainResult rb = train_model(tb, data, {}, opts);
  REQUIRE(ra.history.size() == rb.history.size());
  for (size_t i = 0; i < ra.history.size(); ++i)
    CHECK(ra.history[i].loss == rb.history[i].loss);
  CHECK(evaluate_model(ta, data).micro.f1 == evaluate_model(tb, data).micro.f1);
}

TEST_CASE("checkpoint resume reproduces the next step bit for bit") {
  auto data = gen_synthetic(tiny_spec());
  PipelineConfig cfg = tiny_config();
  cfg.epochs = 3;

  // uninterrupted three epochs
  Model full(cfg, build_vocab(data));
  TrainState full_state = TrainState::fresh(cfg.seed);
  TrainOptions opts;
  TrainResult r_full = train_model(full, data, {}, opts, &full_state);
  REQUIRE(r_full.history.size() == 3);

  // two epochs, checkpoint, reload, one more epoch
  Model part(cfg, build_vocab(data));
  TrainState st = TrainState::fresh(cfg.seed);
  TrainOptions two = opts;
  two.max_epochs = 2;
  train_model(part, data, {}, two, &st);
  const std::string ckpt = temp_path("tcda_resume_test.ckpt");
  save_model(part, ckpt, &st);

  TrainState st2;
  Model resumed = load_model(ckpt, &st2);
  CHECK(st2.next_epoch == 2);
  TrainOptions three = opts;
  three.max_epochs = 3;
  TrainResult r_tail = train_model(resumed, data, {}, three, &st2);
  REQUIRE(r_tail.history.size() == 1);
  CHECK(r_tail.history[0].loss == r_full.history[2].loss);
  std::remove(ckpt.c_str());
}

TEST_CASE("checkpoint reload gives the identical loss") {
  auto data = gen_synthetic(tiny_spec());
  PipelineConfig cfg = tiny_config();
  Model m(cfg, build_vocab(data));
  TrainOptions opts;
  train_model(m, data, {}, opts);
  const double loss = m.loss(data[1], nullptr, false).item();

  const std::string ckpt = temp_path("tcda_roundtrip_test.ckpt");
  save_model(m, ckpt);
  Model back = load_model(ckpt);
  CHECK(back.loss(data[1], nullptr, false).item() == loss);
  std::remove(ckpt.c_str());
}

TEST_CASE("ablation variants compose") {
  PipelineConfig base = tiny_config();
  PipelineConfig no_both = make_variant_config(base, "no_both");
  PipelineConfig composed =
      make_variant_config(make_variant_config(base, "no_tcdag"), "no_drope");
  CHECK(no_both == composed);
  CHECK(make_variant_config(base, "full") == base);
  CHECK_THROWS_AS(make_variant_config(base, "nope"), ConfigError);
}

TEST_CASE("end-to-end gradients check out on a two-utterance dialogue") {
  Dialogue d = parse_dialogue(R"({"doc_id":"e2e",
    "sentences":[{"speaker":"s0","tokens":["T0","f1"],"reply":-1},
                 {"speaker":"s1","tokens":["A0","P0"],"reply":0}],
    "quadruples":[{"target":[0,0],"aspect":[2,2],"opinion":[3,3],"sentiment":"pos"}]})");
  PipelineConfig cfg = tiny_config();
  cfg.dropout = 0.0;
  Model m(cfg, build_vocab({d}));
  auto r = grad_check(m.params(), [&]() { return m.loss(d, nullptr, false); });
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("run manifest lists file hashes") {
  const std::string dir = temp_path("tcda_manifest_test");
  ensure_dir(dir);
  write_text_file(dir + "/a.txt", "hello");
  write_run_manifest(dir, tiny_config(), {{"a.txt", dir + "/a.txt"}});
  const std::string manifest = read_text_file(dir + "/manifest.json");
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find(sha256_hex("hello")) != std::string::npos);
  std::filesystem::remove_all(dir);
}
