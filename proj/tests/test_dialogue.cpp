#include <set>

#include "doctest.h"
#include "tcda/dialogue.hpp"

using namespace tcda;

namespace {

// Reply shape mirrored from a seven-utterance dialogue with three branches.
const char* kSeven = R"({"doc_id":"seven","sentences":[
  {"speaker":"a","tokens":["r1","r2"],"reply":-1},
  {"speaker":"b","tokens":["x"],"reply":0},
  {"speaker":"a","tokens":["y","z"],"reply":1},
  {"speaker":"c","tokens":["p"],"reply":0},
  {"speaker":"b","tokens":["q"],"reply":3},
  {"speaker":"c","tokens":["m"],"reply":0},
  {"speaker":"a","tokens":["n"],"reply":5}]})";

}  // namespace

TEST_CASE("parse builds a validated dialogue with three branches") {
  Dialogue d = parse_dialogue(kSeven);
  CHECK(d.size() == 7);
  CHECK(d.utt(2).reply_to == 1);
  CHECK(d.utt(7).reply_to == 6);
  auto td = decompose_threads(d);
  CHECK(td.thread_count() == 3);
}

TEST_CASE("single utterance dialogue is a root with one trivial thread") {
  Dialogue d = parse_dialogue(
      R"({"doc_id":"one","sentences":[{"speaker":"a","tokens":["hi"],"reply":-1}]})");
  CHECK(d.size() == 1);
  auto td = decompose_threads(d);
  REQUIRE(td.thread_count() == 1);
  CHECK(td.threads[0] == std::vector<int>{1});
}

TEST_CASE("forward reply is a structure error") {
  const char* bad = R"({"doc_id":"bad","sentences":[
    {"speaker":"a","tokens":["r"],"reply":-1},
    {"speaker":"b","tokens":["x"],"reply":0},
    {"speaker":"c","tokens":["y"],"reply":4}]})";
  CHECK_THROWS_WITH_AS(parse_dialogue(bad), doctest::Contains("forward reply"),
                       StructureError);
}

TEST_CASE("malformed records raise parse errors with a field path") {
  CHECK_THROWS_AS(parse_dialogue("{"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dialogue(R"({"doc_id":"x","sentences":[{"tokens":["a"],"reply":-1}]})"),
      doctest::Contains("speaker"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_dialogue(
          R"({"doc_id":"x","sentences":[{"speaker":"s","tokens":[],"reply":-1}]})"),
      doctest::Contains("tokens"), ParseError);
}

TEST_CASE("thread decomposition partitions and orders") {
  // replies 2->1, 3->2, 4->1, 5->4
  Dialogue d = parse_dialogue(R"({"doc_id":"t","sentences":[
    {"speaker":"a","tokens":["r"],"reply":-1},
    {"speaker":"b","tokens":["x"],"reply":0},
    {"speaker":"a","tokens":["y"],"reply":1},
    {"speaker":"c","tokens":["p"],"reply":0},
    {"speaker":"b","tokens":["q"],"reply":3}]})");
  auto td = decompose_threads(d);
  REQUIRE(td.thread_count() == 2);
  CHECK(td.threads[0] == std::vector<int>({1, 2, 3}));
  CHECK(td.threads[1] == std::vector<int>({1, 4, 5}));

  // brute-force: every non-root utterance in exactly one thread
  std::set<int> seen;
  for (const auto& t : td.threads) {
    CHECK(t.front() == 1);
    for (size_t i = 1; i < t.size(); ++i) {
      CHECK(t[i] > t[i - 1]);
      CHECK(seen.insert(t[i]).second);
    }
  }
  CHECK(seen.size() == 4);
  CHECK(td.thread_of[1] == 0);  // root marker matches every thread
}

TEST_CASE("chain dialogue decomposes into a single thread") {
  Dialogue d = parse_dialogue(R"({"doc_id":"c","sentences":[
    {"speaker":"a","tokens":["r"],"reply":-1},
    {"speaker":"b","tokens":["x"],"reply":0},
    {"speaker":"a","tokens":["y"],"reply":1},
    {"speaker":"b","tokens":["z"],"reply":2}]})");
  auto td = decompose_threads(d);
  REQUIRE(td.thread_count() == 1);
  CHECK(td.threads[0] == std::vector<int>({1, 2, 3, 4}));
}

namespace {

// independent path-walk oracle: tokens strictly before this one on the
// root -> utterance reply path, counting whole ancestor blocks
int path_walk_p_tok(const Dialogue& d, int utt_id, int offset) {
  int count = offset;
  int u = d.utt(utt_id).reply_to;
  while (u != 0) {
    count += int(d.utt(u).tokens.size()) + 2;
    u = d.utt(u).reply_to;
  }
  return count;
}

}  // namespace

TEST_CASE("token index map: positions, chaining, monotonicity") {
  Dialogue d = parse_dialogue(kSeven);
  auto td = decompose_threads(d);
  auto tim = build_token_index(d, td);

  // root block: two wrappers plus two content tokens, p_tok = offset
  const int root_len = 2 + 2;
  for (int i = 0; i < root_len; ++i) {
    CHECK(tim.tokens[size_t(i)].p_utt == 0);
    CHECK(tim.tokens[size_t(i)].p_tok == i);
    CHECK(tim.tokens[size_t(i)].thread_id == 0);
  }

  // first token of u_2 continues the root block count
  const int u2_first = tim.block_start[2];
  CHECK(tim.tokens[size_t(u2_first)].p_tok == root_len);
  CHECK(tim.tokens[size_t(u2_first)].p_utt == 1);

  // u_4 opens another thread: same distance restart as u_2
  const int u4_first = tim.block_start[4];
  CHECK(tim.tokens[size_t(u4_first)].p_tok == root_len);
  CHECK(tim.tokens[size_t(u4_first)].p_utt == 1);
  CHECK(tim.tokens[size_t(u4_first)].thread_id !=
        tim.tokens[size_t(u2_first)].thread_id);

  // every token agrees with the path-walk oracle
  for (int i = 0; i < tim.n_tokens(); ++i) {
    const TokenInfo& t = tim.tokens[size_t(i)];
    CHECK(t.p_tok == path_walk_p_tok(d, t.utterance_id, t.offset));
  }

  // contiguity inside each utterance block
  for (int u = 1; u <= d.size(); ++u) {
    const int b = tim.block_start[size_t(u)];
    const int len = int(d.utt(u).tokens.size()) + 2;
    for (int k = 1; k < len; ++k)
      CHECK(tim.tokens[size_t(b + k)].p_tok == tim.tokens[size_t(b)].p_tok + k);
  }

  // within a chain-shaped thread, flattening order is strictly increasing in
  // p_tok and non-decreasing in p_utt
  for (const auto& thread : td.threads) {
    int last_ptok = -1, last_putt = -1;
    for (int u : thread) {
      const int b = tim.block_start[size_t(u)];
      const int len = int(d.utt(u).tokens.size()) + 2;
      for (int k = 0; k < len; ++k) {
        CHECK(tim.tokens[size_t(b + k)].p_tok > last_ptok);
        CHECK(tim.tokens[size_t(b + k)].p_utt >= last_putt);
        last_ptok = tim.tokens[size_t(b + k)].p_tok;
        last_putt = tim.tokens[size_t(b + k)].p_utt;
      }
    }
  }
}

TEST_CASE("gold quadruples convert to wrapped spans and back") {
  const char* rec = R"({"doc_id":"g","sentences":[
    {"speaker":"a","tokens":["t0","f"],"reply":-1},
    {"speaker":"b","tokens":["a0","p0"],"reply":0}],
    "quadruples":[{"target":[0,0],"aspect":[2,2],"opinion":[3,3],"sentiment":"neg"}]})";
  Dialogue d = parse_dialogue(rec);
  REQUIRE(d.gold.size() == 1);
  // wrapped axis: [CLS t0 f SPK][CLS a0 p0 SPK]
  CHECK(d.gold[0].target == Span{1, 1});
  CHECK(d.gold[0].aspect == Span{5, 5});
  CHECK(d.gold[0].opinion == Span{6, 6});
  CHECK(d.gold[0].sentiment == Sentiment::Neg);

  // serialisation converts back to content indices
  const std::string out = dialogue_to_json(d);
  Dialogue d2 = parse_dialogue(out);
  CHECK(d2.gold == d.gold);
  CHECK(dialogue_to_json(d2) == out);
}

TEST_CASE("cross-utterance spans are rejected at parse time") {
  const char* rec = R"({"doc_id":"x","sentences":[
    {"speaker":"a","tokens":["t0","f"],"reply":-1},
    {"speaker":"b","tokens":["a0","p0"],"reply":0}],
    "quadruples":[{"target":[1,2],"aspect":[2,2],"opinion":[3,3],"sentiment":"pos"}]})";
  CHECK_THROWS_WITH_AS(parse_dialogue(rec), doctest::Contains("cross-utterance"),
                       StructureError);
}

TEST_CASE("null spans: dropped by default, kept in permissive mode") {
  const char* rec = R"({"doc_id":"n","sentences":[
    {"speaker":"a","tokens":["t0"],"reply":-1}],
    "quadruples":[{"target":[0,0],"aspect":null,"opinion":[0,0],"sentiment":"neu"}]})";
  Dialogue strict = parse_dialogue(rec, false);
  CHECK(strict.gold.empty());
  CHECK(strict.dropped_null_quads == 1);

  Dialogue permissive = parse_dialogue(rec, true);
  REQUIRE(permissive.gold.size() == 1);
  CHECK_FALSE(permissive.gold[0].aspect.valid());  // reserved empty span
}

TEST_CASE("same bytes give identical structures") {
  Dialogue a = parse_dialogue(kSeven), b = parse_dialogue(kSeven);
  auto ta = decompose_threads(a), tb = decompose_threads(b);
  CHECK(ta.threads == tb.threads);
  auto ia = build_token_index(a, ta), ib = build_token_index(b, tb);
  REQUIRE(ia.n_tokens() == ib.n_tokens());
  for (int i = 0; i < ia.n_tokens(); ++i) {
    CHECK(ia.tokens[size_t(i)].p_tok == ib.tokens[size_t(i)].p_tok);
    CHECK(ia.tokens[size_t(i)].p_utt == ib.tokens[size_t(i)].p_utt);
    CHECK(ia.tokens[size_t(i)].thread_id == ib.tokens[size_t(i)].thread_id);
  }
}
