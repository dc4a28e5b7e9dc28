#include <algorithm>

#include "dag_oracle.hpp"
#include "doctest.h"
#include "tcda/tc_dag.hpp"

using namespace tcda;

namespace {

Dialogue fig3_like(const std::vector<std::string>& speakers) {
  // replies 2->1, 3->2, 4->1, 5->4, 6->1, 7->6
  const std::vector<int> reply{-1, 0, 1, 0, 3, 0, 5};
  std::ostringstream os;
  os << R"({"doc_id":"fig3","sentences":[)";
  for (size_t i = 0; i < reply.size(); ++i) {
    if (i) os << ",";
    os << R"({"speaker":")" << speakers[i] << R"(","tokens":["w"],"reply":)"
       << reply[i] << "}";
  }
  os << "]}";
  return parse_dialogue(os.str());
}

dag_oracle::EdgeSet to_set(const TcDag& g) {
  dag_oracle::EdgeSet s;
  for (const auto& e : g.edges) s.insert({e.src, e.dst, e.rel});
  return s;
}

}  // namespace

TEST_CASE("divergent-thread openers anchor to the root at window 1") {
  Dialogue d = fig3_like({"a", "b", "a", "c", "b", "c", "a"});
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 1);
  // u_4 and u_6 open non-first threads: their walks are empty, so each gets
  // exactly the root anchor edge
  auto edges = to_set(g);
  CHECK(edges.count({1, 4, 0}));
  CHECK(edges.count({1, 6, 0}));
  // u_7 reaches u_6 inside its thread and still needs the anchor
  CHECK(edges.count({6, 7, 0}));
  CHECK(edges.count({1, 7, 1}));
  CHECK(validate_dag(g, d, td).empty());
}

TEST_CASE("single-thread chain: walk reaches the root, no extra anchor") {
  Dialogue d = parse_dialogue(R"({"doc_id":"c","sentences":[
    {"speaker":"a","tokens":["w"],"reply":-1},
    {"speaker":"b","tokens":["w"],"reply":0},
    {"speaker":"c","tokens":["w"],"reply":1}]})");
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 1);
  auto edges = to_set(g);
  // all speakers distinct: u_3 collects u_2 and u_1 inside the walk
  CHECK(edges.count({2, 3, 0}));
  CHECK(edges.count({1, 3, 0}));
  CHECK(edges.count({1, 2, 0}));
  CHECK(edges.size() == 3);
  CHECK(validate_dag(g, d, td).empty());
}

TEST_CASE("window larger than history gives one edge for a two-node dialogue") {
  Dialogue d = parse_dialogue(R"({"doc_id":"two","sentences":[
    {"speaker":"a","tokens":["w"],"reply":-1},
    {"speaker":"a","tokens":["w"],"reply":0}]})");
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 3);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0] == DagEdge{1, 2, 1});
}

TEST_CASE("same-speaker window stops the walk") {
  // chain 1<-2<-3<-4, all the same speaker, window 1: each node links only to
  // its immediate predecessor
  Dialogue d = parse_dialogue(R"({"doc_id":"same","sentences":[
    {"speaker":"a","tokens":["w"],"reply":-1},
    {"speaker":"a","tokens":["w"],"reply":0},
    {"speaker":"a","tokens":["w"],"reply":1},
    {"speaker":"a","tokens":["w"],"reply":2}]})");
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 1);
  auto edges = to_set(g);
  CHECK(edges == dag_oracle::EdgeSet{{1, 2, 1}, {2, 3, 1}, {3, 4, 1}});
}

TEST_CASE("window must be positive") {
  Dialogue d = fig3_like({"a", "b", "a", "c", "b", "c", "a"});
  auto td = decompose_threads(d);
  CHECK_THROWS_AS(build_tc_dag(d, td, 0), ConfigError);
}

TEST_CASE("validator flags hand-made violations") {
  Dialogue d = fig3_like({"a", "b", "a", "c", "b", "c", "a"});
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 2);
  CHECK(validate_dag(g, d, td).empty());

  SUBCASE("backward edge") {
    TcDag bad = g;
    bad.edges.push_back({3, 2, d.utt(3).speaker == d.utt(2).speaker ? 1 : 0});
    bad.preds[2].emplace_back(3, bad.edges.back().rel);
    auto report = validate_dag(bad, d, td);
    bool found = false;
    for (const auto& r : report) found |= r.find("backward edge") != std::string::npos;
    CHECK(found);
  }

  SUBCASE("window violation") {
    // force too many same-speaker in-thread predecessors onto u_7
    Dialogue same = fig3_like({"a", "b", "a", "c", "b", "a", "a"});
    auto td2 = decompose_threads(same);
    TcDag g2 = build_tc_dag(same, td2, 1);
    TcDag bad = g2;
    // duplicate the same-speaker thread edge u_6 -> u_7 as a second
    // same-speaker source by grafting u_1 (already same speaker via anchor)
    bad.window = 0;  // shrink the declared window below the actual count
    auto report = validate_dag(bad, same, td2);
    bool found = false;
    for (const auto& r : report)
      found |= r.find("window violation") != std::string::npos;
    CHECK(found);
  }

  SUBCASE("cross-thread edge") {
    TcDag bad = g;
    bad.edges.push_back({4, 7, d.utt(4).speaker == d.utt(7).speaker ? 1 : 0});
    bad.preds[7].emplace_back(4, bad.edges.back().rel);
    auto report = validate_dag(bad, d, td);
    bool found = false;
    for (const auto& r : report)
      found |= r.find("cross-thread") != std::string::npos;
    CHECK(found);
  }
}

TEST_CASE("builder matches the brute-force transcription on random trees") {
  Rng rng(20240817);
  for (int round = 0; round < 300; ++round) {
    Dialogue d = dag_oracle::random_dialogue(rng, 18, 4);
    auto td = decompose_threads(d);
    for (int w = 1; w <= 4; ++w) {
      TcDag g = build_tc_dag(d, td, w);
      CHECK(to_set(g) == dag_oracle::build(d, w));
      CHECK(validate_dag(g, d, td).empty());
    }
  }
}

TEST_CASE("graph variants") {
  Dialogue d = fig3_like({"a", "b", "a", "b", "a", "b", "a"});
  auto td = decompose_threads(d);

  TcDag reply = build_tc_dag(d, td, 2, GraphVariant::Reply);
  CHECK(reply.edges.size() == 6);  // one reply edge per non-root utterance
  for (const auto& e : reply.edges) CHECK(d.utt(e.dst).reply_to == e.src);

  TcDag standard = build_tc_dag(d, td, 2, GraphVariant::Standard);
  // full-history walk: u_7 sees u_6, u_5 (same speaker c=1), u_4, u_3 (c=2 stop)
  auto es = to_set(standard);
  CHECK(es.count({6, 7, 0}));
  CHECK(es.count({5, 7, 1}));
  CHECK(es.count({4, 7, 0}));
  CHECK(es.count({3, 7, 1}));
  CHECK_FALSE(es.count({2, 7, 0}));

  // contiguous-thread dialogues: tc edges are standard edges or root anchors
  Rng rng(99);
  for (int round = 0; round < 100; ++round) {
    Dialogue rd = dag_oracle::random_dialogue(rng, 14, 3);
    auto rtd = decompose_threads(rd);
    bool contiguous = true;
    for (const auto& t : rtd.threads)
      for (size_t i = 2; i < t.size(); ++i)
        if (t[i] != t[i - 1] + 1) contiguous = false;
    if (!contiguous) continue;
    for (int w = 1; w <= 3; ++w) {
      auto tc = to_set(build_tc_dag(rd, rtd, w, GraphVariant::Tc));
      auto st = to_set(build_tc_dag(rd, rtd, w, GraphVariant::Standard));
      for (const auto& e : tc) {
        const bool in_standard = st.count(e) > 0;
        const bool root_anchor = std::get<0>(e) == 1;
        CHECK((in_standard || root_anchor));
      }
    }
  }
}

TEST_CASE("dot export is deterministic and styles relations") {
  Dialogue d = fig3_like({"a", "b", "a", "c", "b", "c", "a"});
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 1);
  const std::string dot1 = export_dot(g, d);
  const std::string dot2 = export_dot(g, d);
  CHECK(dot1 == dot2);

  size_t dashed = 0, pos = 0;
  while ((pos = dot1.find("style=dashed", pos)) != std::string::npos) {
    ++dashed;
    pos += 1;
  }
  size_t rel1 = 0;
  for (const auto& e : g.edges) rel1 += size_t(e.rel == 1);
  CHECK(dashed == rel1);

  // edgeless graph: node statements only
  Dialogue solo = parse_dialogue(
      R"({"doc_id":"solo","sentences":[{"speaker":"a","tokens":["w"],"reply":-1}]})");
  auto std2 = decompose_threads(solo);
  TcDag g2 = build_tc_dag(solo, std2, 1);
  const std::string dot = export_dot(g2, solo);
  CHECK(dot.find("->") == std::string::npos);
  CHECK(dot.find("u1") != std::string::npos);
}
