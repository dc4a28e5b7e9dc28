#include "tcda/tc_dag.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace tcda {

GraphVariant graph_variant_from_name(const std::string& name) {
  if (name == "tc") return GraphVariant::Tc;
  if (name == "standard") return GraphVariant::Standard;
  if (name == "reply") return GraphVariant::Reply;
  throw ConfigError("unknown graph variant '" + name + "'");
}

const char* graph_variant_name(GraphVariant v) {
  switch (v) {
    case GraphVariant::Tc: return "tc";
    case GraphVariant::Standard: return "standard";
    default: return "reply";
  }
}

int thread_start_index(const ThreadDecomposition& td, int thread_id) {
  const auto& t = td.threads[size_t(thread_id) - 1];
  if (t.size() < 2) return 1;
  const int first = t[1];
  return first == 2 ? 1 : first;
}

namespace {

void finish(TcDag& g) {
  std::sort(g.edges.begin(), g.edges.end(),
            [](const DagEdge& a, const DagEdge& b) {
              return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
            });
  g.preds.assign(size_t(g.node_count) + 1, {});
  for (const auto& e : g.edges)
    g.preds[size_t(e.dst)].emplace_back(e.src, e.rel);
}

}  // namespace

TcDag build_tc_dag(const Dialogue& d, const ThreadDecomposition& td, int window,
                   GraphVariant variant) {
  if (window < 1) throw ConfigError("window must be >= 1");
  for (int u = 2; u <= d.size(); ++u)
    if (size_t(u) >= td.thread_of.size() || td.thread_of[size_t(u)] == 0)
      throw StructureError("thread map does not cover utterance " +
                           std::to_string(u));

  TcDag g;
  g.node_count = d.size();
  g.window = window;
  g.variant = variant;

  if (variant == GraphVariant::Reply) {
    for (const auto& u : d.utterances)
      if (u.reply_to > 0)
        g.edges.push_back({u.reply_to, u.id,
                           d.utt(u.reply_to).speaker == u.speaker ? 1 : 0});
    finish(g);
    return g;
  }

  for (int i = 2; i <= d.size(); ++i) {
    const std::string& spk = d.utt(i).speaker;
    int c = 0;

    if (variant == GraphVariant::Standard) {
      // full retrospective history, no thread floor, no anchor clause
      for (int tau = i - 1; tau >= 1 && c < window; --tau) {
        const int r = d.utt(tau).speaker == spk ? 1 : 0;
        g.edges.push_back({tau, i, r});
        c += r;
      }
      continue;
    }

    const int tid = td.thread_of[size_t(i)];
    const int start = thread_start_index(td, tid);
    // Walk this thread's earlier members newest-first; when the thread opens
    // the dialogue the walk bottoms out at the root itself.
    const auto& members = td.threads[size_t(tid) - 1];
    std::vector<int> walk;
    for (int m : members)
      if (m < i && m >= start) walk.push_back(m);
    std::sort(walk.rbegin(), walk.rend());

    for (int tau : walk) {
      if (c >= window) break;
      const int r = d.utt(tau).speaker == spk ? 1 : 0;
      g.edges.push_back({tau, i, r});
      c += r;
    }
    if (c < window && start > 1) {
      const int r = d.utt(1).speaker == spk ? 1 : 0;
      g.edges.push_back({1, i, r});
    }
  }
  finish(g);
  return g;
}

std::vector<std::string> validate_dag(const TcDag& g, const Dialogue& d,
                                      const ThreadDecomposition& td) {
  std::vector<std::string> report;
  auto bad = [&report](const std::string& msg) { report.push_back(msg); };

  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    const std::string tag =
        "(u" + std::to_string(e.src) + " -> u" + std::to_string(e.dst) + ")";
    if (e.src < 1 || e.src > g.node_count || e.dst < 1 || e.dst > g.node_count) {
      bad("edge out of range " + tag);
      continue;
    }
    if (e.src >= e.dst) bad("backward edge " + tag);
    if (e.dst == 1) bad("root has incoming edge " + tag);
    if (e.rel != 0 && e.rel != 1) bad("bad relation on edge " + tag);
    const int want = d.utt(e.src).speaker == d.utt(e.dst).speaker ? 1 : 0;
    if (e.rel != want) bad("relation does not match speakers " + tag);
    if (!seen.insert({e.src, e.dst}).second) bad("duplicate edge " + tag);
  }
  if (g.variant != GraphVariant::Tc) return report;  // structural checks only

  for (int i = 2; i <= g.node_count; ++i) {
    const int tid = td.thread_of[size_t(i)];
    const int start = thread_start_index(td, tid);
    int same_in_thread = 0;
    int root_edges = 0;
    for (const auto& [src, rel] : g.preds[size_t(i)]) {
      if (src == 1) ++root_edges;
      const bool in_thread =
          src == 1 || (td.thread_of[size_t(src)] == tid && src >= start);
      if (!in_thread)
        bad("cross-thread edge (u" + std::to_string(src) + " -> u" +
            std::to_string(i) + ")");
      if (rel == 1 && in_thread) ++same_in_thread;
    }
    if (same_in_thread > g.window)
      bad("window violation at u" + std::to_string(i) + ": " +
          std::to_string(same_in_thread) + " same-speaker in-thread edges, window " +
          std::to_string(g.window));
    // c as the walk left it: same-speaker edges from non-root thread members
    int c = 0;
    for (const auto& [src, rel] : g.preds[size_t(i)])
      if (rel == 1 && src != 1 && td.thread_of[size_t(src)] == tid) ++c;
    if (start > 1) {
      if (c < g.window && root_edges != 1)
        bad("missing root anchor at u" + std::to_string(i));
      if (c >= g.window && root_edges != 0)
        bad("unexpected root anchor at u" + std::to_string(i));
    }
  }
  return report;
}

std::string export_dot(const TcDag& g, const Dialogue& d) {
  std::ostringstream os;
  os << "digraph \"" << (d.doc_id.empty() ? "dialogue" : d.doc_id) << "\" {\n";
  os << "  rankdir=LR;\n";
  for (const auto& u : d.utterances)
    os << "  u" << u.id << " [label=\"u" << u.id << "/" << u.speaker << "\"];\n";
  for (const auto& e : g.edges)
    os << "  u" << e.src << " -> u" << e.dst
       << (e.rel == 1 ? " [style=dashed];" : " [style=solid];") << "\n";
  os << "}\n";
  return os.str();
}

}  // namespace tcda
