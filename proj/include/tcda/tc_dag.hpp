// Thread-constrained DAG over utterances: retrospective same-speaker window
// inside each thread, root anchoring for global connectivity, plus the
// "standard" (no thread floor) and "reply" (reply edges only) variants used
// by the graph-structure ablations.
#pragma once

#include <string>
#include <vector>

#include "tcda/dialogue.hpp"

namespace tcda {

enum class GraphVariant { Tc, Standard, Reply };
GraphVariant graph_variant_from_name(const std::string& name);
const char* graph_variant_name(GraphVariant v);

struct DagEdge {
  int src = 0;
  int dst = 0;
  int rel = 0;  // 1 when src and dst share a speaker
  bool operator==(const DagEdge& o) const = default;
  auto operator<=>(const DagEdge& o) const = default;
};

struct TcDag {
  int node_count = 0;
  int window = 0;
  GraphVariant variant = GraphVariant::Tc;
  std::vector<DagEdge> edges;  // sorted by (dst, src)
  // Predecessors per node as (src, rel), ascending src; index 0 unused.
  std::vector<std::vector<std::pair<int, int>>> preds;
};

// Thread start index as used by the window walk: 1 for the thread that opens
// the dialogue (its context begins at the root), otherwise the thread's first
// non-root utterance id.
int thread_start_index(const ThreadDecomposition& td, int thread_id);

TcDag build_tc_dag(const Dialogue& d, const ThreadDecomposition& td, int window,
                   GraphVariant variant = GraphVariant::Tc);

// Structural audit; one entry per violation, empty iff the graph is valid.
std::vector<std::string> validate_dag(const TcDag& g, const Dialogue& d,
                                      const ThreadDecomposition& td);

// Graphviz text; same-speaker edges dashed, inter-speaker solid.
std::string export_dot(const TcDag& g, const Dialogue& d);

}  // namespace tcda
