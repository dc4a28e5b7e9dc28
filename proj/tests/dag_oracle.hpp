// Test-only brute-force re-implementation of the windowed DAG construction,
// written directly from the pseudocode and independent of the library's
// builder: thread membership is recomputed by climbing reply pointers and the
// retrospective walk scans raw indices.
#pragma once

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "tcda/dialogue.hpp"

namespace dag_oracle {

using EdgeSet = std::set<std::tuple<int, int, int>>;  // (src, dst, rel)

// root-child ancestor of u, 0 for the root itself
inline int branch_of(const tcda::Dialogue& d, int u) {
  if (u == 1) return 0;
  while (d.utt(u).reply_to != 1) u = d.utt(u).reply_to;
  return u;
}

inline EdgeSet build(const tcda::Dialogue& d, int window) {
  EdgeSet edges;
  const int n = d.size();

  // first thread = the branch containing u_2; its walk bottoms out at u_1
  for (int i = 2; i <= n; ++i) {
    const int my_branch = branch_of(d, i);
    // start index of this thread's window range
    int s_i;
    if (branch_of(d, 2) == my_branch) {
      s_i = 1;
    } else {
      s_i = n + 1;
      for (int u = 2; u <= n; ++u)
        if (branch_of(d, u) == my_branch) s_i = std::min(s_i, u);
    }
    int c = 0;
    for (int tau = i - 1; tau >= s_i && c < window; --tau) {
      if (tau != 1 && branch_of(d, tau) != my_branch) continue;  // other thread
      const int r = d.utt(tau).speaker == d.utt(i).speaker ? 1 : 0;
      edges.insert({tau, i, r});
      if (r == 1) ++c;
    }
    if (c < window && s_i > 1) {
      const int r = d.utt(1).speaker == d.utt(i).speaker ? 1 : 0;
      edges.insert({1, i, r});
    }
  }
  return edges;
}

// uniform random reply tree with bounded size and speakers
inline tcda::Dialogue random_dialogue(tcda::Rng& rng, int max_utts,
                                      int max_speakers) {
  std::uniform_int_distribution<int> n_pick(1, max_utts);
  const int n = n_pick(rng);
  std::uniform_int_distribution<int> spk(0, max_speakers - 1);
  std::ostringstream os;
  os << R"({"doc_id":"rand","sentences":[)";
  for (int i = 0; i < n; ++i) {
    if (i) os << ",";
    int reply = -1;
    if (i > 0) {
      std::uniform_int_distribution<int> rp(0, i - 1);
      reply = rp(rng);
    }
    os << R"({"speaker":"s)" << spk(rng) << R"(","tokens":["w"],"reply":)" << reply
       << "}";
  }
  os << "]}";
  return tcda::parse_dialogue(os.str());
}

}  // namespace dag_oracle
