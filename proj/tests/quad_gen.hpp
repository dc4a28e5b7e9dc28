// Test-only generator of conflict-free quadruple sets over a dialogue: spans
// are pairwise disjoint and intra-utterance, targets are distinct, so the
// grid encoding is collision-free and decoding is an exact inverse.
#pragma once

#include <vector>

#include "tcda/dialogue.hpp"

namespace quad_gen {

inline std::vector<tcda::Quadruple> random_quads(const tcda::Dialogue& d,
                                                 const tcda::TokenIndexMap& tim,
                                                 tcda::Rng& rng, int max_quads) {
  using tcda::Span;
  // free content positions per utterance
  std::vector<std::vector<int>> free_pos(size_t(d.size()) + 1);
  for (int u = 1; u <= d.size(); ++u) {
    const int base = tim.block_start[size_t(u)];
    for (size_t k = 0; k < d.utt(u).tokens.size(); ++k)
      free_pos[size_t(u)].push_back(base + 1 + int(k));
  }

  auto take_span = [&](tcda::Rng& r) -> Span {
    // pick an utterance with room, then a contiguous free run of length 1-2
    std::vector<int> candidates;
    for (int u = 1; u <= d.size(); ++u)
      if (!free_pos[size_t(u)].empty()) candidates.push_back(u);
    if (candidates.empty()) return Span{};
    std::uniform_int_distribution<int> up(0, int(candidates.size()) - 1);
    const int u = candidates[size_t(up(r))];
    auto& fp = free_pos[size_t(u)];
    std::uniform_int_distribution<int> ip(0, int(fp.size()) - 1);
    const int idx = ip(r);
    const int start = fp[size_t(idx)];
    std::uniform_int_distribution<int> len_p(1, 2);
    int len = len_p(r);
    if (len == 2 && (idx + 1 >= int(fp.size()) || fp[size_t(idx) + 1] != start + 1))
      len = 1;
    Span s{start, start + len - 1};
    fp.erase(fp.begin() + idx, fp.begin() + idx + len);
    return s;
  };

  std::vector<tcda::Quadruple> quads;
  std::uniform_int_distribution<int> nq(0, max_quads);
  const int want = nq(rng);
  for (int q = 0; q < want; ++q) {
    tcda::Quadruple quad;
    quad.target = take_span(rng);
    quad.aspect = take_span(rng);
    quad.opinion = take_span(rng);
    if (!quad.target.valid() || !quad.aspect.valid() || !quad.opinion.valid())
      break;  // ran out of room
    std::uniform_int_distribution<int> sp(0, 2);
    const int s = sp(rng);
    quad.sentiment = s == 0   ? tcda::Sentiment::Pos
                     : s == 1 ? tcda::Sentiment::Neg
                              : tcda::Sentiment::Neu;
    quads.push_back(quad);
  }
  return quads;
}

}  // namespace quad_gen
