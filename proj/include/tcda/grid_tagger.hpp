// Grid tagging: building the three token-pair label grids from quadruples,
// class-wise rotary scoring heads, the weighted cross-entropy objective,
// span/pair decoding back to quadruples, and corpus metrics.
#pragma once

#include <string>
#include <vector>

#include "tcda/dialogue.hpp"
#include "tcda/param_store.hpp"
#include "tcda/tensor.hpp"

namespace tcda {

enum EntLabel { kEntOther = 0, kEntTgt = 1, kEntAsp = 2, kEntOpi = 3 };
enum PairLabel { kPairOther = 0, kPairH2H = 1, kPairT2T = 2 };
enum PolLabel { kPolOther = 0, kPolPos = 1, kPolNeg = 2, kPolNeu = 3 };

inline constexpr int kEntClasses = 4;
inline constexpr int kPairClasses = 3;
inline constexpr int kPolClasses = 4;

struct LabelGrids {
  int n = 0;
  std::vector<int> ent, pair, pol;  // n*n row-major
  std::vector<uint8_t> mask;        // 1 where both tokens are content tokens
  int& at(std::vector<int>& g, int i, int j) { return g[size_t(i) * n + j]; }
  int ent_at(int i, int j) const { return ent[size_t(i) * n + j]; }
  int pair_at(int i, int j) const { return pair[size_t(i) * n + j]; }
  int pol_at(int i, int j) const { return pol[size_t(i) * n + j]; }
};

// Throws StructureError listing the first conflicting cell when two labels
// collide. Head/tail links of single-token pairs share a cell; the head link
// wins there and the decoder treats it as carrying both.
LabelGrids encode_grids(const TokenIndexMap& tim,
                        const std::vector<Quadruple>& quads);

struct DecodeReport {
  int orphan_spans = 0;   // entity spans that joined no quadruple
  int emitted = 0;
};

std::vector<Quadruple> decode_quadruples(const LabelGrids& g,
                                         DecodeReport* report = nullptr);

// ------------------------------------------------------------------ metrics --

struct PrF1 {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct Metrics {
  PrF1 micro;  // exact (t, a, o, s)
  PrF1 ident;  // exact (t, a, o)
  PrF1 pair_ta, pair_to, pair_ao;
  std::string to_text() const;   // flat key-value block
  std::string to_json() const;
};

struct DocQuads {
  std::string doc_id;
  std::vector<Quadruple> quads;
};

Metrics evaluate(const std::vector<DocQuads>& pred,
                 const std::vector<DocQuads>& gold);

// ------------------------------------------------------------------ scoring --

struct ScoringConfig {
  int dim = 0;        // width of both incoming streams
  int rotary_dim = 0; // d_r; d_r/2 per subspace, d_r/2 must be even
  double theta_mic = 10000.0;
  double theta_mac = 100.0;
  bool standard_rope = false;  // single-scale flat-position fallback
};

void register_task_head_params(ParamStore& ps, const ScoringConfig& cfg);

struct GridScoreInputs {
  Tensor h_final;          // [n, d] token stream
  Tensor h_utt_broadcast;  // [n, d] utterance stream per token
  std::vector<double> p_tok, p_utt;  // per token
  std::vector<double> flat_pos;      // 0..n-1, used by standard mode
  std::vector<uint8_t> same_thread;  // n*n row-major
};

struct GridLogits {
  std::vector<Tensor> ent, pair, pol;  // one [n, n] matrix per class
};

GridLogits score_grids(const GridScoreInputs& in, const ParamStore& ps,
                       const ScoringConfig& cfg);

struct GridWeights {
  std::vector<double> ent, pair, pol;  // one weight per class
};
GridWeights make_grid_weights(double main_w, double other_ent, double other_pair,
                              double other_pol);

Tensor weighted_ce_loss(const GridLogits& logits, const LabelGrids& gold,
                        const GridWeights& w);

// Cell-wise argmax of the class matrices into predicted label grids.
LabelGrids argmax_grids(const GridLogits& logits, const std::vector<uint8_t>& mask);

}  // namespace tcda
