// Structure-aware relational encoding over the utterance DAG: per-layer
// sequential node updates with relation-aware attention and a dual gated
// update, plus the undirected reply-graph GCN used by the ablation.
#pragma once

#include "tcda/param_store.hpp"
#include "tcda/tc_dag.hpp"
#include "tcda/tensor.hpp"

namespace tcda {

struct GruParams {
  Tensor wz, uz, bz;  // update gate
  Tensor wr, ur, br;  // reset gate
  Tensor wh, uh, bh;  // candidate
};

// h_prev and x are [1,d]. Gate convention: h' = (1-z) .* h_prev + z .* cand.
Tensor gru_cell(const Tensor& h_prev, const Tensor& x, const GruParams& p);

void register_gru_params(ParamStore& ps, const std::string& prefix, int dim);
GruParams get_gru_params(const ParamStore& ps, const std::string& prefix);

// Attention over predecessors: weights [1,m] from w_alpha . [h_j || h_i].
// neighbors carry (already-updated state, relation).
Tensor relational_attention(const Tensor& h_i_prev,
                            const std::vector<std::pair<Tensor, int>>& neighbors,
                            const Tensor& w_alpha);

// m_i = sum_j alpha_j * W_{r_j} h_j
Tensor aggregate_context(const Tensor& alphas,
                         const std::vector<std::pair<Tensor, int>>& neighbors,
                         const Tensor& rel0, const Tensor& rel1);

Tensor dual_gru_update(const Tensor& h_prev, const Tensor& m,
                       const GruParams& gru_h, const GruParams& gru_c);

void register_dag_gnn_params(ParamStore& ps, int dim, int layers);

struct DagForwardOpts {
  double dropout = 0.0;
  Rng* rng = nullptr;
  bool train = false;
};

// Nodes are processed in ascending id per layer; predecessors contribute
// their current-layer states. Output is LN(H_in + H_L).
Tensor dag_forward(const TcDag& g, const Tensor& h_utt, const ParamStore& ps,
                   int layers, const DagForwardOpts& opts = {});

// Reply-GCN stand-in used by the "w/o TC-DAG" ablation: symmetric normalized
// adjacency over undirected reply edges, relu(A_hat H W) per layer, same
// residual + layer norm head.
void register_reply_gcn_params(ParamStore& ps, int dim, int layers);
Tensor reply_gcn_forward(const Dialogue& d, const Tensor& h_utt,
                         const ParamStore& ps, int layers);

// D^{-1/2} (A + I) D^{-1/2} for a dense binary adjacency, row-major n x n.
std::vector<double> normalize_adjacency(const std::vector<double>& a, int n);

}  // namespace tcda
