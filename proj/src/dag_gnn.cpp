#include "tcda/dag_gnn.hpp"

#include <cmath>

namespace tcda {

Tensor gru_cell(const Tensor& h_prev, const Tensor& x, const GruParams& p) {
  if (h_prev.shape() != x.shape())
    throw ShapeError("gru_cell: state/input shape mismatch");
  Tensor z = sigmoid(add(add(matmul(x, p.wz), matmul(h_prev, p.uz)), p.bz));
  Tensor r = sigmoid(add(add(matmul(x, p.wr), matmul(h_prev, p.ur)), p.br));
  Tensor cand =
      tanh_t(add(add(matmul(x, p.wh), matmul(mul(r, h_prev), p.uh)), p.bh));
  Tensor one_minus_z = add_scalar(scale(z, -1.0), 1.0);
  return add(mul(one_minus_z, h_prev), mul(z, cand));
}

void register_gru_params(ParamStore& ps, const std::string& prefix, int dim) {
  for (const char* gate : {"z", "r", "h"}) {
    ps.create(prefix + ".w" + gate, {dim, dim}, Init::Xavier);
    ps.create(prefix + ".u" + gate, {dim, dim}, Init::Xavier);
    ps.create(prefix + ".b" + gate, {1, dim}, Init::Zeros);
  }
}

GruParams get_gru_params(const ParamStore& ps, const std::string& prefix) {
  GruParams p;
  p.wz = ps.get(prefix + ".wz");
  p.uz = ps.get(prefix + ".uz");
  p.bz = ps.get(prefix + ".bz");
  p.wr = ps.get(prefix + ".wr");
  p.ur = ps.get(prefix + ".ur");
  p.br = ps.get(prefix + ".br");
  p.wh = ps.get(prefix + ".wh");
  p.uh = ps.get(prefix + ".uh");
  p.bh = ps.get(prefix + ".bh");
  return p;
}

Tensor relational_attention(const Tensor& h_i_prev,
                            const std::vector<std::pair<Tensor, int>>& neighbors,
                            const Tensor& w_alpha) {
  if (neighbors.empty())
    throw ShapeError("relational_attention: empty neighbor list");
  std::vector<Tensor> scores;
  scores.reserve(neighbors.size());
  for (const auto& [h_j, rel] : neighbors) {
    (void)rel;
    scores.push_back(matmul(concat_cols(h_j, h_i_prev), w_alpha));
  }
  return softmax_last(concat_scalars(scores));
}

Tensor aggregate_context(const Tensor& alphas,
                         const std::vector<std::pair<Tensor, int>>& neighbors,
                         const Tensor& rel0, const Tensor& rel1) {
  if (size_t(alphas.cols()) != neighbors.size())
    throw ShapeError("aggregate_context: weights do not align with neighbors");
  std::vector<Tensor> projected;
  projected.reserve(neighbors.size());
  for (const auto& [h_j, rel] : neighbors) {
    if (rel != 0 && rel != 1)
      throw ShapeError("aggregate_context: unknown relation value");
    projected.push_back(matmul(h_j, rel == 1 ? rel1 : rel0));
  }
  return matmul(alphas, concat_rows(projected));
}

Tensor dual_gru_update(const Tensor& h_prev, const Tensor& m,
                       const GruParams& gru_h, const GruParams& gru_c) {
  Tensor node_update = gru_cell(h_prev, m, gru_h);   // state = h_prev, input = m
  Tensor ctx_update = gru_cell(m, h_prev, gru_c);    // state = m, input = h_prev
  return add(node_update, ctx_update);
}

void register_dag_gnn_params(ParamStore& ps, int dim, int layers) {
  if (layers < 1) throw ConfigError("dag layers must be >= 1");
  for (int l = 0; l < layers; ++l) {
    const std::string p = "dag.l" + std::to_string(l);
    ps.create(p + ".w_alpha", {2 * dim, 1}, Init::Xavier);
    ps.create(p + ".rel0", {dim, dim}, Init::Xavier);
    ps.create(p + ".rel1", {dim, dim}, Init::Xavier);
    register_gru_params(ps, p + ".gruH", dim);
    register_gru_params(ps, p + ".gruC", dim);
  }
  ps.create("dag.ln.gain", {1, dim}, Init::Ones);
  ps.create("dag.ln.bias", {1, dim}, Init::Zeros);
}

Tensor dag_forward(const TcDag& g, const Tensor& h_utt, const ParamStore& ps,
                   int layers, const DagForwardOpts& opts) {
  if (layers < 1) throw ConfigError("dag_forward: layers must be >= 1");
  const int n = g.node_count;
  if (h_utt.rows() != n)
    throw ShapeError("dag_forward: feature rows do not match node count");

  std::vector<Tensor> prev(size_t(n) + 1);
  for (int i = 1; i <= n; ++i) prev[size_t(i)] = slice_rows(h_utt, i - 1, 1);

  for (int l = 0; l < layers; ++l) {
    const std::string pfx = "dag.l" + std::to_string(l);
    Tensor w_alpha = ps.get(pfx + ".w_alpha");
    Tensor rel0 = ps.get(pfx + ".rel0");
    Tensor rel1 = ps.get(pfx + ".rel1");
    GruParams gru_h = get_gru_params(ps, pfx + ".gruH");
    GruParams gru_c = get_gru_params(ps, pfx + ".gruC");

    std::vector<Tensor> cur(size_t(n) + 1);
    for (int i = 1; i <= n; ++i) {
      const auto& pred = g.preds[size_t(i)];
      if (pred.empty()) {  // the root passes through
        cur[size_t(i)] = prev[size_t(i)];
        continue;
      }
      std::vector<std::pair<Tensor, int>> neighbors;
      neighbors.reserve(pred.size());
      for (const auto& [src, rel] : pred)
        neighbors.emplace_back(cur[size_t(src)], rel);

      Tensor alphas = relational_attention(prev[size_t(i)], neighbors, w_alpha);
      if (opts.train && opts.dropout > 0.0)
        alphas = dropout(alphas, opts.dropout, *opts.rng, true);
      Tensor m = aggregate_context(alphas, neighbors, rel0, rel1);

      Tensor m_in = m, h_in = prev[size_t(i)];
      if (opts.train && opts.dropout > 0.0) {
        m_in = dropout(m, opts.dropout, *opts.rng, true);
        h_in = dropout(prev[size_t(i)], opts.dropout, *opts.rng, true);
      }
      // GRU_H consumes the dropped context as input; GRU_C consumes the
      // dropped node state as input while keeping the raw context as state.
      Tensor node_update = gru_cell(prev[size_t(i)], m_in, gru_h);
      Tensor ctx_update = gru_cell(m, h_in, gru_c);
      cur[size_t(i)] = add(node_update, ctx_update);
    }
    prev = std::move(cur);
  }

  std::vector<Tensor> rows(prev.begin() + 1, prev.end());
  Tensor h_last = concat_rows(rows);
  return layer_norm(add(h_utt, h_last), ps.get("dag.ln.gain"),
                    ps.get("dag.ln.bias"), 1e-5);
}

// ------------------------------------------------------------- reply GCN --

std::vector<double> normalize_adjacency(const std::vector<double>& a, int n) {
  std::vector<double> with_loops(a);
  for (int i = 0; i < n; ++i) with_loops[size_t(i) * n + i] += 1.0;
  std::vector<double> deg(size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[size_t(i)] += with_loops[size_t(i) * n + j];
  std::vector<double> out(size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = with_loops[size_t(i) * n + j];
      if (v != 0.0)
        out[size_t(i) * n + j] =
            v / (std::sqrt(deg[size_t(i)]) * std::sqrt(deg[size_t(j)]));
    }
  return out;
}

void register_reply_gcn_params(ParamStore& ps, int dim, int layers) {
  for (int l = 0; l < layers; ++l)
    ps.create("dag.gcn.l" + std::to_string(l) + ".w", {dim, dim}, Init::Xavier);
  ps.create("dag.ln.gain", {1, dim}, Init::Ones);
  ps.create("dag.ln.bias", {1, dim}, Init::Zeros);
}

Tensor reply_gcn_forward(const Dialogue& d, const Tensor& h_utt,
                         const ParamStore& ps, int layers) {
  const int n = d.size();
  std::vector<double> adj(size_t(n) * n, 0.0);
  for (const auto& u : d.utterances)
    if (u.reply_to > 0) {
      adj[size_t(u.reply_to - 1) * n + (u.id - 1)] = 1.0;
      adj[size_t(u.id - 1) * n + (u.reply_to - 1)] = 1.0;
    }
  Tensor a_hat = Tensor::from_data({n, n}, normalize_adjacency(adj, n));

  Tensor h = h_utt;
  for (int l = 0; l < layers; ++l)
    h = tanh_t(matmul(matmul(a_hat, h),
                    ps.get("dag.gcn.l" + std::to_string(l) + ".w")));
  return layer_norm(add(h_utt, h), ps.get("dag.ln.gain"), ps.get("dag.ln.bias"),
                    1e-5);
}

}  // namespace tcda
