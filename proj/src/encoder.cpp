#include "tcda/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "tcda/dag_gnn.hpp"

namespace tcda {

Vocab::Vocab() {
  add("[UNK]");
  add("[CLS]");
}

int Vocab::add(const std::string& w) {
  auto it = index.find(w);
  if (it != index.end()) return it->second;
  const int id = int(words.size());
  words.push_back(w);
  index[w] = id;
  return id;
}

int Vocab::lookup(const std::string& w) const {
  auto it = index.find(w);
  return it == index.end() ? kUnk : it->second;
}

std::string Vocab::speaker_word(const std::string& speaker) {
  return "[SPK:" + speaker + "]";
}

std::string Vocab::serialize() const { return nlohmann::json(words).dump(); }

Vocab Vocab::deserialize(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  Vocab v;
  v.words.clear();
  v.index.clear();
  for (const auto& w : j) v.add(w.get<std::string>());
  if (v.size() < 2 || v.words[0] != "[UNK]" || v.words[1] != "[CLS]")
    throw ParseError("vocab: reserved entries missing");
  return v;
}

Vocab build_vocab(const std::vector<Dialogue>& dialogues) {
  Vocab v;
  for (const auto& d : dialogues)
    for (const auto& u : d.utterances) {
      v.add(Vocab::speaker_word(u.speaker));
      for (const auto& t : u.tokens) v.add(t);
    }
  return v;
}

std::vector<ThreadLayout> make_thread_layouts(const Dialogue& d,
                                              const ThreadDecomposition& td,
                                              const TokenIndexMap& tim,
                                              const Vocab& vocab) {
  std::vector<ThreadLayout> out;
  for (const auto& thread : td.threads) {
    ThreadLayout tl;
    for (int uid : thread) {
      const Utterance& u = d.utt(uid);
      tl.utterance_ids.push_back(uid);
      tl.block_offset.push_back(int(tl.token_ids.size()));
      tl.block_len.push_back(int(u.tokens.size()) + 2);
      const int gbase = tim.block_start[size_t(uid)];
      tl.token_ids.push_back(Vocab::kCls);
      tl.global_index.push_back(gbase);
      for (size_t k = 0; k < u.tokens.size(); ++k) {
        tl.token_ids.push_back(vocab.lookup(u.tokens[k]));
        tl.global_index.push_back(gbase + 1 + int(k));
      }
      tl.token_ids.push_back(vocab.lookup(Vocab::speaker_word(u.speaker)));
      tl.global_index.push_back(gbase + int(u.tokens.size()) + 1);
    }
    out.push_back(std::move(tl));
  }
  return out;
}

// ----------------------------------------------------------------- params --

void register_encoder_params(ParamStore& ps, const EncoderConfig& cfg,
                             int vocab_size) {
  if (cfg.dim % 2 != 0) throw ConfigError("embedding width must be even");
  ps.create("encoder.embed", {vocab_size, cfg.dim}, Init::Xavier);
  for (int l = 0; l < cfg.depth; ++l) {
    const std::string p = "encoder.l" + std::to_string(l);
    for (const char* w : {"wq", "wk", "wv", "wo"})
      ps.create(p + "." + w, {cfg.dim, cfg.dim}, Init::Xavier);
    ps.create(p + ".ln1.gain", {1, cfg.dim}, Init::Ones);
    ps.create(p + ".ln1.bias", {1, cfg.dim}, Init::Zeros);
    ps.create(p + ".ffn.w1", {cfg.dim, 2 * cfg.dim}, Init::Xavier);
    ps.create(p + ".ffn.b1", {1, 2 * cfg.dim}, Init::Zeros);
    ps.create(p + ".ffn.w2", {2 * cfg.dim, cfg.dim}, Init::Xavier);
    ps.create(p + ".ffn.b2", {1, cfg.dim}, Init::Zeros);
    ps.create(p + ".ln2.gain", {1, cfg.dim}, Init::Ones);
    ps.create(p + ".ln2.bias", {1, cfg.dim}, Init::Zeros);
  }
  for (int l = 0; l < cfg.gcn_layers; ++l) {
    ps.create("ck.syn.l" + std::to_string(l) + ".w", {cfg.dim, cfg.dim},
              Init::Xavier);
    ps.create("ck.sem.l" + std::to_string(l) + ".w", {cfg.dim, cfg.dim},
              Init::Xavier);
  }
  ps.create("ck.ln.gain", {1, cfg.dim}, Init::Ones);
  ps.create("ck.ln.bias", {1, cfg.dim}, Init::Zeros);
  ps.create("topk.gate.w", {cfg.dim, 1}, Init::Xavier);
  ps.create("topk.gate.b", {1, 1}, Init::Zeros);
  for (const char* w : {"wq", "wk", "wv"})
    ps.create(std::string("cross.") + w, {cfg.dim, cfg.dim}, Init::Xavier);
  ps.create("cross.ln.gain", {1, cfg.dim}, Init::Ones);
  ps.create("cross.ln.bias", {1, cfg.dim}, Init::Zeros);
}

namespace {

constexpr double kLnEps = 1e-5;

Tensor add_bias(const Tensor& x, const Tensor& b) {
  return add(x, gather_rows(b, std::vector<int>(size_t(x.rows()), 0)));
}

Tensor sinusoidal_positions(int len, int dim) {
  std::vector<double> v(size_t(len) * dim);
  for (int t = 0; t < len; ++t)
    for (int k = 0; k < dim / 2; ++k) {
      const double freq = std::pow(10000.0, -2.0 * k / dim);
      v[size_t(t) * dim + 2 * k] = std::sin(t * freq);
      v[size_t(t) * dim + 2 * k + 1] = std::cos(t * freq);
    }
  return Tensor::from_data({len, dim}, std::move(v));
}

}  // namespace

Tensor embed_encode(const ThreadLayout& thread, const ParamStore& ps,
                    const EncoderConfig& cfg) {
  Tensor x = gather_rows(ps.get("encoder.embed"), thread.token_ids);
  x = add(x, sinusoidal_positions(int(thread.token_ids.size()), cfg.dim));
  const double scale_f = 1.0 / std::sqrt(double(cfg.dim));
  for (int l = 0; l < cfg.depth; ++l) {
    const std::string p = "encoder.l" + std::to_string(l);
    Tensor q = matmul(x, ps.get(p + ".wq"));
    Tensor k = matmul(x, ps.get(p + ".wk"));
    Tensor v = matmul(x, ps.get(p + ".wv"));
    Tensor attn = softmax_last(scale(matmul_nt(q, k), scale_f));
    Tensor proj = matmul(matmul(attn, v), ps.get(p + ".wo"));
    x = layer_norm(add(x, proj), ps.get(p + ".ln1.gain"), ps.get(p + ".ln1.bias"),
                   kLnEps);
    Tensor h1 = tanh_t(add_bias(matmul(x, ps.get(p + ".ffn.w1")), ps.get(p + ".ffn.b1")));
    Tensor ffn = add_bias(matmul(h1, ps.get(p + ".ffn.w2")), ps.get(p + ".ffn.b2"));
    x = layer_norm(add(x, ffn), ps.get(p + ".ln2.gain"), ps.get(p + ".ln2.bias"),
                   kLnEps);
  }
  return x;
}

// -------------------------------------------------------------- adjacency --

ThreadAdjacency default_adjacency(const ThreadLayout& thread,
                                  const TokenIndexMap& tim,
                                  const Tensor& features, int k) {
  const int L = int(thread.token_ids.size());
  ThreadAdjacency adj;
  adj.syn.assign(size_t(L) * L, 0.0);
  adj.sem.assign(size_t(L) * L, 0.0);
  auto link = [L](std::vector<double>& a, int i, int j) {
    a[size_t(i) * L + j] = 1.0;
    a[size_t(j) * L + i] = 1.0;
  };

  for (size_t b = 0; b < thread.utterance_ids.size(); ++b) {
    const int off = thread.block_offset[b];
    const int len = thread.block_len[b];
    // chain over content tokens
    for (int c = off + 1; c + 1 <= off + len - 2; ++c) link(adj.syn, c, c + 1);
    // wrappers attach to every content token of their utterance
    for (int c = off + 1; c <= off + len - 2; ++c) {
      link(adj.syn, off, c);
      link(adj.syn, off + len - 1, c);
    }
  }

  const auto& f = features.data();
  const int d = features.cols();
  std::vector<double> norms(static_cast<size_t>(L));
  for (int i = 0; i < L; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += f[size_t(i) * d + j] * f[size_t(i) * d + j];
    norms[size_t(i)] = std::sqrt(s);
  }
  for (int i = 0; i < L; ++i) {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(size_t(L) - 1);
    for (int j = 0; j < L; ++j) {
      if (j == i) continue;
      double sim = 0.0;
      if (norms[size_t(i)] > 1e-12 && norms[size_t(j)] > 1e-12) {
        for (int c = 0; c < d; ++c)
          sim += f[size_t(i) * d + c] * f[size_t(j) * d + c];
        sim /= norms[size_t(i)] * norms[size_t(j)];
      }
      cand.emplace_back(sim, j);
    }
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (int t = 0; t < std::min<int>(k, int(cand.size())); ++t)
      link(adj.sem, i, cand[size_t(t)].second);
  }
  return adj;
}

ThreadAdjacency restrict_override(const AdjacencyOverride& ov,
                                  const ThreadLayout& thread) {
  const int L = int(thread.token_ids.size());
  std::unordered_map<int, int> local;
  for (int i = 0; i < L; ++i) local[thread.global_index[size_t(i)]] = i;
  ThreadAdjacency adj;
  adj.syn.assign(size_t(L) * L, 0.0);
  adj.sem.assign(size_t(L) * L, 0.0);
  auto apply = [&](const std::vector<std::pair<int, int>>& pairs,
                   std::vector<double>& a) {
    for (const auto& [gi, gj] : pairs) {
      auto it = local.find(gi), jt = local.find(gj);
      if (it == local.end() || jt == local.end()) continue;
      a[size_t(it->second) * L + jt->second] = 1.0;
      a[size_t(jt->second) * L + it->second] = 1.0;
    }
  };
  apply(ov.syn, adj.syn);
  apply(ov.sem, adj.sem);
  return adj;
}

Tensor ck_thread_gcn(const Tensor& h_thread, const ThreadAdjacency& adj,
                     const ParamStore& ps, const EncoderConfig& cfg) {
  const int L = h_thread.rows();
  if (int(adj.syn.size()) != L * L || int(adj.sem.size()) != L * L)
    throw ShapeError("ck_thread_gcn: adjacency size mismatch");
  Tensor out;
  for (const char* branch : {"syn", "sem"}) {
    const auto& raw = branch == std::string("syn") ? adj.syn : adj.sem;
    Tensor a_hat = Tensor::from_data({L, L}, normalize_adjacency(raw, L));
    Tensor h = h_thread;
    for (int l = 0; l < cfg.gcn_layers; ++l)
      h = tanh_t(matmul(matmul(a_hat, h),
                      ps.get(std::string("ck.") + branch + ".l" +
                             std::to_string(l) + ".w")));
    out = out.defined() ? add(out, h) : h;
  }
  return out;
}

CkOutputs ck_encode(const Dialogue& d, const TokenIndexMap& tim,
                    const std::vector<ThreadLayout>& layouts,
                    const std::vector<Tensor>& thread_feats,
                    const ParamStore& ps, const EncoderConfig& cfg,
                    const std::optional<AdjacencyOverride>& override_adj) {
  const int n_threads = int(layouts.size());
  std::vector<Tensor> knowledge(static_cast<size_t>(n_threads));
  for (int k = 0; k < n_threads; ++k) {
    ThreadAdjacency adj = override_adj
                              ? restrict_override(*override_adj, layouts[size_t(k)])
                              : default_adjacency(layouts[size_t(k)], tim,
                                                  thread_feats[size_t(k)]);
    knowledge[size_t(k)] = ck_thread_gcn(thread_feats[size_t(k)], adj, ps, cfg);
  }

  // utterance id -> (thread, local offset, len); the root lives in them all
  struct Loc {
    int thread, offset, len;
  };
  std::vector<Loc> loc(size_t(d.size()) + 1, {-1, 0, 0});
  int root_len = int(d.utt(1).tokens.size()) + 2;
  for (int k = 0; k < n_threads; ++k) {
    const auto& tl = layouts[size_t(k)];
    for (size_t b = 0; b < tl.utterance_ids.size(); ++b)
      if (tl.utterance_ids[b] != 1)
        loc[size_t(tl.utterance_ids[b])] = {k, tl.block_offset[b], tl.block_len[b]};
  }

  auto reassemble = [&](const std::vector<Tensor>& feats) {
    std::vector<Tensor> blocks;
    Tensor root = slice_rows(feats[0], 0, root_len);
    for (int k = 1; k < n_threads; ++k)
      root = add(root, slice_rows(feats[size_t(k)], 0, root_len));
    if (n_threads > 1) root = scale(root, 1.0 / n_threads);
    blocks.push_back(root);
    for (int u = 2; u <= d.size(); ++u) {
      const Loc& l = loc[size_t(u)];
      if (l.thread < 0) throw StructureError("ck_encode: utterance missing from threads");
      blocks.push_back(slice_rows(feats[size_t(l.thread)], l.offset, l.len));
    }
    return concat_rows(blocks);
  };

  CkOutputs out;
  out.h_tok = reassemble(thread_feats);
  Tensor know_glob = reassemble(knowledge);
  out.h_tok_fused = layer_norm(add(out.h_tok, know_glob), ps.get("ck.ln.gain"),
                               ps.get("ck.ln.bias"), kLnEps);
  if (out.h_tok.rows() != tim.n_tokens())
    throw StructureError("ck_encode: reassembled rows do not match token map");
  return out;
}

// ------------------------------------------------------------------- top-k --

Tensor topk_aggregate(const Tensor& h_tok, const Dialogue& d,
                      const TokenIndexMap& tim, double ratio,
                      const ParamStore& ps) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw ConfigError("top-k ratio must be in (0, 1]");
  Tensor gate = add_bias(matmul(h_tok, ps.get("topk.gate.w")),
                         ps.get("topk.gate.b"));
  std::vector<Tensor> rows;
  rows.reserve(size_t(d.size()));
  for (const auto& u : d.utterances) {
    const int base = tim.block_start[size_t(u.id)];
    const int m = int(u.tokens.size());
    std::vector<int> content(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) content[size_t(k)] = base + 1 + k;
    const int keep = int(std::ceil(ratio * m));
    std::vector<int> order(content);
    std::stable_sort(order.begin(), order.end(), [&gate](int a, int b) {
      const double ga = gate.data()[size_t(a)];
      const double gb = gate.data()[size_t(b)];
      return ga != gb ? ga > gb : a < b;
    });
    order.resize(size_t(keep));
    std::sort(order.begin(), order.end());
    rows.push_back(mean_rows(h_tok, order));
  }
  return concat_rows(rows);
}

Tensor global_local_interact(const Tensor& h_tok, const Tensor& h_utt,
                             const ParamStore& ps) {
  if (h_tok.cols() != h_utt.cols())
    throw ShapeError("global_local_interact: width mismatch");
  const double scale_f = 1.0 / std::sqrt(double(h_tok.cols()));
  Tensor q = matmul(h_tok, ps.get("cross.wq"));
  Tensor k = matmul(h_utt, ps.get("cross.wk"));
  Tensor v = matmul(h_utt, ps.get("cross.wv"));
  Tensor attn = softmax_last(scale(matmul_nt(q, k), scale_f));
  Tensor ctx = matmul(attn, v);
  return layer_norm(add(h_tok, ctx), ps.get("cross.ln.gain"),
                    ps.get("cross.ln.bias"), kLnEps);
}

}  // namespace tcda
