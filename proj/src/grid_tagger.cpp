#include "tcda/grid_tagger.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tcda {

namespace {

const char* ent_name(int v) {
  switch (v) {
    case kEntTgt: return "TGT";
    case kEntAsp: return "ASP";
    case kEntOpi: return "OPI";
    default: return "other";
  }
}

void set_label(std::vector<int>& grid, int n, int i, int j, int v,
               const char* grid_name) {
  int& cell = grid[size_t(i) * n + j];
  if (cell == 0 || cell == v) {
    cell = v;
    return;
  }
  throw StructureError(std::string("annotation conflict at cell (") +
                       std::to_string(i) + "," + std::to_string(j) + ") of " +
                       grid_name + " grid: " + std::to_string(cell) + " vs " +
                       std::to_string(v));
}

}  // namespace

LabelGrids encode_grids(const TokenIndexMap& tim,
                        const std::vector<Quadruple>& quads) {
  LabelGrids g;
  g.n = tim.n_tokens();
  const int n = g.n;
  g.ent.assign(size_t(n) * n, 0);
  g.pair.assign(size_t(n) * n, 0);
  g.pol.assign(size_t(n) * n, 0);
  g.mask.assign(size_t(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g.mask[size_t(i) * n + j] =
          (!tim.tokens[size_t(i)].is_wrapper && !tim.tokens[size_t(j)].is_wrapper)
              ? 1
              : 0;

  auto check_span = [&](const Span& s, const char* role) {
    if (!s.valid() || s.end >= n)
      throw StructureError(std::string("bad ") + role + " span");
    if (tim.tokens[size_t(s.start)].is_wrapper || tim.tokens[size_t(s.end)].is_wrapper)
      throw StructureError(std::string(role) + " span touches a wrapper token");
    if (tim.tokens[size_t(s.start)].utterance_id !=
        tim.tokens[size_t(s.end)].utterance_id)
      throw StructureError(std::string(role) + " span crosses utterances");
  };

  auto link_pair = [&](const Span& x, const Span& y) {
    set_label(g.pair, n, x.start, y.start, kPairH2H, "pair");
    set_label(g.pair, n, y.start, x.start, kPairH2H, "pair");
    // Single-token pairs collapse head and tail onto one cell; the H2H mark
    // carries the link there and the decoder knows to accept it.
    if (x.start == x.end && y.start == y.end) return;
    set_label(g.pair, n, x.end, y.end, kPairT2T, "pair");
    set_label(g.pair, n, y.end, x.end, kPairT2T, "pair");
  };

  for (const auto& q : quads) {
    check_span(q.target, "target");
    check_span(q.aspect, "aspect");
    check_span(q.opinion, "opinion");
    set_label(g.ent, n, q.target.start, q.target.end, kEntTgt, "ent");
    set_label(g.ent, n, q.aspect.start, q.aspect.end, kEntAsp, "ent");
    set_label(g.ent, n, q.opinion.start, q.opinion.end, kEntOpi, "ent");
    link_pair(q.target, q.aspect);
    link_pair(q.target, q.opinion);
    link_pair(q.aspect, q.opinion);
    const int pol = q.sentiment == Sentiment::Pos   ? kPolPos
                    : q.sentiment == Sentiment::Neg ? kPolNeg
                                                    : kPolNeu;
    set_label(g.pol, n, q.target.start, q.opinion.start, pol, "pol");
  }
  return g;
}

// ------------------------------------------------------------------ decode --

namespace {

struct RoleSpan {
  Span span;
  int role;  // EntLabel
};

bool pair_linked(const LabelGrids& g, const Span& x, const Span& y) {
  if (g.pair_at(x.start, y.start) != kPairH2H) return false;
  if (x.start == x.end && y.start == y.end) return true;
  return g.pair_at(x.end, y.end) == kPairT2T;
}

}  // namespace

std::vector<Quadruple> decode_quadruples(const LabelGrids& g,
                                         DecodeReport* report) {
  std::vector<Span> targets, aspects, opinions;
  const int n = g.n;
  for (int s = 0; s < n; ++s)
    for (int e = s; e < n; ++e) {
      if (!g.mask[size_t(s) * n + e]) continue;
      switch (g.ent_at(s, e)) {
        case kEntTgt: targets.push_back({s, e}); break;
        case kEntAsp: aspects.push_back({s, e}); break;
        case kEntOpi: opinions.push_back({s, e}); break;
        default: break;
      }
    }

  std::vector<Quadruple> out;
  std::set<std::pair<int, int>> used;  // (start,end) of spans in some quadruple
  for (const auto& t : targets)
    for (const auto& a : aspects) {
      if (!pair_linked(g, t, a)) continue;
      for (const auto& o : opinions) {
        if (!pair_linked(g, t, o)) continue;
        Quadruple q;
        q.target = t;
        q.aspect = a;
        q.opinion = o;
        switch (g.pol_at(t.start, o.start)) {
          case kPolPos: q.sentiment = Sentiment::Pos; break;
          case kPolNeg: q.sentiment = Sentiment::Neg; break;
          default: q.sentiment = Sentiment::Neu; break;  // other defaults to NEU
        }
        out.push_back(q);
        used.insert({t.start, t.end});
        used.insert({a.start, a.end});
        used.insert({o.start, o.end});
      }
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());

  if (report) {
    report->emitted = int(out.size());
    int orphans = 0;
    for (const auto& list : {targets, aspects, opinions})
      for (const auto& s : list)
        if (!used.count({s.start, s.end})) ++orphans;
    report->orphan_spans = orphans;
  }
  return out;
}

// ----------------------------------------------------------------- metrics --

namespace {

PrF1 prf1(int tp, int pred_n, int gold_n) {
  PrF1 m;
  m.precision = pred_n > 0 ? double(tp) / pred_n : 0.0;
  m.recall = gold_n > 0 ? double(tp) / gold_n : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

using Triple = std::tuple<Span, Span, Span>;
using SpanPair = std::pair<Span, Span>;

}  // namespace

Metrics evaluate(const std::vector<DocQuads>& pred,
                 const std::vector<DocQuads>& gold) {
  // doc_id -> deduplicated sets
  auto index = [](const std::vector<DocQuads>& docs) {
    std::map<std::string, std::set<Quadruple>> m;
    for (const auto& d : docs)
      m[d.doc_id].insert(d.quads.begin(), d.quads.end());
    return m;
  };
  auto pm = index(pred);
  auto gm = index(gold);

  int quad_tp = 0, quad_p = 0, quad_g = 0;
  int id_tp = 0, id_p = 0, id_g = 0;
  int ta_tp = 0, ta_p = 0, ta_g = 0;
  int to_tp = 0, to_p = 0, to_g = 0;
  int ao_tp = 0, ao_p = 0, ao_g = 0;

  std::set<std::string> all_docs;
  for (const auto& [k, _] : pm) all_docs.insert(k);
  for (const auto& [k, _] : gm) all_docs.insert(k);

  for (const auto& doc : all_docs) {
    const auto& p = pm.count(doc) ? pm[doc] : std::set<Quadruple>{};
    const auto& g = gm.count(doc) ? gm[doc] : std::set<Quadruple>{};
    quad_p += int(p.size());
    quad_g += int(g.size());
    for (const auto& q : p)
      if (g.count(q)) ++quad_tp;

    auto triples = [](const std::set<Quadruple>& qs) {
      std::set<Triple> t;
      for (const auto& q : qs) t.insert({q.target, q.aspect, q.opinion});
      return t;
    };
    auto pt = triples(p), gt = triples(g);
    id_p += int(pt.size());
    id_g += int(gt.size());
    for (const auto& t : pt)
      if (gt.count(t)) ++id_tp;

    auto pairs = [](const std::set<Quadruple>& qs, int which) {
      std::set<SpanPair> out;
      for (const auto& q : qs) {
        if (which == 0) out.insert({q.target, q.aspect});
        if (which == 1) out.insert({q.target, q.opinion});
        if (which == 2) out.insert({q.aspect, q.opinion});
      }
      return out;
    };
    for (int which = 0; which < 3; ++which) {
      auto pp = pairs(p, which), gp = pairs(g, which);
      int tp = 0;
      for (const auto& x : pp)
        if (gp.count(x)) ++tp;
      if (which == 0) { ta_tp += tp; ta_p += int(pp.size()); ta_g += int(gp.size()); }
      if (which == 1) { to_tp += tp; to_p += int(pp.size()); to_g += int(gp.size()); }
      if (which == 2) { ao_tp += tp; ao_p += int(pp.size()); ao_g += int(gp.size()); }
    }
  }

  Metrics m;
  m.micro = prf1(quad_tp, quad_p, quad_g);
  m.ident = prf1(id_tp, id_p, id_g);
  m.pair_ta = prf1(ta_tp, ta_p, ta_g);
  m.pair_to = prf1(to_tp, to_p, to_g);
  m.pair_ao = prf1(ao_tp, ao_p, ao_g);
  return m;
}

std::string Metrics::to_text() const {
  std::ostringstream os;
  char buf[96];
  auto line = [&](const char* key, const PrF1& v) {
    std::snprintf(buf, sizeof(buf), "%s_precision = %.6f\n", key, v.precision);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%s_recall = %.6f\n", key, v.recall);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%s_f1 = %.6f\n", key, v.f1);
    os << buf;
  };
  line("micro", micro);
  line("ident", ident);
  line("pair_ta", pair_ta);
  line("pair_to", pair_to);
  line("pair_ao", pair_ao);
  return os.str();
}

std::string Metrics::to_json() const {
  nlohmann::json j;
  auto put = [&](const char* key, const PrF1& v) {
    j[key] = {{"precision", v.precision}, {"recall", v.recall}, {"f1", v.f1}};
  };
  put("micro", micro);
  put("ident", ident);
  put("pair_ta", pair_ta);
  put("pair_to", pair_to);
  put("pair_ao", pair_ao);
  return j.dump(2);
}

// ----------------------------------------------------------------- scoring --

namespace {

void validate_scoring(const ScoringConfig& cfg) {
  const int dr = cfg.rotary_dim > 0 ? cfg.rotary_dim : cfg.dim;
  if (dr % 2 != 0 || (dr / 2) % 2 != 0)
    throw ConfigError("rotary width must have even halves");
  if (!(cfg.theta_mic > cfg.theta_mac && cfg.theta_mac > 1.0))
    throw ConfigError("frequencies must satisfy theta_mic > theta_mac > 1");
}

int grid_classes(int g) { return g == 1 ? kPairClasses : kEntClasses; }
const char* grid_key(int g) { return g == 0 ? "ent" : g == 1 ? "pair" : "pol"; }

}  // namespace

void register_task_head_params(ParamStore& ps, const ScoringConfig& cfg) {
  validate_scoring(cfg);
  const int d = cfg.dim;
  const int dr = cfg.rotary_dim > 0 ? cfg.rotary_dim : cfg.dim;
  for (int g = 0; g < 3; ++g) {
    const std::string base = std::string("heads.") + grid_key(g);
    ps.create(base + ".space", {d, d}, Init::Xavier);
    for (int c = 0; c < grid_classes(g); ++c) {
      const std::string cb = base + ".c" + std::to_string(c);
      if (cfg.standard_rope) {
        ps.create(cb + ".std", {d, dr}, Init::Xavier);
      } else {
        ps.create(cb + ".mic", {d, dr / 2}, Init::Xavier);
        ps.create(cb + ".mac", {d, dr / 2}, Init::Xavier);
      }
    }
  }
}

GridLogits score_grids(const GridScoreInputs& in, const ParamStore& ps,
                       const ScoringConfig& cfg) {
  validate_scoring(cfg);
  const int n = in.h_final.rows();
  if (in.h_utt_broadcast.rows() != n)
    throw ShapeError("score_grids: stream row mismatch");
  if (int(in.p_tok.size()) != n || int(in.p_utt.size()) != n)
    throw ShapeError("score_grids: positions do not cover tokens");
  if (int(in.same_thread.size()) != n * n)
    throw ShapeError("score_grids: same-thread mask size mismatch");

  std::vector<double> neg_tok(in.p_tok), neg_utt(in.p_utt);
  for (auto& v : neg_tok) v = -v;
  for (auto& v : neg_utt) v = -v;

  GridLogits out;
  for (int g = 0; g < 3; ++g) {
    const std::string base = std::string("heads.") + grid_key(g);
    Tensor space = ps.get(base + ".space");
    Tensor z_tok = matmul(in.h_final, space);
    Tensor z_utt = matmul(in.h_utt_broadcast, space);
    std::vector<Tensor>& dst = g == 0 ? out.ent : g == 1 ? out.pair : out.pol;
    for (int c = 0; c < grid_classes(g); ++c) {
      const std::string cb = base + ".c" + std::to_string(c);
      if (cfg.standard_rope) {
        Tensor p = matmul(z_tok, ps.get(cb + ".std"));
        Tensor a = rotary(p, in.flat_pos, cfg.theta_mic);
        dst.push_back(matmul_nt(a, a));
      } else {
        Tensor pm = matmul(z_tok, ps.get(cb + ".mic"));
        Tensor pc = matmul(z_utt, ps.get(cb + ".mac"));
        Tensor am = rotary(pm, in.p_tok, cfg.theta_mic);
        Tensor am_neg = rotary(pm, neg_tok, cfg.theta_mic);
        Tensor ac = rotary(pc, in.p_utt, cfg.theta_mac);
        Tensor ac_neg = rotary(pc, neg_utt, cfg.theta_mac);
        Tensor s_same = add(matmul_nt(am, am), matmul_nt(ac, ac));
        Tensor s_div = add(matmul_nt(am, am_neg), matmul_nt(ac, ac_neg));
        dst.push_back(select_mask(in.same_thread, s_same, s_div));
      }
    }
  }
  return out;
}

GridWeights make_grid_weights(double main_w, double other_ent, double other_pair,
                              double other_pol) {
  GridWeights w;
  w.ent.assign(kEntClasses, main_w);
  w.ent[0] = other_ent;
  w.pair.assign(kPairClasses, main_w);
  w.pair[0] = other_pair;
  w.pol.assign(kPolClasses, main_w);
  w.pol[0] = other_pol;
  return w;
}

Tensor weighted_ce_loss(const GridLogits& logits, const LabelGrids& gold,
                        const GridWeights& w) {
  Tensor l_ent = grid_cross_entropy(logits.ent, gold.ent, gold.mask, w.ent);
  Tensor l_pair = grid_cross_entropy(logits.pair, gold.pair, gold.mask, w.pair);
  Tensor l_pol = grid_cross_entropy(logits.pol, gold.pol, gold.mask, w.pol);
  return add(add(l_ent, l_pair), l_pol);
}

LabelGrids argmax_grids(const GridLogits& logits, const std::vector<uint8_t>& mask) {
  LabelGrids g;
  g.n = logits.ent.empty() ? 0 : logits.ent[0].rows();
  const int n = g.n;
  g.mask = mask;
  auto fill = [n, &mask](const std::vector<Tensor>& mats, std::vector<int>& out) {
    out.assign(size_t(n) * n, 0);
    for (size_t cell = 0; cell < out.size(); ++cell) {
      if (!mask[cell]) continue;
      int best = 0;
      double best_v = mats[0].data()[cell];
      for (int c = 1; c < int(mats.size()); ++c)
        if (mats[size_t(c)].data()[cell] > best_v) {
          best_v = mats[size_t(c)].data()[cell];
          best = c;
        }
      out[cell] = best;
    }
  };
  fill(logits.ent, g.ent);
  fill(logits.pair, g.pair);
  fill(logits.pol, g.pol);
  return g;
}

}  // namespace tcda
