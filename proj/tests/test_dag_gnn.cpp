#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "tcda/dag_gnn.hpp"
#include "tcda/grad_check.hpp"

using namespace tcda;

namespace {

Tensor rand_t(const Shape& s, uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(static_cast<size_t>(shape_size(s)));
  for (auto& x : v) x = g(rng);
  return Tensor::from_data(s, std::move(v));
}

GruParams zero_gru(int d) {
  GruParams p;
  p.wz = Tensor::zeros({d, d});
  p.uz = Tensor::zeros({d, d});
  p.bz = Tensor::zeros({1, d});
  p.wr = Tensor::zeros({d, d});
  p.ur = Tensor::zeros({d, d});
  p.br = Tensor::zeros({1, d});
  p.wh = Tensor::zeros({d, d});
  p.uh = Tensor::zeros({d, d});
  p.bh = Tensor::zeros({1, d});
  return p;
}

}  // namespace

TEST_CASE("gru cell with zero parameters halves the state") {
  const int d = 5;
  Tensor h = rand_t({1, d}, 1);
  Tensor x = rand_t({1, d}, 2);
  Tensor out = gru_cell(h, x, zero_gru(d));
  for (int j = 0; j < d; ++j)
    CHECK(out.at(0, j) == doctest::Approx(0.5 * h.at(0, j)).epsilon(1e-12));
}

TEST_CASE("scalar gru matches a closed-form hand computation") {
  // d = 1 with hand-set scalars
  GruParams p;
  const double wz = 0.3, uz = -0.2, bz = 0.1;
  const double wr = 0.5, ur = 0.4, br = -0.3;
  const double wh = -0.7, uh = 0.6, bh = 0.2;
  p.wz = Tensor::scalar(wz);
  p.uz = Tensor::scalar(uz);
  p.bz = Tensor::scalar(bz);
  p.wr = Tensor::scalar(wr);
  p.ur = Tensor::scalar(ur);
  p.br = Tensor::scalar(br);
  p.wh = Tensor::scalar(wh);
  p.uh = Tensor::scalar(uh);
  p.bh = Tensor::scalar(bh);
  const double hv = 0.8, xv = -0.4;
  Tensor out = gru_cell(Tensor::scalar(hv), Tensor::scalar(xv), p);

  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double z = sig(xv * wz + hv * uz + bz);
  const double r = sig(xv * wr + hv * ur + br);
  const double cand = std::tanh(xv * wh + r * hv * uh + bh);
  const double expect = (1.0 - z) * hv + z * cand;
  CHECK(out.item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("gru gradients agree with central differences") {
  ParamStore ps(11);
  register_gru_params(ps, "g", 3);
  Tensor h = rand_t({1, 3}, 5);
  Tensor x = rand_t({1, 3}, 6);
  auto r = grad_check(ps, [&]() {
    Tensor out = gru_cell(h, x, get_gru_params(ps, "g"));
    return sum_all(mul(out, out));
  });
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("relational attention weights") {
  const int d = 4;
  Tensor w_alpha = rand_t({2 * d, 1}, 3);
  Tensor h_i = rand_t({1, d}, 4);

  SUBCASE("single neighbor gets weight one") {
    auto a = relational_attention(h_i, {{rand_t({1, d}, 5), 0}}, w_alpha);
    CHECK(a.item() == doctest::Approx(1.0));
  }
  SUBCASE("identical neighbors split evenly") {
    Tensor n = rand_t({1, d}, 6);
    auto a = relational_attention(h_i, {{n, 0}, {n, 1}}, w_alpha);
    CHECK(a.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("three neighbors match a direct transcription") {
    std::vector<std::pair<Tensor, int>> nb{
        {rand_t({1, d}, 7), 0}, {rand_t({1, d}, 8), 1}, {rand_t({1, d}, 9), 0}};
    auto a = relational_attention(h_i, nb, w_alpha);
    // direct: softmax over w_alpha . [h_j || h_i]
    std::vector<double> e(3);
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += nb[size_t(j)].first.at(0, c) * w_alpha.at(c, 0);
      for (int c = 0; c < d; ++c) s += h_i.at(0, c) * w_alpha.at(d + c, 0);
      e[size_t(j)] = s;
    }
    const double mx = *std::max_element(e.begin(), e.end());
    double sum = 0.0;
    for (double& v : e) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (int j = 0; j < 3; ++j)
      CHECK(a.at(0, j) == doctest::Approx(e[size_t(j)] / sum).epsilon(1e-9));
    double total = 0.0;
    for (int j = 0; j < 3; ++j) total += a.at(0, j);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("empty neighbor list is an error") {
    CHECK_THROWS_AS(relational_attention(h_i, {}, w_alpha), ShapeError);
  }
}

TEST_CASE("context aggregation selects relation projections") {
  const int d = 3;
  Tensor eye = Tensor::zeros({d, d});
  for (int i = 0; i < d; ++i) eye.mutable_data()[size_t(i) * d + i] = 1.0;

  SUBCASE("identity projections with a single neighbor pass it through") {
    Tensor h = rand_t({1, d}, 10);
    Tensor m = aggregate_context(Tensor::from_data({1, 1}, {1.0}), {{h, 1}}, eye, eye);
    for (int j = 0; j < d; ++j) CHECK(m.at(0, j) == doctest::Approx(h.at(0, j)));
  }
  SUBCASE("zero-weight neighbors contribute nothing") {
    Tensor h1 = rand_t({1, d}, 11), h2 = rand_t({1, d}, 12);
    Tensor w0 = rand_t({d, d}, 13), w1 = rand_t({d, d}, 14);
    Tensor m = aggregate_context(Tensor::from_data({1, 2}, {1.0, 0.0}),
                                 {{h1, 0}, {h2, 1}}, w0, w1);
    Tensor direct = matmul(h1, w0);
    for (int j = 0; j < d; ++j)
      CHECK(m.at(0, j) == doctest::Approx(direct.at(0, j)).epsilon(1e-12));
  }
  SUBCASE("flipping relations changes the context when projections differ") {
    Tensor h1 = rand_t({1, d}, 15), h2 = rand_t({1, d}, 16);
    Tensor w0 = rand_t({d, d}, 17), w1 = rand_t({d, d}, 18);
    Tensor alphas = Tensor::from_data({1, 2}, {0.6, 0.4});
    Tensor m1 = aggregate_context(alphas, {{h1, 0}, {h2, 1}}, w0, w1);
    Tensor m2 = aggregate_context(alphas, {{h1, 1}, {h2, 0}}, w0, w1);
    double diff = 0.0;
    for (int j = 0; j < d; ++j) diff += std::fabs(m1.at(0, j) - m2.at(0, j));
    CHECK(diff > 1e-6);
  }
}

TEST_CASE("dual gated update") {
  const int d = 4;
  SUBCASE("zero weights blend state and context evenly") {
    Tensor h = rand_t({1, d}, 20), m = rand_t({1, d}, 21);
    Tensor out = dual_gru_update(h, m, zero_gru(d), zero_gru(d));
    for (int j = 0; j < d; ++j)
      CHECK(out.at(0, j) ==
            doctest::Approx(0.5 * h.at(0, j) + 0.5 * m.at(0, j)).epsilon(1e-12));
  }
  SUBCASE("equal state and input with shared parameters doubles one unit") {
    ParamStore ps(22);
    register_gru_params(ps, "g", d);
    GruParams p = get_gru_params(ps, "g");
    Tensor h = rand_t({1, d}, 23);
    Tensor out = dual_gru_update(h, h, p, p);
    Tensor one = gru_cell(h, h, p);
    for (int j = 0; j < d; ++j)
      CHECK(out.at(0, j) == doctest::Approx(2.0 * one.at(0, j)).epsilon(1e-12));
  }
}

namespace {

Dialogue chain3() {
  return parse_dialogue(R"({"doc_id":"c3","sentences":[
    {"speaker":"a","tokens":["w"],"reply":-1},
    {"speaker":"b","tokens":["w"],"reply":0},
    {"speaker":"a","tokens":["w"],"reply":1}]})");
}

// plain-vector transcription of the layer equations, reading the same params
std::vector<std::vector<double>> unroll_reference(const TcDag& g,
                                                  const Tensor& h_in,
                                                  const ParamStore& ps,
                                                  int layers) {
  const int n = g.node_count, d = h_in.cols();
  auto vec_of = [&](const Tensor& t, int row) {
    std::vector<double> v(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) v[size_t(j)] = t.at(row, j);
    return v;
  };
  auto matvec = [&](const Tensor& w, const std::vector<double>& x) {
    std::vector<double> out(static_cast<size_t>(w.cols()), 0.0);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) out[size_t(j)] += x[size_t(i)] * w.at(i, j);
    return out;
  };
  auto gru_ref = [&](const std::vector<double>& h, const std::vector<double>& x,
                     const std::string& pfx) {
    auto wz = matvec(ps.get(pfx + ".wz"), x), uz = matvec(ps.get(pfx + ".uz"), h);
    auto wr = matvec(ps.get(pfx + ".wr"), x), ur = matvec(ps.get(pfx + ".ur"), h);
    std::vector<double> z(static_cast<size_t>(d)), r(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) {
      z[size_t(j)] = 1.0 / (1.0 + std::exp(-(wz[size_t(j)] + uz[size_t(j)] +
                                             ps.get(pfx + ".bz").at(0, j))));
      r[size_t(j)] = 1.0 / (1.0 + std::exp(-(wr[size_t(j)] + ur[size_t(j)] +
                                             ps.get(pfx + ".br").at(0, j))));
    }
    std::vector<double> rh(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) rh[size_t(j)] = r[size_t(j)] * h[size_t(j)];
    auto wh = matvec(ps.get(pfx + ".wh"), x), uh = matvec(ps.get(pfx + ".uh"), rh);
    std::vector<double> out(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) {
      const double cand =
          std::tanh(wh[size_t(j)] + uh[size_t(j)] + ps.get(pfx + ".bh").at(0, j));
      out[size_t(j)] = (1.0 - z[size_t(j)]) * h[size_t(j)] + z[size_t(j)] * cand;
    }
    return out;
  };

  std::vector<std::vector<double>> prev(static_cast<size_t>(n + 1));
  for (int i = 1; i <= n; ++i) prev[size_t(i)] = vec_of(h_in, i - 1);
  for (int l = 0; l < layers; ++l) {
    const std::string pfx = "dag.l" + std::to_string(l);
    std::vector<std::vector<double>> cur(static_cast<size_t>(n + 1));
    for (int i = 1; i <= n; ++i) {
      const auto& preds = g.preds[size_t(i)];
      if (preds.empty()) {
        cur[size_t(i)] = prev[size_t(i)];
        continue;
      }
      std::vector<double> scores;
      for (const auto& [src, rel] : preds) {
        (void)rel;
        double s = 0.0;
        for (int c = 0; c < d; ++c)
          s += cur[size_t(src)][size_t(c)] * ps.get(pfx + ".w_alpha").at(c, 0);
        for (int c = 0; c < d; ++c)
          s += prev[size_t(i)][size_t(c)] * ps.get(pfx + ".w_alpha").at(d + c, 0);
        scores.push_back(s);
      }
      const double mx = *std::max_element(scores.begin(), scores.end());
      double sum = 0.0;
      for (double& s : scores) {
        s = std::exp(s - mx);
        sum += s;
      }
      std::vector<double> m(static_cast<size_t>(d), 0.0);
      for (size_t k = 0; k < preds.size(); ++k) {
        const auto& [src, rel] = preds[k];
        auto proj = matvec(ps.get(pfx + (rel == 1 ? ".rel1" : ".rel0")),
                           cur[size_t(src)]);
        for (int j = 0; j < d; ++j) m[size_t(j)] += scores[k] / sum * proj[size_t(j)];
      }
      auto hH = gru_ref(prev[size_t(i)], m, pfx + ".gruH");
      auto hC = gru_ref(m, prev[size_t(i)], pfx + ".gruC");
      std::vector<double> out(static_cast<size_t>(d));
      for (int j = 0; j < d; ++j) out[size_t(j)] = hH[size_t(j)] + hC[size_t(j)];
      cur[size_t(i)] = out;
    }
    prev = std::move(cur);
  }
  // residual + layer norm
  std::vector<std::vector<double>> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) row[size_t(j)] = h_in.at(i, j) + prev[size_t(i + 1)][size_t(j)];
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (int j = 0; j < d; ++j)
      row[size_t(j)] = ps.get("dag.ln.gain").at(0, j) * (row[size_t(j)] - mean) * inv +
                       ps.get("dag.ln.bias").at(0, j);
    out[size_t(i)] = row;
  }
  return out;
}

}  // namespace

TEST_CASE("dag forward equals a hand-unrolled transcription on a chain") {
  Dialogue d = chain3();
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 1);
  const int dim = 2;
  ParamStore ps(31);
  register_dag_gnn_params(ps, dim, 2);
  Tensor h = rand_t({3, dim}, 32);

  Tensor out = dag_forward(g, h, ps, 2);
  auto ref = unroll_reference(g, h, ps, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < dim; ++j)
      CHECK(out.at(i, j) == doctest::Approx(ref[size_t(i)][size_t(j)]).epsilon(1e-9));
}

TEST_CASE("edgeless graph passes through to the residual norm") {
  Dialogue solo = parse_dialogue(
      R"({"doc_id":"solo","sentences":[{"speaker":"a","tokens":["w"],"reply":-1}]})");
  auto td = decompose_threads(solo);
  TcDag g = build_tc_dag(solo, td, 1);
  const int dim = 4;
  ParamStore ps(33);
  register_dag_gnn_params(ps, dim, 1);
  Tensor h = rand_t({1, dim}, 34);
  Tensor out = dag_forward(g, h, ps, 1);
  Tensor expect = layer_norm(add(h, h), ps.get("dag.ln.gain"), ps.get("dag.ln.bias"),
                             1e-5);
  for (int j = 0; j < dim; ++j)
    CHECK(out.at(0, j) == doctest::Approx(expect.at(0, j)).epsilon(1e-12));
}

TEST_CASE("zero layers is a parameter error") {
  Dialogue d = chain3();
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 1);
  ParamStore ps(35);
  register_dag_gnn_params(ps, 2, 1);
  CHECK_THROWS_AS(dag_forward(g, rand_t({3, 2}, 36), ps, 0), ConfigError);
}

TEST_CASE("causality: upstream nodes ignore downstream perturbations") {
  // two threads: 1 <- {2 <- 3, 4 <- 5}
  Dialogue d = parse_dialogue(R"({"doc_id":"t2","sentences":[
    {"speaker":"a","tokens":["w"],"reply":-1},
    {"speaker":"b","tokens":["w"],"reply":0},
    {"speaker":"a","tokens":["w"],"reply":1},
    {"speaker":"c","tokens":["w"],"reply":0},
    {"speaker":"b","tokens":["w"],"reply":3}]})");
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 2);
  const int dim = 4;
  ParamStore ps(37);
  register_dag_gnn_params(ps, dim, 2);
  Tensor h = rand_t({5, dim}, 38);

  // perturb node 4 (utterance id 4): only 4 and 5 may change
  std::vector<double> v = h.data();
  v[size_t(3) * dim + 1] += 0.25;
  Tensor h2 = Tensor::from_data({5, dim}, v);

  Tensor a = dag_forward(g, h, ps, 2);
  Tensor b = dag_forward(g, h2, ps, 2);
  for (int i : {0, 1, 2})
    for (int j = 0; j < dim; ++j) CHECK(a.at(i, j) == b.at(i, j));
  double moved = 0.0;
  for (int i : {3, 4})
    for (int j = 0; j < dim; ++j) moved += std::fabs(a.at(i, j) - b.at(i, j));
  CHECK(moved > 1e-9);
}

TEST_CASE("stored predecessor order does not matter") {
  Dialogue d = chain3();
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 2);
  const int dim = 3;
  ParamStore ps(39);
  register_dag_gnn_params(ps, dim, 2);
  Tensor h = rand_t({3, dim}, 40);
  Tensor a = dag_forward(g, h, ps, 2);

  TcDag shuffled = g;
  for (auto& preds : shuffled.preds) std::reverse(preds.begin(), preds.end());
  Tensor b = dag_forward(shuffled, h, ps, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < dim; ++j)
      CHECK(a.at(i, j) == doctest::Approx(b.at(i, j)).epsilon(1e-12));
}

TEST_CASE("same-speaker sensitivity: flipping a relation moves the output") {
  Dialogue d = chain3();
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 2);
  const int dim = 3;
  ParamStore ps(41);
  register_dag_gnn_params(ps, dim, 1);
  Tensor h = rand_t({3, dim}, 42);
  Tensor a = dag_forward(g, h, ps, 1);

  TcDag flipped = g;
  REQUIRE(!flipped.preds[3].empty());
  flipped.preds[3][0].second ^= 1;
  Tensor b = dag_forward(flipped, h, ps, 1);
  double moved = 0.0;
  for (int j = 0; j < dim; ++j) moved += std::fabs(a.at(2, j) - b.at(2, j));
  CHECK(moved > 1e-9);
}

TEST_CASE("gradients flow through the dag forward") {
  Dialogue d = chain3();
  auto td = decompose_threads(d);
  TcDag g = build_tc_dag(d, td, 1);
  const int dim = 3;
  ParamStore ps(43);
  register_dag_gnn_params(ps, dim, 2);
  Tensor h = rand_t({3, dim}, 44);
  // random readout weights keep every gradient entry at a healthy scale, so
  // the relative-error measure is not dominated by its 1e-8 floor
  Tensor readout = rand_t({3, dim}, 45);
  auto r = grad_check(ps, [&]() {
    Tensor out = dag_forward(g, h, ps, 2);
    return sum_all(mul(out, readout));
  });
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("reply gcn forward keeps shapes and differentiates") {
  Dialogue d = chain3();
  const int dim = 4;
  ParamStore ps(45);
  register_reply_gcn_params(ps, dim, 2);
  Tensor h = rand_t({3, dim}, 46);
  Tensor out = reply_gcn_forward(d, h, ps, 2);
  CHECK(out.rows() == 3);
  CHECK(out.cols() == dim);
  auto r = grad_check(ps, [&]() {
    Tensor o = reply_gcn_forward(d, h, ps, 2);
    return sum_all(mul(o, o));
  });
  CHECK(r.max_rel_err <= 1e-4);
}
