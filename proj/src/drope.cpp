#include "tcda/drope.hpp"

#include <cmath>
#include <sstream>

#include "tcda/dialogue.hpp"

namespace tcda::drope {

std::vector<double> rotate(const std::vector<double>& x, double p, double theta) {
  if (x.size() % 2 != 0) throw ShapeError("rotate: width must be even");
  const int d = int(x.size());
  std::vector<double> out(x.size());
  for (int q = 0; q < d / 2; ++q) {
    const double freq = std::pow(theta, -2.0 * q / d);
    const double c = std::cos(p * freq);
    const double s = std::sin(p * freq);
    out[size_t(2 * q)] = x[size_t(2 * q)] * c - x[size_t(2 * q + 1)] * s;
    out[size_t(2 * q + 1)] = x[size_t(2 * q)] * s + x[size_t(2 * q + 1)] * c;
  }
  return out;
}

double adapt_position(double p, bool in_same_thread) {
  return in_same_thread ? p : -p;
}

std::vector<double> project(const std::vector<double>& x,
                            const std::vector<double>& w, int d_in, int d_out) {
  if (int(x.size()) != d_in) throw ShapeError("project: input width mismatch");
  if (int(w.size()) != d_in * d_out) throw ShapeError("project: matrix size mismatch");
  std::vector<double> out(size_t(d_out), 0.0);
  for (int i = 0; i < d_in; ++i) {
    const double xi = x[size_t(i)];
    for (int j = 0; j < d_out; ++j) out[size_t(j)] += xi * w[size_t(i) * d_out + j];
  }
  return out;
}

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace

ScoreParts score_parts(const TokenView& q, const TokenView& k,
                       const ClassHead& head, double theta_mic,
                       double theta_mac) {
  const bool same = same_thread(q.thread_id, k.thread_id);
  const auto q_mic = rotate(project(q.h_tok, head.w_mic, head.d_in, head.d_half),
                            q.p_tok, theta_mic);
  const auto q_mac = rotate(project(q.h_utt, head.w_mac, head.d_in, head.d_half),
                            q.p_utt, theta_mac);
  const auto k_mic = rotate(project(k.h_tok, head.w_mic, head.d_in, head.d_half),
                            adapt_position(k.p_tok, same), theta_mic);
  const auto k_mac = rotate(project(k.h_utt, head.w_mac, head.d_in, head.d_half),
                            adapt_position(k.p_utt, same), theta_mac);
  return {dot(q_mic, k_mic), dot(q_mac, k_mac)};
}

double score(const TokenView& q, const TokenView& k, const ClassHead& head,
             double theta_mic, double theta_mac) {
  return score_parts(q, k, head, theta_mic, theta_mac).total();
}

double mean_correlation(int width, double theta, double delta) {
  const int pairs = width / 2;
  double s = 0.0;
  for (int q = 0; q < pairs; ++q)
    s += std::cos(delta * std::pow(theta, -2.0 * q / width));
  return s / pairs;
}

DecayTable decay_curve(int width, double theta_mic, double theta_mac,
                       int max_distance, int samples, uint64_t seed) {
  DecayTable t;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> feats(static_cast<size_t>(samples));
  for (auto& f : feats) {
    f.resize(size_t(width));
    for (auto& v : f) v = gauss(rng);
  }
  for (int d = 0; d <= max_distance; ++d) {
    t.distance.push_back(d);
    t.micro.push_back(mean_correlation(width, theta_mic, d));
    t.macro.push_back(mean_correlation(width, theta_mac, d));
    double smic = 0.0, smac = 0.0;
    for (const auto& f : feats) {
      const double norm2 = dot(f, f);
      smic += dot(f, rotate(f, d, theta_mic)) / norm2;
      smac += dot(f, rotate(f, d, theta_mac)) / norm2;
    }
    t.sampled_micro.push_back(smic / samples);
    t.sampled_macro.push_back(smac / samples);
  }
  return t;
}

std::string decay_table_text(const DecayTable& t) {
  std::ostringstream os;
  os << "# distance  micro_corr  macro_corr  sampled_micro  sampled_macro\n";
  char buf[160];
  for (size_t i = 0; i < t.distance.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%10.0f  %10.6f  %10.6f  %13.6f  %13.6f\n",
                  t.distance[i], t.micro[i], t.macro[i], t.sampled_micro[i],
                  t.sampled_macro[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace tcda::drope
