// Dual-scale rotary position scoring: micro (token distance) and macro
// (utterance depth) subspaces with topology-adaptive sign inversion for
// divergent threads. This is the plain-vector reference path; the batched
// grid scorer in grid_tagger composes the same pieces out of tensor ops.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcda/util.hpp"

namespace tcda::drope {

std::vector<double> rotate(const std::vector<double>& x, double p, double theta);

// Keys keep their coordinate inside the query's thread, flip sign across
// divergent threads, so the rotary difference p_q - p_hat_k encodes the
// additive path length p_q + p_k between branches.
double adapt_position(double p, bool in_same_thread);

struct TokenView {
  std::vector<double> h_tok;  // token-stream feature, width d
  std::vector<double> h_utt;  // utterance-stream feature, width d
  double p_tok = 0.0;
  double p_utt = 0.0;
  int thread_id = 0;  // 0 = root marker, same-thread with everything
};

struct ClassHead {
  int d_in = 0;
  int d_half = 0;             // d_r / 2, must be even
  std::vector<double> w_mic;  // d_in x d_half, row-major, x*W convention
  std::vector<double> w_mac;  // d_in x d_half
};

std::vector<double> project(const std::vector<double>& x,
                            const std::vector<double>& w, int d_in, int d_out);

struct ScoreParts {
  double micro = 0.0;
  double macro = 0.0;
  double total() const { return micro + macro; }
};

ScoreParts score_parts(const TokenView& q, const TokenView& k,
                       const ClassHead& head, double theta_mic,
                       double theta_mac);
double score(const TokenView& q, const TokenView& k, const ClassHead& head,
             double theta_mic, double theta_mac);

// Expected matched-feature correlation at a rotary distance:
// (1/pairs) * sum_k cos(delta * theta^(-2k/width)).
double mean_correlation(int width, double theta, double delta);

struct DecayTable {
  std::vector<double> distance;
  std::vector<double> micro;          // analytic, theta_mic
  std::vector<double> macro;          // analytic, theta_mac
  std::vector<double> sampled_micro;  // Monte Carlo, random matched features
  std::vector<double> sampled_macro;
};

DecayTable decay_curve(int width, double theta_mic, double theta_mac,
                       int max_distance, int samples, uint64_t seed);
std::string decay_table_text(const DecayTable& t);

}  // namespace tcda::drope
