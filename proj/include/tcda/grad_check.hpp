// Central-difference verification of reverse-mode gradients.
#pragma once

#include <functional>
#include <string>

#include "tcda/param_store.hpp"

namespace tcda {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// f must be a pure deterministic scalar function of the store's parameters
// and rebuild its graph on every call. Every element of every parameter is
// perturbed by +/-step; relative errors use |a|+|n| floored at 1e-8.
GradCheckResult grad_check(ParamStore& store, const std::function<Tensor()>& f,
                           double step = 1e-5);

}  // namespace tcda
