#include "tcda/grad_check.hpp"

#include <cmath>

namespace tcda {

GradCheckResult grad_check(ParamStore& store, const std::function<Tensor()>& f,
                           double step) {
  store.zero_grads();
  Tensor loss = f();
  if (!std::isfinite(loss.item()))
    throw StructureError("grad_check: non-finite loss");
  loss.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(store.names().size());
  for (const auto& name : store.names()) analytic.push_back(store.get(name).grad());

  GradCheckResult res;
  for (size_t pi = 0; pi < store.names().size(); ++pi) {
    Tensor p = store.get(store.names()[pi]);
    auto& data = p.mutable_data();
    for (size_t j = 0; j < data.size(); ++j) {
      const double orig = data[j];
      double f1, f2;
      {
        NoGradGuard ng;
        data[j] = orig + step;
        f1 = f().item();
        data[j] = orig - step;
        f2 = f().item();
        data[j] = orig;
      }
      const double num = (f1 - f2) / (2.0 * step);
      const double ana = analytic[pi][j];
      const double denom = std::max(1e-8, std::fabs(ana) + std::fabs(num));
      const double rel = std::fabs(ana - num) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = store.names()[pi];
        res.worst_index = int64_t(j);
        res.analytic = ana;
        res.numeric = num;
      }
    }
  }
  return res;
}

}  // namespace tcda
