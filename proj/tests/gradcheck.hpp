#pragma once

// Test-only finite-difference oracle. Independent of the backward pass it
// checks: perturbs inputs and recomputes the forward value.

#include <cmath>
#include <functional>

#include "gridwm/tensor.hpp"

namespace gridwm::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

// f must rebuild the whole forward graph from the current values of `inputs`
// and return the scalar loss tensor. Central differences, step h.
inline GradCheckResult gradcheck(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                                 double h = 1e-5) {
  Tensor loss = f();
  for (auto& t : inputs) t.zero_grad();
  loss.backward();
  GradCheckResult res;
  for (auto& t : inputs) {
    for (size_t i = 0; i < t.data().size(); ++i) {
      const double orig = t.data()[i];
      t.data()[i] = orig + h;
      const double lp = f().item();
      t.data()[i] = orig - h;
      const double lm = f().item();
      t.data()[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = t.grad()[i];
      const double abs_err = std::fabs(fd - an);
      const double rel = abs_err / std::max({std::fabs(fd), std::fabs(an), 1e-8});
      res.max_abs_err = std::max(res.max_abs_err, abs_err);
      res.max_rel_err = std::max(res.max_rel_err, rel);
    }
  }
  return res;
}

}  // namespace gridwm::testing
