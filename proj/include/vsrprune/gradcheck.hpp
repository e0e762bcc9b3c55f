#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vsrprune/tape.hpp"

namespace vsrprune {

/// Builds a scalar on the given tape from the supplied parameter Vars.
using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
  std::string worst;  // "param[i]: analytic a vs numeric n"
};

/// Compares tape gradients with central differences (f(x+h) − f(x−h)) / 2h,
/// perturbing every entry of every parameter. Relative error per entry is
/// |a − n| / max(|a|, |n|, floor), where floor = 1e-2 of the largest gradient
/// magnitude seen, so entries that are numerically zero do not dominate.
/// Throws EvalError if f is not finite at the base point.
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& params,
                           double h = 1e-3, double tol = 1e-3);

}  // namespace vsrprune
