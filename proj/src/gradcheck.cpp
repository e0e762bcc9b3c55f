#include "vsrprune/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace vsrprune {

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  return f(tape, vars).value()[0];
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& params,
                           double h, double tol) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.parameter(p));
    Var out = f(tape, vars);
    if (!std::isfinite(out.value()[0])) {
      throw EvalError("grad_check: function is not finite at the base point");
    }
    tape.backward(out);
    for (const Var& v : vars) {
      analytic.push_back(v.grad().size() == v.value().size()
                             ? v.grad()
                             : Tensor::zeros(v.shape()));
    }
  }

  std::vector<Tensor> numeric;
  std::vector<Tensor> work = params;
  for (std::size_t k = 0; k < work.size(); ++k) {
    Tensor g(work[k].shape());
    for (std::size_t i = 0; i < work[k].size(); ++i) {
      const float orig = work[k][i];
      work[k][i] = static_cast<float>(orig + h);
      const double up = evaluate(f, work);
      work[k][i] = static_cast<float>(orig - h);
      const double down = evaluate(f, work);
      work[k][i] = orig;
      // Use the perturbation actually representable in float.
      const double step = static_cast<double>(static_cast<float>(orig + h)) -
                          static_cast<double>(static_cast<float>(orig - h));
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw EvalError("grad_check: non-finite value under perturbation");
      }
      g[i] = static_cast<float>((up - down) / step);
    }
    numeric.push_back(std::move(g));
  }

  double scale = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    for (std::size_t i = 0; i < analytic[k].size(); ++i) {
      scale = std::max({scale, std::abs(static_cast<double>(analytic[k][i])),
                        std::abs(static_cast<double>(numeric[k][i]))});
    }
  }
  const double floor = std::max(1e-2 * scale, 1e-9);

  GradCheckReport report;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    for (std::size_t i = 0; i < analytic[k].size(); ++i) {
      const double a = analytic[k][i];
      const double n = numeric[k][i];
      const double abs_err = std::abs(a - n);
      const double rel =
          abs_err / std::max({std::abs(a), std::abs(n), floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel >= report.max_relative_error) {
        report.max_relative_error = rel;
        std::ostringstream os;
        os << "param" << k << "[" << i << "]: analytic " << a << " vs numeric "
           << n;
        report.worst = os.str();
      }
      ++report.entries_checked;
    }
  }
  report.passed = report.max_relative_error <= tol;
  return report;
}

}  // namespace vsrprune
