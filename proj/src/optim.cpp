#include "vsrprune/optim.hpp"

#include <cmath>
#include <numbers>

namespace vsrprune {

double cosine_lr(double base, double floor, long iteration, long horizon) {
  if (horizon <= 0 || iteration >= horizon) return iteration <= 0 ? base : floor;
  if (iteration <= 0) return base;
  const double progress = static_cast<double>(iteration) / static_cast<double>(horizon);
  return floor + 0.5 * (base - floor) * (1.0 + std::cos(std::numbers::pi * progress));
}

void Adam::step(const std::string& name, Tensor& param, const Tensor& grad,
                double lr) {
  if (!grad.empty() && grad.size() != param.size()) {
    throw ShapeError("Adam: gradient of " + name + " has " +
                     std::to_string(grad.size()) + " entries, parameter has " +
                     std::to_string(param.size()));
  }
  Moments& s = state_[name];
  if (s.m.size() != param.size()) {
    s.m.assign(param.size(), 0.0);
    s.v.assign(param.size(), 0.0);
    s.t = 0;
  }
  ++s.t;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.empty() ? 0.0 : grad[i];
    s.m[i] = b1 * s.m[i] + (1.0 - b1) * g;
    s.v[i] = b2 * s.v[i] + (1.0 - b2) * g * g;
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    param[i] = static_cast<float>(param[i] - lr * mhat / (std::sqrt(vhat) + config_.eps));
  }
}

}  // namespace vsrprune
