#pragma once

#include <map>
#include <string>

#include "vsrprune/tensor.hpp"

namespace vsrprune {

/// Cosine annealing from base (at iteration 0) to floor (at horizon and after).
double cosine_lr(double base, double floor, long iteration, long horizon);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// Adam with per-tensor moment buffers. Each call passes its own step size,
/// which is how parameter groups get different learning rates.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Updates param in place from grad. An empty grad is treated as zero.
  void step(const std::string& name, Tensor& param, const Tensor& grad,
            double lr);

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
  };
  AdamConfig config_;
  std::map<std::string, Moments> state_;
};

}  // namespace vsrprune
