#pragma once

#include <functional>
#include <vector>

#include "vsrprune/tensor.hpp"

namespace vsrprune {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Accumulated gradient; zero-sized before backward() touches the node.
  const Tensor& grad() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Records primitive operations in execution order. backward() walks the
/// record in reverse, so every node is processed after all of its consumers.
class Tape {
 public:
  /// Receives the gradient of the node's output and pushes contributions to
  /// its parents through Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  /// Appends an op result. The node needs a gradient iff any parent does; the
  /// backward closure is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Zero-initialized (on first use) gradient buffer of a node, for in-place
  /// accumulation by backward closures. Returns nullptr for nodes that do not
  /// need gradients.
  float* grad_buffer(int id);
  void accumulate(int id, const Tensor& contribution);

  /// Seeds d(loss)/d(loss) = 1 on a single-element node and propagates.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace vsrprune
