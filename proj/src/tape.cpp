#include "vsrprune/tape.hpp"

namespace vsrprune {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents,
                 BackwardFn fn) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw EvalError("operand recorded on another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs,
                        needs ? std::move(fn) : BackwardFn{}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& parents,
                 BackwardFn fn) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw EvalError("operand recorded on another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs,
                        needs ? std::move(fn) : BackwardFn{}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

float* Tape::grad_buffer(int id) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return nullptr;
  if (node.grad.size() != node.value.size()) {
    node.grad = Tensor::zeros(node.value.shape());
  }
  return node.grad.data();
}

void Tape::accumulate(int id, const Tensor& contribution) {
  float* g = grad_buffer(id);
  if (g == nullptr) return;
  if (!(contribution.shape() == nodes_[id].value.shape())) {
    throw ShapeError("gradient " + contribution.shape().str() +
                     " does not match value " + nodes_[id].value.shape().str());
  }
  for (std::size_t i = 0; i < contribution.size(); ++i) g[i] += contribution[i];
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw EvalError("loss recorded on another tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " +
                     loss.shape().str());
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] += 1.0f;
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.size() == 0) continue;
    // The closure may grow other nodes' grads but never this node's.
    node.backward(*this, node.grad);
  }
}

}  // namespace vsrprune
