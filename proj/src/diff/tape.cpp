#include "ran/diff/tape.hpp"

#include <string>

namespace ran::diff {

Var Tape::push(std::string_view op, Mat value, bool needs_grad, BackwardFn backward) {
  if (!value.allFinite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Mat value) { return push("variable", std::move(value), true, nullptr); }

Var Tape::constant(Mat value) { return push("constant", std::move(value), false, nullptr); }

Var Tape::record(std::string_view op, Mat value, std::initializer_list<Var> parents,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (&p.tape() != this) throw ShapeError(std::string(op) + ": operand from another tape");
    needs = needs || nodes_[p.id()].needs_grad;
  }
  return push(op, std::move(value), needs, std::move(backward));
}

Var Tape::record(std::string_view op, Mat value, const std::vector<Var>& parents,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (&p.tape() != this) throw ShapeError(std::string(op) + ": operand from another tape");
    needs = needs || nodes_[p.id()].needs_grad;
  }
  return push(op, std::move(value), needs, std::move(backward));
}

Mat Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.size() == 0) return Mat::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::backward(Var root) {
  if (&root.tape() != this) throw ShapeError("backward: root from another tape");
  const Mat& rv = nodes_[root.id()].value;
  if (rv.rows() != 1 || rv.cols() != 1) throw ShapeError("backward: root must be 1x1");
  for (Node& node : nodes_) node.grad.resize(0, 0);
  if (!nodes_[root.id()].needs_grad) return;
  nodes_[root.id()].grad = Mat::Ones(1, 1);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.size() == 0) continue;
    node.backward(*this, node.grad, node.value);
  }
}

}  // namespace ran::diff
