// Reverse-mode differentiation over a recorded sequence of dense matrix ops.
//
// A Tape owns every intermediate value of one forward pass. Ops append a node
// holding the forward value and a closure that pushes the node's adjoint into
// its parents. backward() walks the nodes in reverse recording order, which is
// a valid topological order because a node can only reference earlier nodes.
//
// One tape is used by one thread at a time; separate tapes are independent.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "ran/error.hpp"

namespace ran::diff {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;

// Lightweight handle to a node on a tape. Copying a Var never copies data.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Receives the adjoint and the forward value of the node being processed.
  using BackwardFn = std::function<void(Tape&, const Mat& out_grad, const Mat& out_value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Mat value);
  Var constant(Mat value);

  // Appends an op result. `op` names the op in numeric error messages.
  Var record(std::string_view op, Mat value, std::initializer_list<Var> parents,
             BackwardFn backward);
  Var record(std::string_view op, Mat value, const std::vector<Var>& parents,
             BackwardFn backward);

  const Mat& value(Var v) const { return nodes_[v.id()].value; }
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

  // Gradient of the last backward() root w.r.t. `v`. Zero when `v` did not
  // influence the root or does not require gradients.
  Mat grad(Var v) const;

  // Seeds d(root)/d(root) = 1 and propagates. `root` must be 1x1.
  void backward(Var root);

  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& node = nodes_[v.id()];
    if (!node.needs_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    BackwardFn backward;
    bool needs_grad = false;
  };

  Var push(std::string_view op, Mat value, bool needs_grad, BackwardFn backward);

  std::vector<Node> nodes_;
};

inline const Mat& Var::value() const { return tape_->value(*this); }

inline double Var::scalar() const {
  const Mat& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("scalar(): node is not 1x1");
  }
  return v(0, 0);
}

}  // namespace ran::diff
