#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ran/diff/tape.hpp"

namespace ran::diff {

// Named, ordered collection of parameter tensors. Insertion order is the
// canonical order for optimizers, checkpoints and gradient vectors.
class ParamSet {
 public:
  void add(std::string name, Mat value);

  std::size_t size() const { return values_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  const std::string& name(std::size_t i) const { return names_[i]; }
  const Mat& value(std::size_t i) const { return values_[i]; }
  Mat& value(std::size_t i) { return values_[i]; }
  const Mat& at(std::string_view name) const { return values_[index_of(name)]; }
  Mat& at(std::string_view name) { return values_[index_of(name)]; }

  std::size_t scalar_count() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<std::string> names_;
  std::vector<Mat> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Leaf nodes for every parameter of a ParamSet on one tape. Every consumer of
// a forward pass reads parameters through the same BoundParams, so all
// pipelines built on that tape share one set of weights.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamSet& params, bool trainable = true);

  Var operator[](std::string_view name) const { return vars_[params_->index_of(name)]; }
  Var at(std::size_t i) const { return vars_[i]; }
  const ParamSet& source() const { return *params_; }
  Tape& tape() const { return *tape_; }

  // Per-parameter gradients from the tape's last backward pass.
  std::vector<Mat> gradients() const;

 private:
  Tape* tape_;
  const ParamSet* params_;
  std::vector<Var> vars_;
};

}  // namespace ran::diff
