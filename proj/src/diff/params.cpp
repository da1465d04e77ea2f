#include "ran/diff/params.hpp"

namespace ran::diff {

void ParamSet::add(std::string name, Mat value) {
  if (index_.count(name) != 0) throw ShapeError("duplicate parameter '" + name + "'");
  index_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

bool ParamSet::contains(std::string_view name) const {
  return index_.count(std::string(name)) != 0;
}

std::size_t ParamSet::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ShapeError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const Mat& v : values_) n += std::size_t(v.size());
  return n;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.names_ != b.names_) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (a.values_[i].rows() != b.values_[i].rows() || a.values_[i].cols() != b.values_[i].cols()) {
      return false;
    }
    if (a.values_[i] != b.values_[i]) return false;
  }
  return true;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, bool trainable)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars_.push_back(trainable ? tape.variable(params.value(i)) : tape.constant(params.value(i)));
  }
}

std::vector<Mat> BoundParams::gradients() const {
  std::vector<Mat> out;
  out.reserve(vars_.size());
  for (const Var& v : vars_) out.push_back(tape_->grad(v));
  return out;
}

}  // namespace ran::diff
