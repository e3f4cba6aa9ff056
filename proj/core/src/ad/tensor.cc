// core/src/ad/tensor.cc

// Copyright 2026 The mtlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "mtlaug/ad/tensor.h"

#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "mtlaug/error.h"

namespace mtlaug::ad {

namespace {
std::atomic<bool> g_nan_check{false};
}  // namespace

void SetNanCheck(bool enabled) { g_nan_check.store(enabled); }
bool NanCheckEnabled() { return g_nan_check.load(); }

std::size_t NumElements(const Shape &shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename Real>
Tensor<Real> Tensor<Real>::Constant(Shape shape, std::vector<Real> values) {
  if (NumElements(shape) != values.size())
    throw ShapeError("Constant: shape " + ShapeString(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  auto n = std::make_shared<NodeType>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  return Tensor(std::move(n));
}

template <typename Real>
Tensor<Real> Tensor<Real>::Parameter(Shape shape, std::vector<Real> values) {
  Tensor t = Constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  t.node_->op = "parameter";
  return t;
}

template <typename Real>
Tensor<Real> Tensor<Real>::Zeros(Shape shape, bool requires_grad) {
  std::vector<Real> v(NumElements(shape), Real(0));
  return requires_grad ? Parameter(std::move(shape), std::move(v))
                       : Constant(std::move(shape), std::move(v));
}

template <typename Real>
Tensor<Real> Tensor<Real>::Scalar(Real v) {
  return Constant({}, {v});
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (node_->value.size() != 1)
    throw UsageError("item() on tensor of shape " + ShapeString(node_->shape));
  return node_->value[0];
}

template <typename Real>
Tensor<Real> Tensor<Real>::Detach() const {
  return Constant(node_->shape, node_->value);
}

template <typename Real>
void Tensor<Real>::Backward() const {
  if (node_->value.size() != 1)
    throw UsageError("Backward() needs a scalar root, got shape " +
                     ShapeString(node_->shape));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS over nodes that require gradients.
  std::vector<NodeType *> order;
  std::unordered_set<NodeType *> visited;
  std::vector<std::pair<NodeType *, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto &[n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeType *p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  // Interior gradients restart from zero; leaves keep accumulating.
  for (NodeType *n : order)
    if (n->backward) n->grad.assign(n->value.size(), Real(0));
  node_->EnsureGrad()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeType *n = *it;
    if (n->backward) n->backward(*n);
  }
}

namespace internal {

template <typename Real>
Tensor<Real> MakeResult(std::string_view op, Shape shape, std::vector<Real> values,
                        const std::vector<Tensor<Real>> &inputs) {
  if (NanCheckEnabled()) {
    for (Real v : values)
      if (!std::isfinite(v))
        throw ValidationError(std::string(op) + ": produced a non-finite value");
  }
  auto n = std::make_shared<Node<Real>>();
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(values);
  for (const auto &in : inputs) {
    if (in.requires_grad()) n->requires_grad = true;
  }
  if (n->requires_grad) {
    n->parents.reserve(inputs.size());
    for (const auto &in : inputs) n->parents.push_back(in.ptr());
  }
  return Tensor<Real>(std::move(n));
}

template <typename Real>
Tensor<Real> MakeResult(std::string_view op, Shape shape, std::vector<Real> values,
                        std::initializer_list<Tensor<Real>> inputs) {
  return MakeResult<Real>(op, std::move(shape), std::move(values),
                          std::vector<Tensor<Real>>(inputs));
}

template Tensor<float> MakeResult(std::string_view, Shape, std::vector<float>,
                                  const std::vector<Tensor<float>> &);
template Tensor<double> MakeResult(std::string_view, Shape, std::vector<double>,
                                   const std::vector<Tensor<double>> &);
template Tensor<float> MakeResult(std::string_view, Shape, std::vector<float>,
                                  std::initializer_list<Tensor<float>>);
template Tensor<double> MakeResult(std::string_view, Shape, std::vector<double>,
                                   std::initializer_list<Tensor<double>>);

}  // namespace internal

template class Tensor<float>;
template class Tensor<double>;

}  // namespace mtlaug::ad
