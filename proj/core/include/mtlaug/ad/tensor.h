// core/include/mtlaug/ad/tensor.h

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

// Reverse-mode automatic differentiation on dense n-d arrays.
//
// A Tensor is a cheap handle to a graph node. Ops build the graph eagerly as
// they compute values; Backward() walks it in reverse topological order and
// accumulates (+=) into every node that requires a gradient. Parameters are
// leaves created with Tensor::Parameter; their gradients persist until
// ZeroGrad(), so calling Backward() twice doubles them.
//
// Everything is templated on the scalar type. The library instantiates float
// (training) and double (gradient checking) only.

#ifndef MTLAUG_AD_TENSOR_H_
#define MTLAUG_AD_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtlaug::ad {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

/// When enabled, every op checks its output for NaN/Inf and throws.
void SetNanCheck(bool enabled);
bool NanCheckEnabled();

template <typename Real>
struct Node {
  Shape shape;
  std::vector<Real> value;
  /// Empty until something accumulates into it.
  std::vector<Real> grad;
  std::vector<std::shared_ptr<Node>> parents;
  /// Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node &)> backward;
  bool requires_grad = false;
  std::string_view op = "leaf";

  Real *EnsureGrad() {
    if (grad.empty()) grad.assign(value.size(), Real(0));
    return grad.data();
  }
};

template <typename Real>
class Tensor {
 public:
  using NodeType = Node<Real>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<NodeType> node) : node_(std::move(node)) {}

  static Tensor Constant(Shape shape, std::vector<Real> values);
  static Tensor Parameter(Shape shape, std::vector<Real> values);
  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Scalar(Real v);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const Real> data() const { return node_->value; }
  std::span<Real> mutable_data() { return node_->value; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return {node_->EnsureGrad(), node_->value.size()}; }
  void ZeroGrad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  std::string_view op() const { return node_->op; }
  /// Value of a one-element tensor.
  Real item() const;

  /// Reverse sweep from this scalar. Throws UsageError if not a scalar.
  void Backward() const;

  /// Same values, no history, no gradient.
  Tensor Detach() const;

  NodeType &node() const { return *node_; }
  const std::shared_ptr<NodeType> &ptr() const { return node_; }

 private:
  std::shared_ptr<NodeType> node_;
};

namespace internal {

/// Creates an op result whose parents are `inputs`; requires_grad is the OR
/// of the inputs'. Runs the NaN check if enabled.
template <typename Real>
Tensor<Real> MakeResult(std::string_view op, Shape shape, std::vector<Real> values,
                        std::initializer_list<Tensor<Real>> inputs);
template <typename Real>
Tensor<Real> MakeResult(std::string_view op, Shape shape, std::vector<Real> values,
                        const std::vector<Tensor<Real>> &inputs);

}  // namespace internal

}  // namespace mtlaug::ad

#endif  // MTLAUG_AD_TENSOR_H_
