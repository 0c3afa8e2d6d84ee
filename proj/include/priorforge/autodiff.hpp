#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "priorforge/tensor.hpp"

namespace pf {

struct Node;
using Var = std::shared_ptr<Node>;

// One value in a define-by-run computation graph. backward_fn accumulates
// this node's grad into its parents' grads using values captured at forward
// time. Nodes whose subtree contains no trainable leaf are pruned at
// construction, so eval-mode forwards carry no graph.
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  int64_t id = 0;
  bool requires_grad = false;

  Tensor& ensure_grad() {
    if (grad.data.empty()) grad = Tensor::zeros(value.shape);
    return grad;
  }
  bool has_grad() const { return !grad.data.empty(); }
};

Var make_leaf(Tensor value, bool requires_grad);
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Reverse pass from a scalar root. Interior grads are cleared first; leaf
// (parameter) grads accumulate across calls until zeroed by the caller, so
// several backward passes over one graph sum their contributions.
void backward(const Var& root);

void zero_grad(const std::vector<Var>& params);

}  // namespace pf
