#include "priorforge/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "priorforge/errors.hpp"

namespace pf {

namespace {
std::atomic<int64_t> g_next_id{1};
}

Var make_leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool needs = false;
  for (const auto& p : parents)
    if (p && p->requires_grad) needs = true;
  n->requires_grad = needs;
  if (needs) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

void backward(const Var& root) {
  check_shape(root && root->value.numel() == 1, "backward: root must be a scalar");
  if (!root->requires_grad) return;

  // Collect the reachable subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p && p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });

  // Interior grads restart at zero each pass; leaves keep accumulating.
  for (Node* n : order) {
    if (n->backward_fn && n->has_grad()) std::fill(n->grad.data.begin(), n->grad.data.end(), 0.0f);
  }
  root->ensure_grad().data[0] = 1.0f;
  for (Node* n : order) {
    if (n->backward_fn && n->has_grad()) n->backward_fn(*n);
  }
}

void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) {
    if (p && p->has_grad()) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0f);
  }
}

}  // namespace pf
