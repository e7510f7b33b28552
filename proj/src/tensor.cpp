#include "ssllab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ssllab {

namespace {
thread_local uint64_t g_seq_counter = 0;
thread_local bool g_grad_enabled = true;
}  // namespace

int shape_numel(const Shape& shape) {
  int n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor extents must be positive");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const int n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<float>(size_t(n), 0.0f),
                   requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const int n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<float>(size_t(n), value),
                   requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data,
                         bool requires_grad) {
  const int n = shape_numel(shape);
  if (size_t(n) != data.size()) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::make_shared<std::vector<float>>(std::move(data));
  node->requires_grad = requires_grad;
  node->seq = ++g_seq_counter;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
int Tensor::ndim() const { return int(node_->shape.size()); }

int Tensor::dim(int i) const {
  if (i < 0 || i >= ndim()) throw std::out_of_range("tensor dim index");
  return node_->shape[size_t(i)];
}

int Tensor::numel() const { return node_->numel(); }

std::vector<float>& Tensor::data() { return *node_->values; }
const std::vector<float>& Tensor::data() const { return *node_->values; }

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool value) { node_->requires_grad = value; }

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::vector<float>& Tensor::grad() {
  if (node_->grad.empty())
    throw std::runtime_error("tensor has no gradient (backward not run?)");
  return node_->grad;
}

const std::vector<float>& Tensor::grad() const {
  if (node_->grad.empty())
    throw std::runtime_error("tensor has no gradient (backward not run?)");
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->values->size(), 0.0f);
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<TensorNode>();
  node->shape = node_->shape;
  node->values = node_->values;  // shared storage, no history
  node->requires_grad = false;
  node->seq = ++g_seq_counter;
  return Tensor(std::move(node));
}

float Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("item() requires a scalar tensor, got " +
                                shape_str(shape()));
  return (*node_->values)[0];
}

void Tensor::backward() {
  if (!node_) throw std::runtime_error("backward on empty tensor");
  if (numel() != 1)
    throw std::invalid_argument("backward requires a scalar loss, got " +
                                shape_str(shape()));
  if (node_->backward_ran)
    throw std::runtime_error(
        "backward called twice on the same loss without rebuilding the graph");
  node_->backward_ran = true;

  // Collect the reachable subgraph, then replay in reverse execution order.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<TensorNode*> stack{node_.get()};
  while (!stack.empty()) {
    TensorNode* n = stack.back();
    stack.pop_back();
    if (!visited.insert(n).second) continue;
    order.push_back(n);
    for (auto& p : n->parents) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const TensorNode* a, const TensorNode* b) { return a->seq > b->seq; });

  node_->ensure_grad();
  node_->grad[0] = 1.0f;
  for (TensorNode* n : order) {
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  for (TensorNode* n : order) detail::check_finite(n->grad, "backward");
}

namespace detail {

void check_finite(const std::vector<float>& values, const char* op_name) {
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string("non-finite value produced by ") +
                               op_name);
    }
  }
}

Tensor make_result(Shape shape, std::vector<float> data,
                   std::vector<Tensor> parents,
                   std::function<void(TensorNode&)> backward_fn,
                   const char* op_name) {
  check_finite(data, op_name);
  Tensor out = Tensor::from_data(std::move(shape), std::move(data), false);
  if (g_grad_enabled) {
    bool needs_grad = false;
    for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
    if (needs_grad) {
      out.node()->requires_grad = true;
      out.node()->parents.reserve(parents.size());
      for (auto& p : parents) out.node()->parents.push_back(p.node());
      out.node()->backward_fn = std::move(backward_fn);
    }
  }
  return out;
}

}  // namespace detail

}  // namespace ssllab
