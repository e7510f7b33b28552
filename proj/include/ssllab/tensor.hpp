#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ssllab {

using Shape = std::vector<int>;

int shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode;

// Dense float32 tensor participating in a reverse-mode differentiation
// graph. Tensor is a cheap handle; ops build the graph implicitly by
// recording parents plus a backward closure on each result node. Execution
// order is stamped on every node so backward can replay adjoints in exact
// reverse order.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int ndim() const;
  int dim(int i) const;
  int numel() const;

  std::vector<float>& data();
  const std::vector<float>& data() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::vector<float>& grad();
  const std::vector<float>& grad() const;
  // Allocates (or keeps) the gradient buffer and fills it with zeros.
  void zero_grad();

  // Stop-gradient view: shares the data buffer, drops graph history.
  Tensor detach() const;

  // Value of a scalar tensor.
  float item() const;

  // Reverse-mode sweep from a scalar loss. Populates .grad on every
  // requires_grad tensor reachable from this node. Running it twice on the
  // same node without rebuilding the graph is an error.
  void backward();

  std::shared_ptr<TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<float>> values;
  std::vector<float> grad;  // empty until first use
  bool requires_grad = false;
  bool backward_ran = false;
  uint64_t seq = 0;  // execution order stamp
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Scatters this node's adjoint into its parents' grad buffers.
  std::function<void(TensorNode&)> backward_fn;

  int numel() const { return int(values->size()); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(values->size(), 0.0f);
  }
};

// When false (scoped via NoGradGuard), ops skip graph recording entirely.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

namespace detail {
// Op result constructor: stamps execution order, wires parents and the
// backward closure (only when gradients are enabled and some parent needs
// them), and checks the data for NaN/Inf (error state per the tensor
// contract).
Tensor make_result(Shape shape, std::vector<float> data,
                   std::vector<Tensor> parents,
                   std::function<void(TensorNode&)> backward_fn,
                   const char* op_name);
void check_finite(const std::vector<float>& values, const char* op_name);
}  // namespace detail

}  // namespace ssllab
