#pragma once

#include <vector>

#include "ssllab/tensor.hpp"

namespace ssllab {

enum class Padding { same, valid };

// Elementwise / reduction plumbing -----------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float factor);
Tensor sum(const Tensor& x);
Tensor relu(const Tensor& x);

// Convolutional network ops -------------------------------------------------

// Cross-correlation of input [N,C,H,W] with kernel [K,C,kh,kw] plus bias [K].
// Stride 1. Same padding requires odd kernel extents.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              Padding padding);

// 2x2 max pooling, stride 2. H and W must be even. Gradient routes to the
// argmax element; ties go to the first element in row-major window order.
Tensor maxpool2(const Tensor& input);

// Mean over the spatial dims: [N,C,H,W] -> [N,C].
Tensor global_avg_pool(const Tensor& input);

// Batch normalization over N,H,W per channel. Train mode normalizes with
// batch statistics and folds them into the running tensors
// (running = momentum * running + (1 - momentum) * batch); eval mode
// normalizes with the running statistics and is a pure function.
Tensor batchnorm2d(const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, Tensor& running_mean,
                   Tensor& running_var, bool train, float momentum = 0.9f,
                   float eps = 1e-5f);

// Affine layer: [N,F] x [F,O] + [O] -> [N,O].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Losses ---------------------------------------------------------------------

// Row-wise tempered softmax with max-subtraction. temperature must be > 0.
Tensor softmax(const Tensor& logits, float temperature = 1.0f);

// Mean of -log p(y*) over rows where mask is nonzero (all rows when mask is
// null). Zero kept rows yields a constant 0 with zero gradient.
Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels,
                     const std::vector<uint8_t>* row_mask = nullptr);

// Mean over kept rows of sum_i p_i (log p_i - log q_i), 0*log 0 = 0.
// Gradients flow to both arguments; pass p detached for a fixed target.
Tensor kl_divergence(const Tensor& p, const Tensor& q,
                     const std::vector<uint8_t>* row_mask = nullptr);

// Mean over rows of -sum_i p_i log p_i.
Tensor entropy(const Tensor& p);

// Non-differentiable helpers -------------------------------------------------

std::vector<int> argmax_rows(const Tensor& t);    // [N,C] -> N indices
std::vector<float> rowmax_values(const Tensor& t);  // [N,C] -> N maxima

}  // namespace ssllab
