#include "ssllab/ops.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "gemm.hpp"

namespace ssllab {

namespace {

constexpr float kLogClamp = 1e-12f;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

float safe_log(float x) { return std::log(x < kLogClamp ? kLogClamp : x); }

void check_rows_normalized(const Tensor& t, const char* op) {
  const int n = t.dim(0), c = t.dim(1);
  const auto& v = t.data();
  for (int i = 0; i < n; ++i) {
    float s = 0.0f;
    for (int j = 0; j < c; ++j) s += v[size_t(i) * c + j];
    if (std::fabs(s - 1.0f) > 2e-5f)
      throw std::invalid_argument(std::string(op) + ": row " +
                                  std::to_string(i) +
                                  " does not sum to 1 (got " +
                                  std::to_string(s) + ")");
  }
}

void check_nonnegative(const Tensor& t, const char* op) {
  for (float v : t.data())
    if (v < 0.0f)
      throw std::invalid_argument(std::string(op) +
                                  ": negative probability entry");
}

int count_kept(const std::vector<uint8_t>* mask, int n) {
  if (!mask) return n;
  int k = 0;
  for (int i = 0; i < n; ++i) k += (*mask)[size_t(i)] ? 1 : 0;
  return k;
}

// Expands one image [C,H,W] into patch columns P[C*kh*kw][Ho*Wo].
void im2col(const float* x, int C, int H, int W, int kh, int kw, int pad_h,
            int pad_w, int Ho, int Wo, float* P) {
  for (int c = 0; c < C; ++c) {
    const float* xc = x + size_t(c) * H * W;
    for (int r = 0; r < kh; ++r) {
      for (int s = 0; s < kw; ++s) {
        float* row = P + (size_t(c) * kh * kw + size_t(r) * kw + s) *
                             size_t(Ho) * Wo;
        for (int y = 0; y < Ho; ++y) {
          const int iy = y + r - pad_h;
          float* out = row + size_t(y) * Wo;
          if (iy < 0 || iy >= H) {
            std::memset(out, 0, sizeof(float) * size_t(Wo));
            continue;
          }
          const float* in = xc + size_t(iy) * W;
          for (int xo = 0; xo < Wo; ++xo) {
            const int ix = xo + s - pad_w;
            out[xo] = (ix >= 0 && ix < W) ? in[ix] : 0.0f;
          }
        }
      }
    }
  }
}

// Adds patch-column gradients dP back into one image gradient [C,H,W].
void col2im_add(const float* dP, int C, int H, int W, int kh, int kw,
                int pad_h, int pad_w, int Ho, int Wo, float* dx) {
  for (int c = 0; c < C; ++c) {
    float* dxc = dx + size_t(c) * H * W;
    for (int r = 0; r < kh; ++r) {
      for (int s = 0; s < kw; ++s) {
        const float* row = dP + (size_t(c) * kh * kw + size_t(r) * kw + s) *
                                    size_t(Ho) * Wo;
        for (int y = 0; y < Ho; ++y) {
          const int iy = y + r - pad_h;
          if (iy < 0 || iy >= H) continue;
          float* out = dxc + size_t(iy) * W;
          const float* in = row + size_t(y) * Wo;
          for (int xo = 0; xo < Wo; ++xo) {
            const int ix = xo + s - pad_w;
            if (ix >= 0 && ix < W) out[ix] += in[xo];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  std::vector<float> out(a.data());
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  auto an = a.node(), bn = b.node();
  return detail::make_result(
      a.shape(), std::move(out), {a, b},
      [an, bn](TensorNode& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] += self.grad[i];
        }
      },
      "add");
}

Tensor scale(const Tensor& x, float factor) {
  std::vector<float> out(x.data());
  for (auto& v : out) v *= factor;
  auto xn = x.node();
  return detail::make_result(
      x.shape(), std::move(out), {x},
      [xn, factor](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          xn->grad[i] += factor * self.grad[i];
      },
      "scale");
}

Tensor sum(const Tensor& x) {
  float s = 0.0f;
  for (float v : x.data()) s += v;
  auto xn = x.node();
  return detail::make_result(
      {1}, {s}, {x},
      [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const float g = self.grad[0];
        for (auto& v : xn->grad) v += g;
      },
      "sum");
}

Tensor relu(const Tensor& x) {
  std::vector<float> out(x.data());
  for (auto& v : out) v = v > 0.0f ? v : 0.0f;
  auto xn = x.node();
  return detail::make_result(
      x.shape(), std::move(out), {x},
      [xn](TensorNode& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const auto& in = *xn->values;
        for (size_t i = 0; i < self.grad.size(); ++i)
          if (in[i] > 0.0f) xn->grad[i] += self.grad[i];
      },
      "relu");
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              Padding padding) {
  require(input.ndim() == 4, "conv2d: input must be [N,C,H,W], got " +
                                 shape_str(input.shape()));
  require(kernel.ndim() == 4, "conv2d: kernel must be [K,C,kh,kw], got " +
                                  shape_str(kernel.shape()));
  const int N = input.dim(0), C = input.dim(1), H = input.dim(2),
            W = input.dim(3);
  const int K = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  require(kernel.dim(1) == C,
          "conv2d: channel mismatch, input has " + std::to_string(C) +
              " channels but kernel expects " + std::to_string(kernel.dim(1)));
  require(bias.ndim() == 1 && bias.dim(0) == K,
          "conv2d: bias must be [K=" + std::to_string(K) + "], got " +
              shape_str(bias.shape()));
  int pad_h = 0, pad_w = 0, Ho, Wo;
  if (padding == Padding::same) {
    require(kh % 2 == 1 && kw % 2 == 1,
            "conv2d: same padding requires odd kernel extents, got " +
                std::to_string(kh) + "x" + std::to_string(kw));
    pad_h = (kh - 1) / 2;
    pad_w = (kw - 1) / 2;
    Ho = H;
    Wo = W;
  } else {
    Ho = H - kh + 1;
    Wo = W - kw + 1;
    require(Ho >= 1 && Wo >= 1,
            "conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                " larger than input " + std::to_string(H) + "x" +
                std::to_string(W) + " under valid padding");
  }
  const int CK = C * kh * kw;
  const int HWo = Ho * Wo;

  std::vector<float> out(size_t(N) * K * HWo);
  std::vector<float> patch(size_t(CK) * HWo);
  const float* kmat = kernel.data().data();
  const float* bv = bias.data().data();
  for (int n = 0; n < N; ++n) {
    im2col(input.data().data() + size_t(n) * C * H * W, C, H, W, kh, kw, pad_h,
           pad_w, Ho, Wo, patch.data());
    float* yn = out.data() + size_t(n) * K * HWo;
    detail::gemm_ab(K, HWo, CK, kmat, patch.data(), yn, false);
    for (int k = 0; k < K; ++k) {
      const float b = bv[k];
      float* row = yn + size_t(k) * HWo;
      for (int p = 0; p < HWo; ++p) row[p] += b;
    }
  }

  auto in_node = input.node();
  auto k_node = kernel.node();
  auto b_node = bias.node();
  auto backward = [in_node, k_node, b_node, N, C, H, W, K, kh, kw, pad_h,
                   pad_w, Ho, Wo, CK, HWo](TensorNode& self) {
    const float* dY = self.grad.data();
    if (b_node->requires_grad) {
      b_node->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
          const float* row = dY + (size_t(n) * K + k) * HWo;
          float s = 0.0f;
          for (int p = 0; p < HWo; ++p) s += row[p];
          b_node->grad[size_t(k)] += s;
        }
    }
    std::vector<float> patch;
    if (k_node->requires_grad) {
      k_node->ensure_grad();
      patch.resize(size_t(CK) * HWo);
      for (int n = 0; n < N; ++n) {
        im2col(in_node->values->data() + size_t(n) * C * H * W, C, H, W, kh,
               kw, pad_h, pad_w, Ho, Wo, patch.data());
        detail::gemm_abt(K, CK, HWo, dY + size_t(n) * K * HWo, patch.data(),
                         k_node->grad.data(), true);
      }
    }
    if (in_node->requires_grad) {
      in_node->ensure_grad();
      // W^T once, then dP = W^T dY per image.
      std::vector<float> wt(size_t(CK) * K);
      const float* kmat = k_node->values->data();
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < CK; ++j)
          wt[size_t(j) * K + k] = kmat[size_t(k) * CK + j];
      std::vector<float> dP(size_t(CK) * HWo);
      for (int n = 0; n < N; ++n) {
        detail::gemm_ab(CK, HWo, K, wt.data(), dY + size_t(n) * K * HWo,
                        dP.data(), false);
        col2im_add(dP.data(), C, H, W, kh, kw, pad_h, pad_w, Ho, Wo,
                   in_node->grad.data() + size_t(n) * C * H * W);
      }
    }
  };
  return detail::make_result({N, K, Ho, Wo}, std::move(out),
                             {input, kernel, bias}, std::move(backward),
                             "conv2d");
}

Tensor maxpool2(const Tensor& input) {
  require(input.ndim() == 4, "maxpool2: input must be [N,C,H,W], got " +
                                 shape_str(input.shape()));
  const int N = input.dim(0), C = input.dim(1), H = input.dim(2),
            W = input.dim(3);
  require(H % 2 == 0 && W % 2 == 0,
          "maxpool2: spatial extents must be even, got " + std::to_string(H) +
              "x" + std::to_string(W));
  const int Ho = H / 2, Wo = W / 2;
  std::vector<float> out(size_t(N) * C * Ho * Wo);
  auto argmax = std::make_shared<std::vector<int>>(out.size());
  const auto& x = input.data();
  for (int nc = 0; nc < N * C; ++nc) {
    const float* plane = x.data() + size_t(nc) * H * W;
    float* o = out.data() + size_t(nc) * Ho * Wo;
    int* am = argmax->data() + size_t(nc) * Ho * Wo;
    for (int y = 0; y < Ho; ++y) {
      for (int xo = 0; xo < Wo; ++xo) {
        const int base = (2 * y) * W + 2 * xo;
        // row-major window order; strict > keeps the first max on ties
        int best = base;
        float bv = plane[base];
        if (plane[base + 1] > bv) { best = base + 1; bv = plane[base + 1]; }
        if (plane[base + W] > bv) { best = base + W; bv = plane[base + W]; }
        if (plane[base + W + 1] > bv) { best = base + W + 1; bv = plane[base + W + 1]; }
        o[size_t(y) * Wo + xo] = bv;
        am[size_t(y) * Wo + xo] = nc * H * W + best;
      }
    }
  }
  auto in_node = input.node();
  return detail::make_result(
      {N, C, Ho, Wo}, std::move(out), {input},
      [in_node, argmax](TensorNode& self) {
        if (!in_node->requires_grad) return;
        in_node->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          in_node->grad[size_t((*argmax)[i])] += self.grad[i];
      },
      "maxpool2");
}

Tensor global_avg_pool(const Tensor& input) {
  require(input.ndim() == 4, "global_avg_pool: input must be [N,C,H,W], got " +
                                 shape_str(input.shape()));
  const int N = input.dim(0), C = input.dim(1), H = input.dim(2),
            W = input.dim(3);
  const int HW = H * W;
  std::vector<float> out(size_t(N) * C);
  const auto& x = input.data();
  for (int nc = 0; nc < N * C; ++nc) {
    float s = 0.0f;
    const float* plane = x.data() + size_t(nc) * HW;
    for (int p = 0; p < HW; ++p) s += plane[p];
    out[size_t(nc)] = s / float(HW);
  }
  auto in_node = input.node();
  return detail::make_result(
      {N, C}, std::move(out), {input},
      [in_node, HW](TensorNode& self) {
        if (!in_node->requires_grad) return;
        in_node->ensure_grad();
        const float inv = 1.0f / float(HW);
        for (size_t i = 0; i < self.grad.size(); ++i) {
          const float g = self.grad[i] * inv;
          float* dst = in_node->grad.data() + i * size_t(HW);
          for (int p = 0; p < HW; ++p) dst[p] += g;
        }
      },
      "global_avg_pool");
}

Tensor batchnorm2d(const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, Tensor& running_mean,
                   Tensor& running_var, bool train, float momentum,
                   float eps) {
  require(input.ndim() == 4, "batchnorm2d: input must be [N,C,H,W], got " +
                                 shape_str(input.shape()));
  const int N = input.dim(0), C = input.dim(1), H = input.dim(2),
            W = input.dim(3);
  require(gamma.numel() == C && beta.numel() == C &&
              running_mean.numel() == C && running_var.numel() == C,
          "batchnorm2d: parameter extents must equal channel count " +
              std::to_string(C));
  const int HW = H * W;
  const size_t M = size_t(N) * HW;  // elements per channel

  auto mu = std::make_shared<std::vector<float>>(size_t(C));
  auto inv_std = std::make_shared<std::vector<float>>(size_t(C));
  const auto& x = input.data();
  if (train) {
    for (int c = 0; c < C; ++c) {
      float s = 0.0f;
      for (int n = 0; n < N; ++n) {
        const float* plane = x.data() + (size_t(n) * C + c) * HW;
        for (int p = 0; p < HW; ++p) s += plane[p];
      }
      const float m = s / float(M);
      float v = 0.0f;
      for (int n = 0; n < N; ++n) {
        const float* plane = x.data() + (size_t(n) * C + c) * HW;
        for (int p = 0; p < HW; ++p) {
          const float d = plane[p] - m;
          v += d * d;
        }
      }
      v /= float(M);
      (*mu)[size_t(c)] = m;
      (*inv_std)[size_t(c)] = 1.0f / std::sqrt(v + eps);
      running_mean.data()[size_t(c)] =
          momentum * running_mean.data()[size_t(c)] + (1.0f - momentum) * m;
      running_var.data()[size_t(c)] =
          momentum * running_var.data()[size_t(c)] + (1.0f - momentum) * v;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      (*mu)[size_t(c)] = running_mean.data()[size_t(c)];
      (*inv_std)[size_t(c)] =
          1.0f / std::sqrt(running_var.data()[size_t(c)] + eps);
    }
  }

  std::vector<float> out(x.size());
  const auto& g = gamma.data();
  const auto& b = beta.data();
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const float m = (*mu)[size_t(c)], is = (*inv_std)[size_t(c)];
      const float gc = g[size_t(c)], bc = b[size_t(c)];
      const float* in = x.data() + (size_t(n) * C + c) * HW;
      float* o = out.data() + (size_t(n) * C + c) * HW;
      for (int p = 0; p < HW; ++p) o[p] = gc * (in[p] - m) * is + bc;
    }
  }

  auto in_node = input.node();
  auto g_node = gamma.node();
  auto b_node = beta.node();
  auto backward = [in_node, g_node, b_node, mu, inv_std, N, C, HW, M,
                   train](TensorNode& self) {
    const float* dy = self.grad.data();
    const float* x = in_node->values->data();
    const float* gv = g_node->values->data();
    for (int c = 0; c < C; ++c) {
      const float m = (*mu)[size_t(c)], is = (*inv_std)[size_t(c)];
      // channel reductions: sum dy, sum dy*xhat
      float sum_dy = 0.0f, sum_dy_xhat = 0.0f;
      for (int n = 0; n < N; ++n) {
        const size_t off = (size_t(n) * C + c) * HW;
        for (int p = 0; p < HW; ++p) {
          const float d = dy[off + p];
          sum_dy += d;
          sum_dy_xhat += d * (x[off + p] - m) * is;
        }
      }
      if (b_node->requires_grad) {
        b_node->ensure_grad();
        b_node->grad[size_t(c)] += sum_dy;
      }
      if (g_node->requires_grad) {
        g_node->ensure_grad();
        g_node->grad[size_t(c)] += sum_dy_xhat;
      }
      if (in_node->requires_grad) {
        in_node->ensure_grad();
        const float gc = gv[size_t(c)];
        if (train) {
          const float mean_dy = sum_dy / float(M);
          const float mean_dy_xhat = sum_dy_xhat / float(M);
          for (int n = 0; n < N; ++n) {
            const size_t off = (size_t(n) * C + c) * HW;
            for (int p = 0; p < HW; ++p) {
              const float xhat = (x[off + p] - m) * is;
              in_node->grad[off + p] +=
                  gc * is * (dy[off + p] - mean_dy - xhat * mean_dy_xhat);
            }
          }
        } else {
          for (int n = 0; n < N; ++n) {
            const size_t off = (size_t(n) * C + c) * HW;
            for (int p = 0; p < HW; ++p)
              in_node->grad[off + p] += gc * is * dy[off + p];
          }
        }
      }
    }
  };
  return detail::make_result(input.shape(), std::move(out),
                             {input, gamma, beta}, std::move(backward),
                             "batchnorm2d");
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require(input.ndim() == 2, "dense: input must be [N,F], got " +
                                 shape_str(input.shape()));
  require(weight.ndim() == 2, "dense: weight must be [F,O], got " +
                                  shape_str(weight.shape()));
  const int N = input.dim(0), F = input.dim(1), O = weight.dim(1);
  require(weight.dim(0) == F, "dense: weight rows " +
                                  std::to_string(weight.dim(0)) +
                                  " != input features " + std::to_string(F));
  require(bias.ndim() == 1 && bias.dim(0) == O,
          "dense: bias must be [O=" + std::to_string(O) + "], got " +
              shape_str(bias.shape()));
  std::vector<float> out(size_t(N) * O);
  detail::gemm_ab(N, O, F, input.data().data(), weight.data().data(),
                  out.data(), false);
  const auto& bv = bias.data();
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o) out[size_t(n) * O + o] += bv[size_t(o)];

  auto in_node = input.node();
  auto w_node = weight.node();
  auto b_node = bias.node();
  auto backward = [in_node, w_node, b_node, N, F, O](TensorNode& self) {
    const float* dY = self.grad.data();
    if (b_node->requires_grad) {
      b_node->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
          b_node->grad[size_t(o)] += dY[size_t(n) * O + o];
    }
    if (w_node->requires_grad) {
      w_node->ensure_grad();
      detail::gemm_atb(F, O, N, in_node->values->data(), dY,
                       w_node->grad.data(), true);
    }
    if (in_node->requires_grad) {
      in_node->ensure_grad();
      detail::gemm_abt(N, F, O, dY, w_node->values->data(),
                       in_node->grad.data(), true);
    }
  };
  return detail::make_result({N, O}, std::move(out), {input, weight, bias},
                             std::move(backward), "dense");
}

Tensor softmax(const Tensor& logits, float temperature) {
  require(logits.ndim() == 2, "softmax: logits must be [N,C], got " +
                                  shape_str(logits.shape()));
  require(temperature > 0.0f, "softmax: temperature must be positive, got " +
                                  std::to_string(temperature));
  const int N = logits.dim(0), C = logits.dim(1);
  std::vector<float> out(size_t(N) * C);
  const auto& z = logits.data();
  for (int i = 0; i < N; ++i) {
    const float* row = z.data() + size_t(i) * C;
    float m = row[0];
    for (int j = 1; j < C; ++j) m = row[j] > m ? row[j] : m;
    float s = 0.0f;
    float* o = out.data() + size_t(i) * C;
    for (int j = 0; j < C; ++j) {
      o[j] = std::exp((row[j] - m) / temperature);
      s += o[j];
    }
    const float inv = 1.0f / s;
    for (int j = 0; j < C; ++j) o[j] *= inv;
  }
  auto z_node = logits.node();
  return detail::make_result(
      {N, C}, std::move(out), {logits},
      [z_node, N, C, temperature](TensorNode& self) {
        if (!z_node->requires_grad) return;
        z_node->ensure_grad();
        const float* p = self.values->data();
        const float* g = self.grad.data();
        const float inv_t = 1.0f / temperature;
        for (int i = 0; i < N; ++i) {
          const size_t off = size_t(i) * C;
          float dot = 0.0f;
          for (int j = 0; j < C; ++j) dot += g[off + j] * p[off + j];
          for (int j = 0; j < C; ++j)
            z_node->grad[off + j] += inv_t * p[off + j] * (g[off + j] - dot);
        }
      },
      "softmax");
}

Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels,
                     const std::vector<uint8_t>* row_mask) {
  require(probs.ndim() == 2, "cross_entropy: probs must be [N,C], got " +
                                 shape_str(probs.shape()));
  const int N = probs.dim(0), C = probs.dim(1);
  require(int(labels.size()) == N,
          "cross_entropy: " + std::to_string(labels.size()) + " labels for " +
              std::to_string(N) + " rows");
  require(!row_mask || int(row_mask->size()) == N,
          "cross_entropy: mask length mismatch");
  for (int i = 0; i < N; ++i)
    require(labels[size_t(i)] >= 0 && labels[size_t(i)] < C,
            "cross_entropy: label " + std::to_string(labels[size_t(i)]) +
                " out of range for " + std::to_string(C) + " classes");
  check_rows_normalized(probs, "cross_entropy");

  const int kept = count_kept(row_mask, N);
  if (kept == 0) return Tensor::scalar(0.0f);  // empty-mean convention

  const auto& p = probs.data();
  float loss = 0.0f;
  for (int i = 0; i < N; ++i) {
    if (row_mask && !(*row_mask)[size_t(i)]) continue;
    loss -= safe_log(p[size_t(i) * C + labels[size_t(i)]]);
  }
  loss /= float(kept);

  auto p_node = probs.node();
  auto mask = row_mask ? std::make_shared<std::vector<uint8_t>>(*row_mask)
                       : nullptr;
  auto lbl = std::make_shared<std::vector<int>>(labels);
  return detail::make_result(
      {1}, {loss}, {probs},
      [p_node, mask, lbl, N, C, kept](TensorNode& self) {
        if (!p_node->requires_grad) return;
        p_node->ensure_grad();
        const float g = self.grad[0] / float(kept);
        const float* pv = p_node->values->data();
        for (int i = 0; i < N; ++i) {
          if (mask && !(*mask)[size_t(i)]) continue;
          const size_t idx = size_t(i) * C + (*lbl)[size_t(i)];
          const float denom = pv[idx] < kLogClamp ? kLogClamp : pv[idx];
          p_node->grad[idx] -= g / denom;
        }
      },
      "cross_entropy");
}

Tensor kl_divergence(const Tensor& p, const Tensor& q,
                     const std::vector<uint8_t>* row_mask) {
  require(p.ndim() == 2 && q.ndim() == 2 && p.shape() == q.shape(),
          "kl_divergence: shape mismatch " + shape_str(p.shape()) + " vs " +
              shape_str(q.shape()));
  const int N = p.dim(0), C = p.dim(1);
  require(!row_mask || int(row_mask->size()) == N,
          "kl_divergence: mask length mismatch");
  check_nonnegative(p, "kl_divergence");
  check_nonnegative(q, "kl_divergence");
  check_rows_normalized(p, "kl_divergence");
  check_rows_normalized(q, "kl_divergence");

  const int kept = count_kept(row_mask, N);
  if (kept == 0) return Tensor::scalar(0.0f);

  const auto& pv = p.data();
  const auto& qv = q.data();
  float loss = 0.0f;
  for (int i = 0; i < N; ++i) {
    if (row_mask && !(*row_mask)[size_t(i)]) continue;
    for (int j = 0; j < C; ++j) {
      const float pij = pv[size_t(i) * C + j];
      if (pij <= 0.0f) continue;  // 0 * log 0 = 0
      loss += pij * (safe_log(pij) - safe_log(qv[size_t(i) * C + j]));
    }
  }
  loss /= float(kept);

  auto p_node = p.node();
  auto q_node = q.node();
  auto mask = row_mask ? std::make_shared<std::vector<uint8_t>>(*row_mask)
                       : nullptr;
  return detail::make_result(
      {1}, {loss}, {p, q},
      [p_node, q_node, mask, N, C, kept](TensorNode& self) {
        const float g = self.grad[0] / float(kept);
        const float* pv = p_node->values->data();
        const float* qv = q_node->values->data();
        if (q_node->requires_grad) {
          q_node->ensure_grad();
          for (int i = 0; i < N; ++i) {
            if (mask && !(*mask)[size_t(i)]) continue;
            for (int j = 0; j < C; ++j) {
              const size_t idx = size_t(i) * C + j;
              const float qc = qv[idx] < kLogClamp ? kLogClamp : qv[idx];
              q_node->grad[idx] -= g * pv[idx] / qc;
            }
          }
        }
        if (p_node->requires_grad) {
          p_node->ensure_grad();
          for (int i = 0; i < N; ++i) {
            if (mask && !(*mask)[size_t(i)]) continue;
            for (int j = 0; j < C; ++j) {
              const size_t idx = size_t(i) * C + j;
              const float pc = pv[idx] < kLogClamp ? kLogClamp : pv[idx];
              const float qc = qv[idx] < kLogClamp ? kLogClamp : qv[idx];
              p_node->grad[idx] +=
                  g * (std::log(pc) - std::log(qc) + 1.0f);
            }
          }
        }
      },
      "kl_divergence");
}

Tensor entropy(const Tensor& p) {
  require(p.ndim() == 2, "entropy: input must be [N,C], got " +
                             shape_str(p.shape()));
  check_nonnegative(p, "entropy");
  check_rows_normalized(p, "entropy");
  const int N = p.dim(0), C = p.dim(1);
  const auto& pv = p.data();
  float loss = 0.0f;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < C; ++j) {
      const float pij = pv[size_t(i) * C + j];
      if (pij <= 0.0f) continue;
      loss -= pij * safe_log(pij);
    }
  }
  loss /= float(N);
  auto p_node = p.node();
  return detail::make_result(
      {1}, {loss}, {p},
      [p_node, N, C](TensorNode& self) {
        if (!p_node->requires_grad) return;
        p_node->ensure_grad();
        const float g = self.grad[0] / float(N);
        const float* pv = p_node->values->data();
        for (size_t i = 0; i < size_t(N) * C; ++i) {
          const float pc = pv[i] < kLogClamp ? kLogClamp : pv[i];
          p_node->grad[i] -= g * (std::log(pc) + 1.0f);
        }
      },
      "entropy");
}

std::vector<int> argmax_rows(const Tensor& t) {
  require(t.ndim() == 2, "argmax_rows: input must be [N,C]");
  const int N = t.dim(0), C = t.dim(1);
  std::vector<int> out(size_t(N));
  const auto& v = t.data();
  for (int i = 0; i < N; ++i) {
    int best = 0;
    float bv = v[size_t(i) * C];
    for (int j = 1; j < C; ++j)
      if (v[size_t(i) * C + j] > bv) {
        bv = v[size_t(i) * C + j];
        best = j;
      }
    out[size_t(i)] = best;
  }
  return out;
}

std::vector<float> rowmax_values(const Tensor& t) {
  require(t.ndim() == 2, "rowmax_values: input must be [N,C]");
  const int N = t.dim(0), C = t.dim(1);
  std::vector<float> out(size_t(N));
  const auto& v = t.data();
  for (int i = 0; i < N; ++i) {
    float bv = v[size_t(i) * C];
    for (int j = 1; j < C; ++j) bv = v[size_t(i) * C + j] > bv ? v[size_t(i) * C + j] : bv;
    out[size_t(i)] = bv;
  }
  return out;
}

}  // namespace ssllab
