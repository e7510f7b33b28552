#include "gemm.hpp"

#include <cstring>

namespace ssllab::detail {

namespace {
constexpr int kMr = 4;   // rows per register tile
constexpr int kNr = 64;  // columns per register tile (16 floats x 4)
}  // namespace

// Register-tiled kernel: a kMr x kNr tile of C is held in locals across the
// whole k loop. The j loops have compile-time trip counts so the compiler
// vectorizes them.
void gemm_ab(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(float) * size_t(M) * size_t(N));

  int i = 0;
  for (; i + kMr <= M; i += kMr) {
    int j = 0;
    for (; j + kNr <= N; j += kNr) {
      float acc0[kNr], acc1[kNr], acc2[kNr], acc3[kNr];
      std::memcpy(acc0, C + size_t(i + 0) * N + j, sizeof(acc0));
      std::memcpy(acc1, C + size_t(i + 1) * N + j, sizeof(acc1));
      std::memcpy(acc2, C + size_t(i + 2) * N + j, sizeof(acc2));
      std::memcpy(acc3, C + size_t(i + 3) * N + j, sizeof(acc3));
      const float* a0 = A + size_t(i + 0) * K;
      const float* a1 = A + size_t(i + 1) * K;
      const float* a2 = A + size_t(i + 2) * K;
      const float* a3 = A + size_t(i + 3) * K;
      for (int k = 0; k < K; ++k) {
        const float* b = B + size_t(k) * N + j;
        const float v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
        for (int jj = 0; jj < kNr; ++jj) {
          const float bv = b[jj];
          acc0[jj] += v0 * bv;
          acc1[jj] += v1 * bv;
          acc2[jj] += v2 * bv;
          acc3[jj] += v3 * bv;
        }
      }
      std::memcpy(C + size_t(i + 0) * N + j, acc0, sizeof(acc0));
      std::memcpy(C + size_t(i + 1) * N + j, acc1, sizeof(acc1));
      std::memcpy(C + size_t(i + 2) * N + j, acc2, sizeof(acc2));
      std::memcpy(C + size_t(i + 3) * N + j, acc3, sizeof(acc3));
    }
    // column remainder
    for (; j < N; ++j) {
      for (int r = 0; r < kMr; ++r) {
        const float* a = A + size_t(i + r) * K;
        float acc = C[size_t(i + r) * N + j];
        for (int k = 0; k < K; ++k) acc += a[k] * B[size_t(k) * N + j];
        C[size_t(i + r) * N + j] = acc;
      }
    }
  }
  // row remainder
  for (; i < M; ++i) {
    const float* a = A + size_t(i) * K;
    float* c = C + size_t(i) * N;
    for (int k = 0; k < K; ++k) {
      const float v = a[k];
      const float* b = B + size_t(k) * N;
      for (int j = 0; j < N; ++j) c[j] += v * b[j];
    }
  }
}

// Dot-product kernel over the shared (contiguous) k dimension. A 2x4 tile of
// C is computed per pass with vector-width partial sums.
void gemm_abt(int M, int N, int K, const float* A, const float* B, float* C,
              bool accumulate) {
  constexpr int kVec = 16;
  constexpr int kTi = 2, kTj = 4;

  for (int i0 = 0; i0 < M; i0 += kTi) {
    const int ti = (M - i0 < kTi) ? (M - i0) : kTi;
    for (int j0 = 0; j0 < N; j0 += kTj) {
      const int tj = (N - j0 < kTj) ? (N - j0) : kTj;
      float part[kTi][kTj][kVec] = {};
      int k = 0;
      for (; k + kVec <= K; k += kVec) {
        for (int r = 0; r < ti; ++r) {
          const float* a = A + size_t(i0 + r) * K + k;
          for (int c = 0; c < tj; ++c) {
            const float* b = B + size_t(j0 + c) * K + k;
            for (int v = 0; v < kVec; ++v) part[r][c][v] += a[v] * b[v];
          }
        }
      }
      for (int r = 0; r < ti; ++r) {
        for (int c = 0; c < tj; ++c) {
          float sum = 0.0f;
          for (int v = 0; v < kVec; ++v) sum += part[r][c][v];
          const float* a = A + size_t(i0 + r) * K;
          const float* b = B + size_t(j0 + c) * K;
          for (int kk = k; kk < K; ++kk) sum += a[kk] * b[kk];
          float* cptr = C + size_t(i0 + r) * N + (j0 + c);
          *cptr = accumulate ? (*cptr + sum) : sum;
        }
      }
    }
  }
}

void gemm_atb(int M, int N, int K, const float* A, const float* B, float* C,
              bool accumulate) {
  if (!accumulate) std::memset(C, 0, sizeof(float) * size_t(M) * size_t(N));
  for (int k = 0; k < K; ++k) {
    const float* a = A + size_t(k) * M;
    const float* b = B + size_t(k) * N;
    for (int i = 0; i < M; ++i) {
      const float v = a[i];
      float* c = C + size_t(i) * N;
      for (int j = 0; j < N; ++j) c[j] += v * b[j];
    }
  }
}

}  // namespace ssllab::detail
