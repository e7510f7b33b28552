#pragma once

namespace ssllab::detail {

// Small single-precision matrix kernels used by conv2d and dense. All
// matrices are dense row-major with leading dimension equal to the row
// width. Accumulation order per output element is fixed (ascending k), so
// results are bit-reproducible run to run.

// C[M,N] = (accumulate ? C : 0) + A[M,K] * B[K,N]
void gemm_ab(int M, int N, int K, const float* A, const float* B, float* C,
             bool accumulate);

// C[M,N] = (accumulate ? C : 0) + A[M,K] * B[N,K]^T
void gemm_abt(int M, int N, int K, const float* A, const float* B, float* C,
              bool accumulate);

// C[M,N] = (accumulate ? C : 0) + A[K,M]^T * B[K,N]
void gemm_atb(int M, int N, int K, const float* A, const float* B, float* C,
              bool accumulate);

}  // namespace ssllab::detail
