// Numeric inner loops. Every kernel has a serial reference and an OpenMP
// variant; the dispatching entry point picks one at runtime. Parallel and
// serial paths compute each output element with the same accumulation order,
// so results are bit-identical regardless of thread count.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tcda::kernels {

// Runtime switch, mostly for tests and the benchmark. Defaults to on.
void set_parallel(bool on);
bool parallel_enabled();
// Work threshold (in fused multiply-adds) below which dispatch stays serial.
void set_parallel_grain(std::size_t flops);

// c[m x n] = a[m x k] * b[k x n]
void mm_nn_serial(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nn_omp(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nn(const double* a, const double* b, double* c, int m, int k, int n);

// c[m x n] = a[m x k] * b[n x k]^T
void mm_nt_serial(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nt_omp(const double* a, const double* b, double* c, int m, int k, int n);
void mm_nt(const double* a, const double* b, double* c, int m, int k, int n);

// c[m x n] = a[k x m]^T * b[k x n]
void mm_tn_serial(const double* a, const double* b, double* c, int m, int k, int n);
void mm_tn_omp(const double* a, const double* b, double* c, int m, int k, int n);
void mm_tn(const double* a, const double* b, double* c, int m, int k, int n);

// Per-row rotary rotation: row i of x (width cols, cols even) rotated by
// angle pos[i] * theta^(-2k/cols) on coordinate pair k. dir = +1 forward,
// -1 applies the transposed (inverse) rotation, used by the backward pass.
void rotary_rows_serial(const double* x, double* out, int rows, int cols,
                        const double* pos, double theta, int dir);
void rotary_rows_omp(const double* x, double* out, int rows, int cols,
                     const double* pos, double theta, int dir);
void rotary_rows(const double* x, double* out, int rows, int cols,
                 const double* pos, double theta, int dir);

// Row-wise softmax with max-shift stabilisation; x and out may alias.
void softmax_rows_serial(const double* x, double* out, int rows, int cols);
void softmax_rows_omp(const double* x, double* out, int rows, int cols);
void softmax_rows(const double* x, double* out, int rows, int cols);

// Per-row mean/variance (population), used by layer norm.
void row_stats_serial(const double* x, int rows, int cols, double* mean, double* var);
void row_stats_omp(const double* x, int rows, int cols, double* mean, double* var);
void row_stats(const double* x, int rows, int cols, double* mean, double* var);

}  // namespace tcda::kernels
