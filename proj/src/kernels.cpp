#include "tcda/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tcda::kernels {

namespace {
bool g_parallel = true;
std::size_t g_grain = 1 << 15;

inline bool go_parallel(std::size_t flops) {
#ifdef _OPENMP
  return g_parallel && flops >= g_grain && !omp_in_parallel();
#else
  (void)flops;
  return false;
#endif
}
}  // namespace

void set_parallel(bool on) { g_parallel = on; }
bool parallel_enabled() { return g_parallel; }
void set_parallel_grain(std::size_t flops) { g_grain = flops; }

// ------------------------------------------------------------------ mm_nn --

void mm_nn_serial(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + std::size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void mm_nn_omp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + std::size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void mm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (go_parallel(std::size_t(m) * k * n))
    mm_nn_omp(a, b, c, m, k, n);
  else
    mm_nn_serial(a, b, c, m, k, n);
}

// ------------------------------------------------------------------ mm_nt --

void mm_nt_serial(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + std::size_t(i) * k;
    double* ci = c + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + std::size_t(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void mm_nt_omp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a + std::size_t(i) * k;
    double* ci = c + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + std::size_t(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void mm_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  if (go_parallel(std::size_t(m) * k * n))
    mm_nt_omp(a, b, c, m, k, n);
  else
    mm_nt_serial(a, b, c, m, k, n);
}

// ------------------------------------------------------------------ mm_tn --

void mm_tn_serial(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double api = a[std::size_t(p) * m + i];
      const double* bp = b + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void mm_tn_omp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + std::size_t(i) * n;
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < k; ++p) {
      const double api = a[std::size_t(p) * m + i];
      const double* bp = b + std::size_t(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void mm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  if (go_parallel(std::size_t(m) * k * n))
    mm_tn_omp(a, b, c, m, k, n);
  else
    mm_tn_serial(a, b, c, m, k, n);
}

// ----------------------------------------------------------------- rotary --

namespace {
inline void rotate_row(const double* xi, double* oi, int cols, double p,
                       double theta, int dir) {
  const int pairs = cols / 2;
  for (int q = 0; q < pairs; ++q) {
    const double freq = std::pow(theta, -2.0 * q / cols);
    const double ang = p * freq;
    const double c = std::cos(ang);
    const double s = dir >= 0 ? std::sin(ang) : -std::sin(ang);
    const double x0 = xi[2 * q], x1 = xi[2 * q + 1];
    oi[2 * q] = x0 * c - x1 * s;
    oi[2 * q + 1] = x0 * s + x1 * c;
  }
}
}  // namespace

void rotary_rows_serial(const double* x, double* out, int rows, int cols,
                        const double* pos, double theta, int dir) {
  for (int i = 0; i < rows; ++i)
    rotate_row(x + std::size_t(i) * cols, out + std::size_t(i) * cols, cols,
               pos[i], theta, dir);
}

void rotary_rows_omp(const double* x, double* out, int rows, int cols,
                     const double* pos, double theta, int dir) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i)
    rotate_row(x + std::size_t(i) * cols, out + std::size_t(i) * cols, cols,
               pos[i], theta, dir);
}

void rotary_rows(const double* x, double* out, int rows, int cols,
                 const double* pos, double theta, int dir) {
  if (go_parallel(std::size_t(rows) * cols * 8))
    rotary_rows_omp(x, out, rows, cols, pos, theta, dir);
  else
    rotary_rows_serial(x, out, rows, cols, pos, theta, dir);
}

// ---------------------------------------------------------------- softmax --

namespace {
inline void softmax_row(const double* xi, double* oi, int cols) {
  double mx = xi[0];
  for (int j = 1; j < cols; ++j)
    if (xi[j] > mx) mx = xi[j];
  double sum = 0.0;
  for (int j = 0; j < cols; ++j) {
    oi[j] = std::exp(xi[j] - mx);
    sum += oi[j];
  }
  const double inv = 1.0 / sum;
  for (int j = 0; j < cols; ++j) oi[j] *= inv;
}
}  // namespace

void softmax_rows_serial(const double* x, double* out, int rows, int cols) {
  for (int i = 0; i < rows; ++i)
    softmax_row(x + std::size_t(i) * cols, out + std::size_t(i) * cols, cols);
}

void softmax_rows_omp(const double* x, double* out, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i)
    softmax_row(x + std::size_t(i) * cols, out + std::size_t(i) * cols, cols);
}

void softmax_rows(const double* x, double* out, int rows, int cols) {
  if (go_parallel(std::size_t(rows) * cols * 8))
    softmax_rows_omp(x, out, rows, cols);
  else
    softmax_rows_serial(x, out, rows, cols);
}

// -------------------------------------------------------------- row stats --

void row_stats_serial(const double* x, int rows, int cols, double* mean,
                      double* var) {
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + std::size_t(i) * cols;
    double m = 0.0;
    for (int j = 0; j < cols; ++j) m += xi[j];
    m /= cols;
    double v = 0.0;
    for (int j = 0; j < cols; ++j) v += (xi[j] - m) * (xi[j] - m);
    mean[i] = m;
    var[i] = v / cols;
  }
}

void row_stats_omp(const double* x, int rows, int cols, double* mean,
                   double* var) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + std::size_t(i) * cols;
    double m = 0.0;
    for (int j = 0; j < cols; ++j) m += xi[j];
    m /= cols;
    double v = 0.0;
    for (int j = 0; j < cols; ++j) v += (xi[j] - m) * (xi[j] - m);
    mean[i] = m;
    var[i] = v / cols;
  }
}

void row_stats(const double* x, int rows, int cols, double* mean, double* var) {
  if (go_parallel(std::size_t(rows) * cols * 4))
    row_stats_omp(x, rows, cols, mean, var);
  else
    row_stats_serial(x, rows, cols, mean, var);
}

}  // namespace tcda::kernels
