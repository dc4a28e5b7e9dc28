// Compares the serial reference kernels against the OpenMP variants: wall
// time per call and bit-equality of the outputs.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "tcda/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace tcda;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<double> random_vec(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

template <typename F>
double time_call(F&& f, int reps) {
  f();  // warm up
  const double t0 = now_ms();
  for (int r = 0; r < reps; ++r) f();
  return (now_ms() - t0) / reps;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP\n");
#endif
  std::printf("%-28s %10s %10s %8s %6s\n", "kernel", "serial_ms", "omp_ms",
              "speedup", "bits");

  for (int n : {64, 128, 256, 512}) {
    auto a = random_vec(size_t(n) * n, 1);
    auto b = random_vec(size_t(n) * n, 2);
    std::vector<double> c_s(size_t(n) * n), c_p(size_t(n) * n);
    const int reps = n <= 128 ? 20 : 5;

    const double ts = time_call(
        [&] { kernels::mm_nn_serial(a.data(), b.data(), c_s.data(), n, n, n); }, reps);
    const double tp = time_call(
        [&] { kernels::mm_nn_omp(a.data(), b.data(), c_p.data(), n, n, n); }, reps);
    std::printf("mm_nn %4dx%-4d %15.3f %10.3f %7.2fx %6s\n", n, n, ts, tp, ts / tp,
                bits_equal(c_s, c_p) ? "equal" : "DIFF");

    const double ts2 = time_call(
        [&] { kernels::mm_nt_serial(a.data(), b.data(), c_s.data(), n, n, n); }, reps);
    const double tp2 = time_call(
        [&] { kernels::mm_nt_omp(a.data(), b.data(), c_p.data(), n, n, n); }, reps);
    std::printf("mm_nt %4dx%-4d %15.3f %10.3f %7.2fx %6s\n", n, n, ts2, tp2,
                ts2 / tp2, bits_equal(c_s, c_p) ? "equal" : "DIFF");
  }

  {
    const int rows = 4096, cols = 64;
    auto x = random_vec(size_t(rows) * cols, 3);
    auto pos = random_vec(size_t(rows), 4);
    std::vector<double> o_s(x.size()), o_p(x.size());
    const double ts = time_call(
        [&] {
          kernels::rotary_rows_serial(x.data(), o_s.data(), rows, cols, pos.data(),
                                      10000.0, +1);
        },
        10);
    const double tp = time_call(
        [&] {
          kernels::rotary_rows_omp(x.data(), o_p.data(), rows, cols, pos.data(),
                                   10000.0, +1);
        },
        10);
    std::printf("rotary_rows %d x %-8d %8.3f %10.3f %7.2fx %6s\n", rows, cols, ts,
                tp, ts / tp, bits_equal(o_s, o_p) ? "equal" : "DIFF");
  }

  {
    const int rows = 2048, cols = 256;
    auto x = random_vec(size_t(rows) * cols, 5);
    std::vector<double> o_s(x.size()), o_p(x.size());
    const double ts = time_call(
        [&] { kernels::softmax_rows_serial(x.data(), o_s.data(), rows, cols); }, 10);
    const double tp = time_call(
        [&] { kernels::softmax_rows_omp(x.data(), o_p.data(), rows, cols); }, 10);
    std::printf("softmax_rows %d x %-6d %9.3f %10.3f %7.2fx %6s\n", rows, cols, ts,
                tp, ts / tp, bits_equal(o_s, o_p) ? "equal" : "DIFF");
  }
  return 0;
}
