#include "lanecast/kernels.hpp"

#include "lanecast/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lanecast::kern {

namespace {

// Row workers are noinline so the serial and OpenMP drivers run the exact
// same machine code and stay bit-identical.

[[gnu::noinline]] void mm_nn_row(double* crow, const double* arow,
                                 const double* b, int k, int n, bool acc) {
  if (!acc) {
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
  }
  for (int kk = 0; kk < k; ++kk) {
    const double av = arow[kk];
    const double* brow = b + static_cast<long>(kk) * n;
    for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

[[gnu::noinline]] void mm_bt_row(double* crow, const double* arow,
                                 const double* b, int k, int n, bool acc) {
  for (int j = 0; j < n; ++j) {
    const double* brow = b + static_cast<long>(j) * k;
    double s = 0.0;
    for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
    crow[j] = acc ? crow[j] + s : s;
  }
}

// One output row of C[k x n] += A^T * B: c[i][:] += sum_m a[m][i] * b[m][:].
[[gnu::noinline]] void mm_tn_row(double* crow, const double* a,
                                 const double* b, int m, int k, int n, int i) {
  for (int mm = 0; mm < m; ++mm) {
    const double av = a[static_cast<long>(mm) * k + i];
    const double* brow = b + static_cast<long>(mm) * n;
    for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

[[gnu::noinline]] void conv_row(double* orow, const double* x, const double* w,
                                const double* bias, int t, int cin, int cout,
                                int ksize, int tt) {
  const int off = ksize / 2;
  for (int co = 0; co < cout; ++co) orow[co] = bias ? bias[co] : 0.0;
  for (int dk = 0; dk < ksize; ++dk) {
    const int ts = tt + dk - off;
    if (ts < 0 || ts >= t) continue;
    const double* xrow = x + static_cast<long>(ts) * cin;
    const double* wblk = w + static_cast<long>(dk) * cin * cout;
    for (int ci = 0; ci < cin; ++ci) {
      const double xv = xrow[ci];
      const double* wrow = wblk + static_cast<long>(ci) * cout;
      for (int co = 0; co < cout; ++co) orow[co] += xv * wrow[co];
    }
  }
}

[[gnu::noinline]] void conv_grad_x_row(double* dxrow, const double* dout,
                                       const double* w, int t, int cin,
                                       int cout, int ksize, int ts) {
  const int off = ksize / 2;
  for (int dk = 0; dk < ksize; ++dk) {
    const int tt = ts - dk + off;
    if (tt < 0 || tt >= t) continue;
    const double* drow = dout + static_cast<long>(tt) * cout;
    const double* wblk = w + static_cast<long>(dk) * cin * cout;
    for (int ci = 0; ci < cin; ++ci) {
      const double* wrow = wblk + static_cast<long>(ci) * cout;
      double s = 0.0;
      for (int co = 0; co < cout; ++co) s += drow[co] * wrow[co];
      dxrow[ci] += s;
    }
  }
}

constexpr long kParallelGrain = 1 << 18;  // flops below this stay serial

bool go_parallel(long work, int rows) {
#ifdef _OPENMP
  return rows > 1 && work >= kParallelGrain && effective_threads() > 1;
#else
  (void)work;
  (void)rows;
  return false;
#endif
}

}  // namespace

void matmul_nn(double* c, const double* a, const double* b, int m, int k,
               int n, bool acc) {
  const long work = static_cast<long>(m) * k * n;
  if (go_parallel(work, m)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (int i = 0; i < m; ++i)
      mm_nn_row(c + static_cast<long>(i) * n, a + static_cast<long>(i) * k, b,
                k, n, acc);
  } else {
    for (int i = 0; i < m; ++i)
      mm_nn_row(c + static_cast<long>(i) * n, a + static_cast<long>(i) * k, b,
                k, n, acc);
  }
}

void matmul_bt(double* c, const double* a, const double* b, int m, int k,
               int n, bool acc) {
  const long work = static_cast<long>(m) * k * n;
  if (go_parallel(work, m)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (int i = 0; i < m; ++i)
      mm_bt_row(c + static_cast<long>(i) * n, a + static_cast<long>(i) * k, b,
                k, n, acc);
  } else {
    for (int i = 0; i < m; ++i)
      mm_bt_row(c + static_cast<long>(i) * n, a + static_cast<long>(i) * k, b,
                k, n, acc);
  }
}

void matmul_tn_acc(double* c, const double* a, const double* b, int m, int k,
                   int n) {
  const long work = static_cast<long>(m) * k * n;
  if (go_parallel(work, k)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (int i = 0; i < k; ++i)
      mm_tn_row(c + static_cast<long>(i) * n, a, b, m, k, n, i);
  } else {
    for (int i = 0; i < k; ++i)
      mm_tn_row(c + static_cast<long>(i) * n, a, b, m, k, n, i);
  }
}

void conv1d_same(double* out, const double* x, const double* w,
                 const double* bias, int t, int cin, int cout, int ksize) {
  const long work = static_cast<long>(t) * cin * cout * ksize;
  if (go_parallel(work, t)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (int tt = 0; tt < t; ++tt)
      conv_row(out + static_cast<long>(tt) * cout, x, w, bias, t, cin, cout,
               ksize, tt);
  } else {
    for (int tt = 0; tt < t; ++tt)
      conv_row(out + static_cast<long>(tt) * cout, x, w, bias, t, cin, cout,
               ksize, tt);
  }
}

void conv1d_same_grad_x(double* dx, const double* dout, const double* w, int t,
                        int cin, int cout, int ksize) {
  const long work = static_cast<long>(t) * cin * cout * ksize;
  if (go_parallel(work, t)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(effective_threads())
#endif
    for (int ts = 0; ts < t; ++ts)
      conv_grad_x_row(dx + static_cast<long>(ts) * cin, dout, w, t, cin, cout,
                      ksize, ts);
  } else {
    for (int ts = 0; ts < t; ++ts)
      conv_grad_x_row(dx + static_cast<long>(ts) * cin, dout, w, t, cin, cout,
                      ksize, ts);
  }
}

void conv1d_same_grad_w(double* dw, const double* dout, const double* x, int t,
                        int cin, int cout, int ksize) {
  const int off = ksize / 2;
  for (int dk = 0; dk < ksize; ++dk) {
    double* wblk = dw + static_cast<long>(dk) * cin * cout;
    for (int tt = 0; tt < t; ++tt) {
      const int ts = tt + dk - off;
      if (ts < 0 || ts >= t) continue;
      const double* xrow = x + static_cast<long>(ts) * cin;
      const double* drow = dout + static_cast<long>(tt) * cout;
      for (int ci = 0; ci < cin; ++ci) {
        const double xv = xrow[ci];
        double* wrow = wblk + static_cast<long>(ci) * cout;
        for (int co = 0; co < cout; ++co) wrow[co] += xv * drow[co];
      }
    }
  }
}

void conv1d_same_grad_b(double* db, const double* dout, int t, int cout) {
  for (int tt = 0; tt < t; ++tt) {
    const double* drow = dout + static_cast<long>(tt) * cout;
    for (int co = 0; co < cout; ++co) db[co] += drow[co];
  }
}

}  // namespace lanecast::kern
