#pragma once

// Dense numeric kernels behind the autodiff ops. Every kernel has a serial
// reference path and an OpenMP path over independent output rows; both call
// the same per-row worker, so outputs are bit-identical for any thread count.
// Matrices are row-major.

namespace lanecast::kern {

// C[m x n] = A[m x k] * B[k x n]; accumulates into C when acc is true.
void matmul_nn(double* c, const double* a, const double* b, int m, int k,
               int n, bool acc = false);

// C[m x n] = A[m x k] * B[n x k]^T.
void matmul_bt(double* c, const double* a, const double* b, int m, int k,
               int n, bool acc = false);

// C[k x n] += A[m x k]^T * B[m x n].
void matmul_tn_acc(double* c, const double* a, const double* b, int m, int k,
                   int n);

// 1D convolution over the row axis with zero padding ("same" output length).
// x is [t x cin], w is [(ksize*cin) x cout] with row index dk*cin+ci,
// bias is [cout] (may be null), out is [t x cout].
void conv1d_same(double* out, const double* x, const double* w,
                 const double* bias, int t, int cin, int cout, int ksize);

// Gradients of conv1d_same; all accumulate into their outputs.
void conv1d_same_grad_x(double* dx, const double* dout, const double* w, int t,
                        int cin, int cout, int ksize);
void conv1d_same_grad_w(double* dw, const double* dout, const double* x, int t,
                        int cin, int cout, int ksize);
void conv1d_same_grad_b(double* db, const double* dout, int t, int cout);

}  // namespace lanecast::kern
