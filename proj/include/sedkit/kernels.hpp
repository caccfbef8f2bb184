// Copyright 2026 The sedkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

// Dense numeric kernels behind the tensor ops. Each kernel exists twice:
// a plain serial loop nest (the reference) and an OpenMP variant that
// parallelizes over independent output elements while keeping every
// per-element accumulation order identical to the serial code. The two
// therefore agree bit-for-bit, which the kernel tests assert and the
// bench target times.
namespace sedkit::kernels {

// Process-wide backend switch. Defaults to the OpenMP variants; tiny
// problems fall back to the serial loops regardless (dispatch threshold).
bool& parallel_enabled();

// c[m x n] = a[m x k] * b[k x n], row-major.
template <class T>
void matmul_serial(const T* a, const T* b, T* c, int m, int k, int n);
template <class T>
void matmul_omp(const T* a, const T* b, T* c, int m, int k, int n);
template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);

// Cross-correlation, stride 1, zero padding `pad` on both spatial axes.
// x[B,Cin,H,W], w[Cout,Cin,K,K], bias[Cout] -> y[B,Cout,H,W].
template <class T>
void conv2d_forward_serial(const T* x, const T* w, const T* bias, T* y,
                           int B, int Cin, int H, int W, int Cout, int K, int pad);
template <class T>
void conv2d_forward_omp(const T* x, const T* w, const T* bias, T* y,
                        int B, int Cin, int H, int W, int Cout, int K, int pad);
template <class T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y,
                    int B, int Cin, int H, int W, int Cout, int K, int pad);

// Gradient w.r.t. x, gather form: each input cell sums its contributions.
template <class T>
void conv2d_backward_input_serial(const T* gy, const T* w, T* gx,
                                  int B, int Cin, int H, int W, int Cout, int K, int pad);
template <class T>
void conv2d_backward_input_omp(const T* gy, const T* w, T* gx,
                               int B, int Cin, int H, int W, int Cout, int K, int pad);
template <class T>
void conv2d_backward_input(const T* gy, const T* w, T* gx,
                           int B, int Cin, int H, int W, int Cout, int K, int pad);

// Gradients w.r.t. w and bias.
template <class T>
void conv2d_backward_filter_serial(const T* gy, const T* x, T* gw, T* gbias,
                                   int B, int Cin, int H, int W, int Cout, int K, int pad);
template <class T>
void conv2d_backward_filter_omp(const T* gy, const T* x, T* gw, T* gbias,
                                int B, int Cin, int H, int W, int Cout, int K, int pad);
template <class T>
void conv2d_backward_filter(const T* gy, const T* x, T* gw, T* gbias,
                            int B, int Cin, int H, int W, int Cout, int K, int pad);

// Non-overlapping max pooling, stride == kernel. Ties resolve to the
// lowest flat index. argmax holds flat indices into x.
template <class T>
void maxpool_forward_serial(const T* x, T* y, int64_t* argmax,
                            int B, int C, int H, int W, int kh, int kw);
template <class T>
void maxpool_forward_omp(const T* x, T* y, int64_t* argmax,
                         int B, int C, int H, int W, int kh, int kw);
template <class T>
void maxpool_forward(const T* x, T* y, int64_t* argmax,
                     int B, int C, int H, int W, int kh, int kw);

// Scatter gy back to the recorded argmax positions; gx must be zeroed.
// Windows are disjoint, so the scatter is race-free.
template <class T>
void maxpool_backward_serial(const T* gy, const int64_t* argmax, T* gx, int64_t n_out);
template <class T>
void maxpool_backward_omp(const T* gy, const int64_t* argmax, T* gx, int64_t n_out);
template <class T>
void maxpool_backward(const T* gy, const int64_t* argmax, T* gx, int64_t n_out);

}  // namespace sedkit::kernels
