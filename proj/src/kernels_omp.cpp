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

// OpenMP kernels. Work is split over independent output elements only;
// every per-element accumulation runs in the same order as the serial
// reference, so results are bit-identical for any thread count.

#include "sedkit/kernels.hpp"

#include <algorithm>

namespace sedkit::kernels {

bool& parallel_enabled() {
  static bool enabled = true;
  return enabled;
}

namespace {
// Below this many output elements the OpenMP fork costs more than it saves.
constexpr int64_t kParallelThreshold = 1 << 14;

inline bool go_parallel(int64_t out_elems) {
  return parallel_enabled() && out_elems >= kParallelThreshold;
}
}  // namespace

template <class T>
void matmul_omp(const T* a, const T* b, T* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<int64_t>(i) * n;
    std::fill(crow, crow + n, T(0));
    for (int p = 0; p < k; ++p) {
      const T aip = a[static_cast<int64_t>(i) * k + p];
      const T* brow = b + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <class T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
  if (go_parallel(static_cast<int64_t>(m) * n))
    matmul_omp(a, b, c, m, k, n);
  else
    matmul_serial(a, b, c, m, k, n);
}

template <class T>
void conv2d_forward_omp(const T* x, const T* w, const T* bias, T* y,
                        int B, int Cin, int H, int W, int Cout, int K, int pad) {
  const int64_t x_c = static_cast<int64_t>(H) * W;
  const int64_t x_b = static_cast<int64_t>(Cin) * x_c;
  const int64_t y_c = static_cast<int64_t>(H) * W;
  const int64_t y_b = static_cast<int64_t>(Cout) * y_c;
  const int64_t w_co = static_cast<int64_t>(Cin) * K * K;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Cout; ++co) {
      T* yplane = y + b * y_b + co * y_c;
      for (int ot = 0; ot < H; ++ot) {
        T* yrow = yplane + static_cast<int64_t>(ot) * W;
        std::fill(yrow, yrow + W, bias[co]);
        for (int ci = 0; ci < Cin; ++ci) {
          const T* xplane = x + b * x_b + ci * x_c;
          for (int u = 0; u < K; ++u) {
            const int it = ot + u - pad;
            if (it < 0 || it >= H) continue;
            const T* xrow = xplane + static_cast<int64_t>(it) * W;
            const T* wrow = w + co * w_co + (static_cast<int64_t>(ci) * K + u) * K;
            for (int v = 0; v < K; ++v) {
              const T wv = wrow[v];
              const int f_lo = std::max(0, pad - v);
              const int f_hi = std::min(W, W + pad - v);
              for (int f = f_lo; f < f_hi; ++f) yrow[f] += wv * xrow[f + v - pad];
            }
          }
        }
      }
    }
  }
}

template <class T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y,
                    int B, int Cin, int H, int W, int Cout, int K, int pad) {
  const int64_t out = static_cast<int64_t>(B) * Cout * H * W;
  if (go_parallel(out))
    conv2d_forward_omp(x, w, bias, y, B, Cin, H, W, Cout, K, pad);
  else
    conv2d_forward_serial(x, w, bias, y, B, Cin, H, W, Cout, K, pad);
}

template <class T>
void conv2d_backward_input_omp(const T* gy, const T* w, T* gx,
                               int B, int Cin, int H, int W, int Cout, int K, int pad) {
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t gy_b = static_cast<int64_t>(Cout) * plane;
  const int64_t gx_b = static_cast<int64_t>(Cin) * plane;
  const int64_t w_co = static_cast<int64_t>(Cin) * K * K;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int ci = 0; ci < Cin; ++ci) {
      T* gxplane = gx + b * gx_b + ci * plane;
      for (int it = 0; it < H; ++it) {
        T* gxrow = gxplane + static_cast<int64_t>(it) * W;
        std::fill(gxrow, gxrow + W, T(0));
        for (int co = 0; co < Cout; ++co) {
          const T* gyplane = gy + b * gy_b + co * plane;
          const T* wbase = w + co * w_co + static_cast<int64_t>(ci) * K * K;
          for (int u = 0; u < K; ++u) {
            const int ot = it + pad - u;
            if (ot < 0 || ot >= H) continue;
            const T* gyrow = gyplane + static_cast<int64_t>(ot) * W;
            const T* wrow = wbase + static_cast<int64_t>(u) * K;
            for (int v = 0; v < K; ++v) {
              const T wv = wrow[v];
              const int f_lo = std::max(0, v - pad);
              const int f_hi = std::min(W, W + v - pad);
              for (int f = f_lo; f < f_hi; ++f) gxrow[f] += wv * gyrow[f + pad - v];
            }
          }
        }
      }
    }
  }
}

template <class T>
void conv2d_backward_input(const T* gy, const T* w, T* gx,
                           int B, int Cin, int H, int W, int Cout, int K, int pad) {
  const int64_t out = static_cast<int64_t>(B) * Cin * H * W;
  if (go_parallel(out))
    conv2d_backward_input_omp(gy, w, gx, B, Cin, H, W, Cout, K, pad);
  else
    conv2d_backward_input_serial(gy, w, gx, B, Cin, H, W, Cout, K, pad);
}

template <class T>
void conv2d_backward_filter_omp(const T* gy, const T* x, T* gw, T* gbias,
                                int B, int Cin, int H, int W, int Cout, int K, int pad) {
  const int64_t plane = static_cast<int64_t>(H) * W;
  const int64_t gy_b = static_cast<int64_t>(Cout) * plane;
  const int64_t x_b = static_cast<int64_t>(Cin) * plane;
  const int64_t w_co = static_cast<int64_t>(Cin) * K * K;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < Cout; ++co) {
    T bsum = T(0);
    for (int b = 0; b < B; ++b) {
      const T* gyplane = gy + b * gy_b + co * plane;
      for (int64_t i = 0; i < plane; ++i) bsum += gyplane[i];
    }
    gbias[co] = bsum;
    for (int ci = 0; ci < Cin; ++ci) {
      for (int u = 0; u < K; ++u) {
        for (int v = 0; v < K; ++v) {
          T acc = T(0);
          for (int b = 0; b < B; ++b) {
            const T* gyplane = gy + b * gy_b + co * plane;
            const T* xplane = x + b * x_b + ci * plane;
            for (int ot = 0; ot < H; ++ot) {
              const int it = ot + u - pad;
              if (it < 0 || it >= H) continue;
              const T* gyrow = gyplane + static_cast<int64_t>(ot) * W;
              const T* xrow = xplane + static_cast<int64_t>(it) * W;
              const int f_lo = std::max(0, pad - v);
              const int f_hi = std::min(W, W + pad - v);
              for (int f = f_lo; f < f_hi; ++f) acc += gyrow[f] * xrow[f + v - pad];
            }
          }
          gw[co * w_co + (static_cast<int64_t>(ci) * K + u) * K + v] = acc;
        }
      }
    }
  }
}

template <class T>
void conv2d_backward_filter(const T* gy, const T* x, T* gw, T* gbias,
                            int B, int Cin, int H, int W, int Cout, int K, int pad) {
  const int64_t work = static_cast<int64_t>(B) * Cout * Cin * H * W;
  if (go_parallel(work))
    conv2d_backward_filter_omp(gy, x, gw, gbias, B, Cin, H, W, Cout, K, pad);
  else
    conv2d_backward_filter_serial(gy, x, gw, gbias, B, Cin, H, W, Cout, K, pad);
}

template <class T>
void maxpool_forward_omp(const T* x, T* y, int64_t* argmax,
                         int B, int C, int H, int W, int kh, int kw) {
  const int OH = H / kh, OW = W / kw;
  const int64_t xplane = static_cast<int64_t>(H) * W;
  const int64_t yplane = static_cast<int64_t>(OH) * OW;
#pragma omp parallel for schedule(static)
  for (int bc = 0; bc < B * C; ++bc) {
    const T* xp = x + bc * xplane;
    T* yp = y + bc * yplane;
    int64_t* ap = argmax + bc * yplane;
    for (int ot = 0; ot < OH; ++ot) {
      for (int of = 0; of < OW; ++of) {
        int64_t best_idx = -1;
        T best = T(0);
        for (int u = 0; u < kh; ++u) {
          const int64_t row = static_cast<int64_t>(ot * kh + u) * W;
          for (int v = 0; v < kw; ++v) {
            const int64_t idx = row + of * kw + v;
            if (best_idx < 0 || xp[idx] > best) {
              best = xp[idx];
              best_idx = idx;
            }
          }
        }
        yp[static_cast<int64_t>(ot) * OW + of] = best;
        ap[static_cast<int64_t>(ot) * OW + of] = bc * xplane + best_idx;
      }
    }
  }
}

template <class T>
void maxpool_forward(const T* x, T* y, int64_t* argmax,
                     int B, int C, int H, int W, int kh, int kw) {
  const int64_t out = static_cast<int64_t>(B) * C * (H / kh) * (W / kw);
  if (go_parallel(out))
    maxpool_forward_omp(x, y, argmax, B, C, H, W, kh, kw);
  else
    maxpool_forward_serial(x, y, argmax, B, C, H, W, kh, kw);
}

template <class T>
void maxpool_backward_omp(const T* gy, const int64_t* argmax, T* gx, int64_t n_out) {
// Disjoint windows: every argmax target is unique.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n_out; ++i) gx[argmax[i]] += gy[i];
}

template <class T>
void maxpool_backward(const T* gy, const int64_t* argmax, T* gx, int64_t n_out) {
  if (go_parallel(n_out))
    maxpool_backward_omp(gy, argmax, gx, n_out);
  else
    maxpool_backward_serial(gy, argmax, gx, n_out);
}

#define SEDKIT_INSTANTIATE_OMP(T)                                                           \
  template void matmul_omp<T>(const T*, const T*, T*, int, int, int);                       \
  template void matmul<T>(const T*, const T*, T*, int, int, int);                           \
  template void conv2d_forward_omp<T>(const T*, const T*, const T*, T*, int, int, int, int, \
                                      int, int, int);                                       \
  template void conv2d_forward<T>(const T*, const T*, const T*, T*, int, int, int, int,     \
                                  int, int, int);                                           \
  template void conv2d_backward_input_omp<T>(const T*, const T*, T*, int, int, int, int,    \
                                             int, int, int);                                \
  template void conv2d_backward_input<T>(const T*, const T*, T*, int, int, int, int, int,   \
                                         int, int);                                         \
  template void conv2d_backward_filter_omp<T>(const T*, const T*, T*, T*, int, int, int,    \
                                              int, int, int, int);                          \
  template void conv2d_backward_filter<T>(const T*, const T*, T*, T*, int, int, int, int,   \
                                          int, int, int);                                   \
  template void maxpool_forward_omp<T>(const T*, T*, int64_t*, int, int, int, int, int,     \
                                       int);                                                \
  template void maxpool_forward<T>(const T*, T*, int64_t*, int, int, int, int, int, int);   \
  template void maxpool_backward_omp<T>(const T*, const int64_t*, T*, int64_t);             \
  template void maxpool_backward<T>(const T*, const int64_t*, T*, int64_t);

SEDKIT_INSTANTIATE_OMP(float)
SEDKIT_INSTANTIATE_OMP(double)

#undef SEDKIT_INSTANTIATE_OMP

}  // namespace sedkit::kernels
