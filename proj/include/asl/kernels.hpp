// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Raw array kernels behind the autodiff ops. All take NCHW tensors and are
// written so the innermost loop runs contiguously along the width axis,
// which the compiler turns into FMA vector code. Single-threaded on
// purpose: training determinism requires a fixed summation order.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "asl/tensor.hpp"

namespace asl::kern {

struct ConvGeom {
  int stride = 1;
  int pad = 0;
};

inline int conv_out_extent(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

// Valid output range [lo, hi) for one kernel column offset, so the inner
// loops never test input bounds.
inline void conv_col_range(int in_w, int out_w, int stride, int pad, int kw,
                           int* lo, int* hi) {
  int l = 0;
  if (kw < pad) l = (pad - kw + stride - 1) / stride;
  int h = out_w;
  // need kw - pad + ow*stride <= in_w - 1
  int max_ow = (in_w - 1 - kw + pad) / stride;
  if (max_ow + 1 < h) h = max_ow + 1;
  if (h < l) h = l;
  *lo = l;
  *hi = h;
}

template <class T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& w,
                          const TensorT<T>& b, ConvGeom g) {
  const int n = x.dim(0), ic = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != ic)
    throw ShapeError("conv2d: weight expects " + std::to_string(w.dim(1)) +
                     " input planes, got " + std::to_string(ic));
  const int oh = conv_out_extent(ih, kh, g.stride, g.pad);
  const int ow = conv_out_extent(iw, kw, g.stride, g.pad);
  if (oh <= 0 || ow <= 0) throw ShapeError("conv2d: empty output");
  TensorT<T> y({n, oc, oh, ow});

  std::vector<int> lo(kw), hi(kw);
  for (int k = 0; k < kw; ++k)
    conv_col_range(iw, ow, g.stride, g.pad, k, &lo[k], &hi[k]);

  const T* xp = x.data();
  const T* wp = w.data();
  T* yp = y.data();
  const int64_t x_n = int64_t(ic) * ih * iw, x_c = int64_t(ih) * iw;
  const int64_t y_n = int64_t(oc) * oh * ow, y_c = int64_t(oh) * ow;
  for (int in = 0; in < n; ++in) {
    for (int o = 0; o < oc; ++o) {
      T* ybase = yp + in * y_n + o * y_c;
      const T bias = b.empty() ? T(0) : b[o];
      for (int64_t i = 0; i < y_c; ++i) ybase[i] = bias;
      for (int c = 0; c < ic; ++c) {
        const T* xc = xp + in * x_n + c * x_c;
        const T* wrow = wp + (int64_t(o) * ic + c) * kh * kw;
        for (int r = 0; r < oh; ++r) {
          T* yrow = ybase + int64_t(r) * ow;
          for (int q = 0; q < kh; ++q) {
            const int irow = r * g.stride - g.pad + q;
            if (irow < 0 || irow >= ih) continue;
            const T* xrow = xc + int64_t(irow) * iw;
            for (int k = 0; k < kw; ++k) {
              const T wv = wrow[q * kw + k];
              const int off = k - g.pad;
              if (g.stride == 1) {
                const T* src = xrow + off + lo[k];
                T* dst = yrow + lo[k];
                const int len = hi[k] - lo[k];
                for (int t = 0; t < len; ++t) dst[t] += wv * src[t];
              } else {
                for (int t = lo[k]; t < hi[k]; ++t)
                  yrow[t] += wv * xrow[off + int64_t(t) * g.stride];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

template <class T>
TensorT<T> conv2d_backward_input(const TensorT<T>& gy, const TensorT<T>& w,
                                 const std::vector<int>& x_dims, ConvGeom g) {
  const int n = x_dims[0], ic = x_dims[1], ih = x_dims[2], iw = x_dims[3];
  const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = gy.dim(2), ow = gy.dim(3);
  TensorT<T> gx(x_dims);

  std::vector<int> lo(kw), hi(kw);
  for (int k = 0; k < kw; ++k)
    conv_col_range(iw, ow, g.stride, g.pad, k, &lo[k], &hi[k]);

  const T* gp = gy.data();
  const T* wp = w.data();
  T* xp = gx.data();
  const int64_t x_n = int64_t(ic) * ih * iw, x_c = int64_t(ih) * iw;
  const int64_t y_n = int64_t(oc) * oh * ow, y_c = int64_t(oh) * ow;
  for (int in = 0; in < n; ++in) {
    for (int o = 0; o < oc; ++o) {
      const T* gbase = gp + in * y_n + o * y_c;
      for (int c = 0; c < ic; ++c) {
        T* xc = xp + in * x_n + c * x_c;
        const T* wrow = wp + (int64_t(o) * ic + c) * kh * kw;
        for (int r = 0; r < oh; ++r) {
          const T* grow = gbase + int64_t(r) * ow;
          for (int q = 0; q < kh; ++q) {
            const int irow = r * g.stride - g.pad + q;
            if (irow < 0 || irow >= ih) continue;
            T* xrow = xc + int64_t(irow) * iw;
            for (int k = 0; k < kw; ++k) {
              const T wv = wrow[q * kw + k];
              const int off = k - g.pad;
              if (g.stride == 1) {
                T* dst = xrow + off + lo[k];
                const T* src = grow + lo[k];
                const int len = hi[k] - lo[k];
                for (int t = 0; t < len; ++t) dst[t] += wv * src[t];
              } else {
                for (int t = lo[k]; t < hi[k]; ++t)
                  xrow[off + int64_t(t) * g.stride] += wv * grow[t];
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

template <class T>
void conv2d_backward_weight(const TensorT<T>& gy, const TensorT<T>& x,
                            ConvGeom g, TensorT<T>* gw, TensorT<T>* gb) {
  const int n = x.dim(0), ic = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  const int oc = gw->dim(0), kh = gw->dim(2), kw = gw->dim(3);
  const int oh = gy.dim(2), ow = gy.dim(3);

  std::vector<int> lo(kw), hi(kw);
  for (int k = 0; k < kw; ++k)
    conv_col_range(iw, ow, g.stride, g.pad, k, &lo[k], &hi[k]);

  const T* gp = gy.data();
  const T* xp = x.data();
  T* wp = gw->data();
  const int64_t x_n = int64_t(ic) * ih * iw, x_c = int64_t(ih) * iw;
  const int64_t y_n = int64_t(oc) * oh * ow, y_c = int64_t(oh) * ow;
  for (int in = 0; in < n; ++in) {
    for (int o = 0; o < oc; ++o) {
      const T* gbase = gp + in * y_n + o * y_c;
      if (gb && !gb->empty()) {
        T acc = 0;
        for (int64_t i = 0; i < y_c; ++i) acc += gbase[i];
        (*gb)[o] += acc;
      }
      for (int c = 0; c < ic; ++c) {
        const T* xc = xp + in * x_n + c * x_c;
        T* wrow = wp + (int64_t(o) * ic + c) * kh * kw;
        for (int r = 0; r < oh; ++r) {
          const T* grow = gbase + int64_t(r) * ow;
          for (int q = 0; q < kh; ++q) {
            const int irow = r * g.stride - g.pad + q;
            if (irow < 0 || irow >= ih) continue;
            const T* xrow = xc + int64_t(irow) * iw;
            for (int k = 0; k < kw; ++k) {
              const int off = k - g.pad;
              T acc = 0;
              if (g.stride == 1) {
                const T* src = xrow + off + lo[k];
                const T* gsrc = grow + lo[k];
                const int len = hi[k] - lo[k];
                for (int t = 0; t < len; ++t) acc += gsrc[t] * src[t];
              } else {
                for (int t = lo[k]; t < hi[k]; ++t)
                  acc += grow[t] * xrow[off + int64_t(t) * g.stride];
              }
              wrow[q * kw + k] += acc;
            }
          }
        }
      }
    }
  }
}

template <class T>
TensorT<T> maxpool2d_forward(const TensorT<T>& x, int kernel, int stride,
                             int pad, std::vector<int32_t>* argmax) {
  const int n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  const int oh = conv_out_extent(ih, kernel, stride, pad);
  const int ow = conv_out_extent(iw, kernel, stride, pad);
  if (oh <= 0 || ow <= 0) throw ShapeError("maxpool2d: empty output");
  TensorT<T> y({n, c, oh, ow});
  argmax->assign(size_t(y.numel()), -1);
  const T* xp = x.data();
  T* yp = y.data();
  int32_t* ap = argmax->data();
  int64_t oi = 0;
  for (int in = 0; in < n; ++in) {
    for (int ch = 0; ch < c; ++ch) {
      const T* plane = xp + (int64_t(in) * c + ch) * ih * iw;
      for (int r = 0; r < oh; ++r) {
        for (int col = 0; col < ow; ++col, ++oi) {
          T best = -std::numeric_limits<T>::infinity();
          int32_t best_idx = -1;
          for (int q = 0; q < kernel; ++q) {
            const int irow = r * stride - pad + q;
            if (irow < 0 || irow >= ih) continue;
            for (int k = 0; k < kernel; ++k) {
              const int icol = col * stride - pad + k;
              if (icol < 0 || icol >= iw) continue;
              const T v = plane[int64_t(irow) * iw + icol];
              if (v > best) {
                best = v;
                best_idx = int32_t(irow * iw + icol);
              }
            }
          }
          yp[oi] = best;
          ap[oi] = best_idx;
        }
      }
    }
  }
  return y;
}

template <class T>
TensorT<T> maxpool2d_backward(const TensorT<T>& gy,
                              const std::vector<int32_t>& argmax,
                              const std::vector<int>& x_dims) {
  TensorT<T> gx(x_dims);
  const int c = x_dims[1], ih = x_dims[2], iw = x_dims[3];
  const int64_t plane = int64_t(ih) * iw;
  const int oh = gy.dim(2), ow = gy.dim(3);
  const int64_t per_plane_out = int64_t(oh) * ow;
  const T* gp = gy.data();
  T* xp = gx.data();
  for (int64_t i = 0; i < gy.numel(); ++i) {
    if (argmax[size_t(i)] < 0) continue;
    const int64_t pl = i / per_plane_out;
    (void)c;
    xp[pl * plane + argmax[size_t(i)]] += gp[i];
  }
  return gx;
}

// x:{N,I} w:{O,I} b:{O} -> {N,O}
template <class T>
TensorT<T> fc_forward(const TensorT<T>& x, const TensorT<T>& w,
                      const TensorT<T>& b) {
  const int n = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (w.dim(1) != in)
    throw ShapeError("fc: weight expects " + std::to_string(w.dim(1)) +
                     " inputs, got " + std::to_string(in));
  TensorT<T> y({n, out});
  const T* xp = x.data();
  const T* wp = w.data();
  T* yp = y.data();
  for (int i = 0; i < n; ++i) {
    const T* xrow = xp + int64_t(i) * in;
    T* yrow = yp + int64_t(i) * out;
    for (int o = 0; o < out; ++o) {
      const T* wrow = wp + int64_t(o) * in;
      T acc = b.empty() ? T(0) : b[o];
      for (int k = 0; k < in; ++k) acc += wrow[k] * xrow[k];
      yrow[o] = acc;
    }
  }
  return y;
}

template <class T>
TensorT<T> fc_backward_input(const TensorT<T>& gy, const TensorT<T>& w,
                             const std::vector<int>& x_dims) {
  const int n = x_dims[0], in = x_dims[1], out = w.dim(0);
  TensorT<T> gx(x_dims);
  const T* gp = gy.data();
  const T* wp = w.data();
  T* xp = gx.data();
  for (int i = 0; i < n; ++i) {
    T* xrow = xp + int64_t(i) * in;
    const T* grow = gp + int64_t(i) * out;
    for (int o = 0; o < out; ++o) {
      const T gv = grow[o];
      if (gv == T(0)) continue;
      const T* wrow = wp + int64_t(o) * in;
      for (int k = 0; k < in; ++k) xrow[k] += gv * wrow[k];
    }
  }
  return gx;
}

template <class T>
void fc_backward_weight(const TensorT<T>& gy, const TensorT<T>& x,
                        TensorT<T>* gw, TensorT<T>* gb) {
  const int n = x.dim(0), in = x.dim(1), out = gw->dim(0);
  const T* gp = gy.data();
  const T* xp = x.data();
  T* wp = gw->data();
  for (int i = 0; i < n; ++i) {
    const T* xrow = xp + int64_t(i) * in;
    const T* grow = gp + int64_t(i) * out;
    for (int o = 0; o < out; ++o) {
      const T gv = grow[o];
      if (gb && !gb->empty()) (*gb)[o] += gv;
      if (gv == T(0)) continue;
      T* wrow = wp + int64_t(o) * in;
      for (int k = 0; k < in; ++k) wrow[k] += gv * xrow[k];
    }
  }
}

// Axis sampling positions for corner-aligned bilinear interpolation.
template <class T>
void resize_axis(int in, int out, std::vector<int>* i0, std::vector<T>* w1) {
  i0->resize(size_t(out));
  w1->resize(size_t(out));
  const double scale = (out > 1) ? double(in - 1) / double(out - 1) : 0.0;
  for (int u = 0; u < out; ++u) {
    double src = (out > 1) ? u * scale : (in - 1) * 0.5;
    if (src < 0) src = 0;
    if (src > in - 1) src = in - 1;
    int lo = int(src);
    if (lo > in - 2) lo = in - 2;
    if (lo < 0) lo = 0;
    (*i0)[size_t(u)] = lo;
    (*w1)[size_t(u)] = (in > 1) ? T(src - lo) : T(0);
  }
}

// Corner-aligned bilinear resize of every plane, NCHW.
template <class T>
TensorT<T> resize_bilinear_forward(const TensorT<T>& x, int oh, int ow) {
  const int n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  if (oh < 1 || ow < 1) throw ShapeError("resize: output extents must be >= 1");
  TensorT<T> y({n, c, oh, ow});
  std::vector<int> r0, c0;
  std::vector<T> rw, cw;
  resize_axis<T>(ih, oh, &r0, &rw);
  resize_axis<T>(iw, ow, &c0, &cw);
  const T* xp = x.data();
  T* yp = y.data();
  const int64_t planes = int64_t(n) * c;
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = xp + p * ih * iw;
    T* dst = yp + p * oh * ow;
    for (int r = 0; r < oh; ++r) {
      const T* row0 = src + int64_t(r0[size_t(r)]) * iw;
      const T* row1 = row0 + (ih > 1 ? iw : 0);
      const T fr = rw[size_t(r)];
      T* drow = dst + int64_t(r) * ow;
      for (int u = 0; u < ow; ++u) {
        const int k = c0[size_t(u)];
        const T fc = cw[size_t(u)];
        const T top = row0[k] + fc * (row0[k + (iw > 1 ? 1 : 0)] - row0[k]);
        const T bot = row1[k] + fc * (row1[k + (iw > 1 ? 1 : 0)] - row1[k]);
        drow[u] = top + fr * (bot - top);
      }
    }
  }
  return y;
}

template <class T>
TensorT<T> resize_bilinear_backward(const TensorT<T>& gy,
                                    const std::vector<int>& x_dims) {
  const int ih = x_dims[2], iw = x_dims[3];
  const int oh = gy.dim(2), ow = gy.dim(3);
  TensorT<T> gx(x_dims);
  std::vector<int> r0, c0;
  std::vector<T> rw, cw;
  resize_axis<T>(ih, oh, &r0, &rw);
  resize_axis<T>(iw, ow, &c0, &cw);
  const T* gp = gy.data();
  T* xp = gx.data();
  const int64_t planes = int64_t(x_dims[0]) * x_dims[1];
  const int dr = ih > 1 ? iw : 0;
  const int dc = iw > 1 ? 1 : 0;
  for (int64_t p = 0; p < planes; ++p) {
    T* dst = xp + p * ih * iw;
    const T* src = gp + p * oh * ow;
    for (int r = 0; r < oh; ++r) {
      const int rr = r0[size_t(r)];
      const T fr = rw[size_t(r)];
      const T* grow = src + int64_t(r) * ow;
      for (int u = 0; u < ow; ++u) {
        const int cc = c0[size_t(u)];
        const T fc = cw[size_t(u)];
        const T g = grow[u];
        dst[int64_t(rr) * iw + cc] += (1 - fr) * (1 - fc) * g;
        dst[int64_t(rr) * iw + cc + dc] += (1 - fr) * fc * g;
        dst[int64_t(rr + (dr ? 1 : 0)) * iw + cc] += fr * (1 - fc) * g;
        dst[int64_t(rr + (dr ? 1 : 0)) * iw + cc + dc] += fr * fc * g;
      }
    }
  }
  return gx;
}

// Linear map from output pixel (v=row, u=col) to continuous source
// coordinates: row = r0 + v*dr, col = c0 + u*dc. Samples are clamped to the
// source rectangle. Used for the FOV crop, where the map comes from camera
// angles; negative dr expresses the elevation axis flip.
struct RectMap {
  double r0 = 0, dr = 1, c0 = 0, dc = 1;
};

template <class T>
void rect_axis(double a0, double da, int in, int out, std::vector<int>* i0,
               std::vector<T>* frac) {
  i0->resize(size_t(out));
  frac->resize(size_t(out));
  for (int u = 0; u < out; ++u) {
    double src = a0 + da * u;
    if (src < 0) src = 0;
    if (src > in - 1) src = in - 1;
    int lo = int(src);
    if (lo > in - 2) lo = in - 2;
    if (lo < 0) lo = 0;
    (*i0)[size_t(u)] = lo;
    (*frac)[size_t(u)] = (in > 1) ? T(src - lo) : T(0);
  }
}

template <class T>
TensorT<T> sample_rect_forward(const TensorT<T>& x, const RectMap& m, int oh,
                               int ow) {
  const int n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  TensorT<T> y({n, c, oh, ow});
  std::vector<int> r0, c0;
  std::vector<T> rw, cw;
  rect_axis<T>(m.r0, m.dr, ih, oh, &r0, &rw);
  rect_axis<T>(m.c0, m.dc, iw, ow, &c0, &cw);
  const T* xp = x.data();
  T* yp = y.data();
  const int64_t planes = int64_t(n) * c;
  const int dcol = iw > 1 ? 1 : 0;
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = xp + p * ih * iw;
    T* dst = yp + p * oh * ow;
    for (int r = 0; r < oh; ++r) {
      const T* row0 = src + int64_t(r0[size_t(r)]) * iw;
      const T* row1 = row0 + (ih > 1 ? iw : 0);
      const T fr = rw[size_t(r)];
      T* drow = dst + int64_t(r) * ow;
      for (int u = 0; u < ow; ++u) {
        const int k = c0[size_t(u)];
        const T fc = cw[size_t(u)];
        const T top = row0[k] + fc * (row0[k + dcol] - row0[k]);
        const T bot = row1[k] + fc * (row1[k + dcol] - row1[k]);
        drow[u] = top + fr * (bot - top);
      }
    }
  }
  return y;
}

template <class T>
TensorT<T> sample_rect_backward(const TensorT<T>& gy, const RectMap& m,
                                const std::vector<int>& x_dims) {
  const int ih = x_dims[2], iw = x_dims[3];
  const int oh = gy.dim(2), ow = gy.dim(3);
  TensorT<T> gx(x_dims);
  std::vector<int> r0, c0;
  std::vector<T> rw, cw;
  rect_axis<T>(m.r0, m.dr, ih, oh, &r0, &rw);
  rect_axis<T>(m.c0, m.dc, iw, ow, &c0, &cw);
  const T* gp = gy.data();
  T* xp = gx.data();
  const int64_t planes = int64_t(x_dims[0]) * x_dims[1];
  const int stepr = ih > 1 ? 1 : 0;
  const int stepc = iw > 1 ? 1 : 0;
  for (int64_t p = 0; p < planes; ++p) {
    T* dst = xp + p * ih * iw;
    const T* src = gp + p * oh * ow;
    for (int r = 0; r < oh; ++r) {
      const int rr = r0[size_t(r)];
      const T fr = rw[size_t(r)];
      const T* grow = src + int64_t(r) * ow;
      for (int u = 0; u < ow; ++u) {
        const int cc = c0[size_t(u)];
        const T fc = cw[size_t(u)];
        const T g = grow[u];
        dst[int64_t(rr) * iw + cc] += (1 - fr) * (1 - fc) * g;
        dst[int64_t(rr) * iw + cc + stepc] += (1 - fr) * fc * g;
        dst[int64_t(rr + stepr) * iw + cc] += fr * (1 - fc) * g;
        dst[int64_t(rr + stepr) * iw + cc + stepc] += fr * fc * g;
      }
    }
  }
  return gx;
}

// Softmax across the plane axis (axis 1) of {N,C,H,W}. C is 2 everywhere in
// this project but the kernel is generic.
template <class T>
TensorT<T> softmax_planes_forward(const TensorT<T>& x) {
  const int n = x.dim(0), c = x.dim(1);
  const int64_t hw = int64_t(x.dim(2)) * x.dim(3);
  TensorT<T> y(x.dims());
  const T* xp = x.data();
  T* yp = y.data();
  for (int in = 0; in < n; ++in) {
    const T* xb = xp + int64_t(in) * c * hw;
    T* yb = yp + int64_t(in) * c * hw;
    for (int64_t i = 0; i < hw; ++i) {
      T mx = xb[i];
      for (int ch = 1; ch < c; ++ch) mx = std::max(mx, xb[ch * hw + i]);
      T denom = 0;
      for (int ch = 0; ch < c; ++ch) {
        const T e = std::exp(xb[ch * hw + i] - mx);
        yb[ch * hw + i] = e;
        denom += e;
      }
      for (int ch = 0; ch < c; ++ch) yb[ch * hw + i] /= denom;
    }
  }
  return y;
}

template <class T>
TensorT<T> softmax_planes_backward(const TensorT<T>& gy, const TensorT<T>& y) {
  const int n = y.dim(0), c = y.dim(1);
  const int64_t hw = int64_t(y.dim(2)) * y.dim(3);
  TensorT<T> gx(y.dims());
  const T* gp = gy.data();
  const T* yp = y.data();
  T* xp = gx.data();
  for (int in = 0; in < n; ++in) {
    const int64_t base = int64_t(in) * c * hw;
    for (int64_t i = 0; i < hw; ++i) {
      T dot = 0;
      for (int ch = 0; ch < c; ++ch)
        dot += gp[base + ch * hw + i] * yp[base + ch * hw + i];
      for (int ch = 0; ch < c; ++ch)
        xp[base + ch * hw + i] =
            yp[base + ch * hw + i] * (gp[base + ch * hw + i] - dot);
    }
  }
  return gx;
}

}  // namespace asl::kern
