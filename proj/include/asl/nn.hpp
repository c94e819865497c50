// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Minimal reverse-mode differentiation over dense tensors. The graph is
// dynamic: every op returns a new node holding its value, its parents, and
// a closure that pushes gradient into those parents. backward() runs the
// closures in reverse topological order. Ops are the layer set this
// project needs (conv / pool / fc / relu / bilinear sampling / 2-plane
// softmax / cross-entropy) — no broadcasting, no graph compiler.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "asl/kernels.hpp"
#include "asl/tensor.hpp"

namespace asl::nn {

template <class T>
struct NodeT;

template <class T>
using VarT = std::shared_ptr<NodeT<T>>;

template <class T>
struct NodeT {
  TensorT<T> value;
  TensorT<T> grad;  // allocated on first use; same dims as value
  bool requires_grad = false;
  bool is_leaf = true;
  std::string name;  // non-empty for parameters
  std::vector<VarT<T>> parents;
  std::function<void(NodeT<T>&)> backprop;

  TensorT<T>& ensure_grad() {
    if (grad.numel() != value.numel()) grad = TensorT<T>(value.dims());
    return grad;
  }
  void zero_grad() {
    if (!grad.empty()) grad.fill(T(0));
  }
  const std::vector<int>& dims() const { return value.dims(); }
};

// Gradient bookkeeping can be switched off for pure inference; ops then
// produce value-only nodes and intermediate activations become collectable.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
  bool prev;
};

template <class T>
VarT<T> constant(TensorT<T> v) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(v);
  return n;
}

template <class T>
VarT<T> parameter(std::string name, TensorT<T> v) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(v);
  n->requires_grad = true;
  n->name = std::move(name);
  return n;
}

template <class T>
VarT<T> make_op(TensorT<T> value, std::vector<VarT<T>> parents,
                std::function<void(NodeT<T>&)> backprop) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(value);
  n->is_leaf = false;
  bool need = false;
  if (grad_mode())
    for (const auto& p : parents)
      if (p->requires_grad) need = true;
  if (need) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

// Runs reverse-mode accumulation from a scalar loss. Gradients accumulate
// into every requires_grad node reachable from the loss; repeated calls
// keep accumulating until zero_grad.
template <class T>
void backward(const VarT<T>& loss) {
  if (loss->value.numel() != 1)
    throw UsageError("backward: loss must be a scalar, got " +
                     loss->value.shape_str());
  std::vector<NodeT<T>*> order;
  std::unordered_set<NodeT<T>*> seen;
  std::vector<std::pair<NodeT<T>*, size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      NodeT<T>* p = node->parents[idx++].get();
      if (!seen.count(p) && p->requires_grad) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  auto& g = loss->ensure_grad();
  g[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

// ---- ops ----

template <class T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
  if (!a->value.same_shape(b->value))
    throw ShapeError("add: shape mismatch " + a->value.shape_str() + " vs " +
                     b->value.shape_str());
  TensorT<T> y(a->dims());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = a->value[i] + b->value[i];
  auto pa = a, pb = b;
  return make_op<T>(std::move(y), {a, b}, [pa, pb](NodeT<T>& n) {
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
  });
}

template <class T>
VarT<T> relu(const VarT<T>& x) {
  TensorT<T> y(x->dims());
  for (int64_t i = 0; i < y.numel(); ++i)
    y[i] = x->value[i] > T(0) ? x->value[i] : T(0);
  auto px = x;
  return make_op<T>(std::move(y), {x}, [px](NodeT<T>& n) {
    auto& g = px->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i)
      if (n.value[i] > T(0)) g[i] += n.grad[i];
  });
}

template <class T>
VarT<T> reshape(const VarT<T>& x, std::vector<int> dims) {
  TensorT<T> y = x->value.reshaped(dims);
  auto px = x;
  return make_op<T>(std::move(y), {x}, [px](NodeT<T>& n) {
    auto& g = px->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
  });
}

// Concatenate along the plane axis of NCHW tensors.
template <class T>
VarT<T> concat_planes(const VarT<T>& a, const VarT<T>& b) {
  const auto& da = a->dims();
  const auto& db = b->dims();
  if (da.size() != 4 || db.size() != 4 || da[0] != db[0] || da[2] != db[2] ||
      da[3] != db[3])
    throw ShapeError("concat_planes: incompatible shapes " +
                     a->value.shape_str() + " vs " + b->value.shape_str());
  const int n = da[0], ca = da[1], cb = db[1];
  const int64_t hw = int64_t(da[2]) * da[3];
  TensorT<T> y({n, ca + cb, da[2], da[3]});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a->value.data() + int64_t(i) * ca * hw, ca * hw,
                y.data() + int64_t(i) * (ca + cb) * hw);
    std::copy_n(b->value.data() + int64_t(i) * cb * hw, cb * hw,
                y.data() + (int64_t(i) * (ca + cb) + ca) * hw);
  }
  auto pa = a, pb = b;
  return make_op<T>(std::move(y), {a, b}, [pa, pb, n, ca, cb, hw](NodeT<T>& nd) {
    if (pa->requires_grad) {
      auto& g = pa->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int64_t k = 0; k < ca * hw; ++k)
          g[int64_t(i) * ca * hw + k] +=
              nd.grad[int64_t(i) * (ca + cb) * hw + k];
    }
    if (pb->requires_grad) {
      auto& g = pb->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int64_t k = 0; k < cb * hw; ++k)
          g[int64_t(i) * cb * hw + k] +=
              nd.grad[(int64_t(i) * (ca + cb) + ca) * hw + k];
    }
  });
}

// Select one plane of NCHW as {N,1,H,W}.
template <class T>
VarT<T> take_plane(const VarT<T>& x, int plane) {
  const auto& d = x->dims();
  if (d.size() != 4 || plane < 0 || plane >= d[1])
    throw ShapeError("take_plane: bad plane index");
  const int n = d[0], c = d[1];
  const int64_t hw = int64_t(d[2]) * d[3];
  TensorT<T> y({n, 1, d[2], d[3]});
  for (int i = 0; i < n; ++i)
    std::copy_n(x->value.data() + (int64_t(i) * c + plane) * hw, hw,
                y.data() + int64_t(i) * hw);
  auto px = x;
  return make_op<T>(std::move(y), {x}, [px, plane, n, c, hw](NodeT<T>& nd) {
    auto& g = px->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int64_t k = 0; k < hw; ++k)
        g[(int64_t(i) * c + plane) * hw + k] += nd.grad[int64_t(i) * hw + k];
  });
}

template <class T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b,
               int stride, int pad) {
  kern::ConvGeom geom{stride, pad};
  TensorT<T> y = kern::conv2d_forward(x->value, w->value, b->value, geom);
  auto px = x, pw = w, pb = b;
  return make_op<T>(std::move(y), {x, w, b}, [px, pw, pb, geom](NodeT<T>& n) {
    if (pw->requires_grad || pb->requires_grad) {
      auto& gw = pw->ensure_grad();
      auto& gb = pb->ensure_grad();
      kern::conv2d_backward_weight(n.grad, px->value, geom, &gw, &gb);
    }
    if (px->requires_grad) {
      TensorT<T> gx =
          kern::conv2d_backward_input(n.grad, pw->value, px->dims(), geom);
      auto& g = px->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += gx[i];
    }
  });
}

template <class T>
VarT<T> maxpool2d(const VarT<T>& x, int kernel, int stride, int pad) {
  auto argmax = std::make_shared<std::vector<int32_t>>();
  TensorT<T> y = kern::maxpool2d_forward(x->value, kernel, stride, pad,
                                         argmax.get());
  auto px = x;
  return make_op<T>(std::move(y), {x}, [px, argmax](NodeT<T>& n) {
    TensorT<T> gx = kern::maxpool2d_backward(n.grad, *argmax, px->dims());
    auto& g = px->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += gx[i];
  });
}

template <class T>
VarT<T> fc(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
  TensorT<T> y = kern::fc_forward(x->value, w->value, b->value);
  auto px = x, pw = w, pb = b;
  return make_op<T>(std::move(y), {x, w, b}, [px, pw, pb](NodeT<T>& n) {
    if (pw->requires_grad || pb->requires_grad) {
      auto& gw = pw->ensure_grad();
      auto& gb = pb->ensure_grad();
      kern::fc_backward_weight(n.grad, px->value, &gw, &gb);
    }
    if (px->requires_grad) {
      TensorT<T> gx = kern::fc_backward_input(n.grad, pw->value, px->dims());
      auto& g = px->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += gx[i];
    }
  });
}

template <class T>
VarT<T> resize_bilinear(const VarT<T>& x, int oh, int ow) {
  TensorT<T> y = kern::resize_bilinear_forward(x->value, oh, ow);
  auto px = x;
  return make_op<T>(std::move(y), {x}, [px](NodeT<T>& n) {
    TensorT<T> gx = kern::resize_bilinear_backward(n.grad, px->dims());
    auto& g = px->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += gx[i];
  });
}

template <class T>
VarT<T> sample_rect(const VarT<T>& x, const kern::RectMap& m, int oh, int ow) {
  TensorT<T> y = kern::sample_rect_forward(x->value, m, oh, ow);
  auto px = x;
  return make_op<T>(std::move(y), {x}, [px, m](NodeT<T>& n) {
    TensorT<T> gx = kern::sample_rect_backward(n.grad, m, px->dims());
    auto& g = px->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += gx[i];
  });
}

template <class T>
VarT<T> softmax_planes(const VarT<T>& x) {
  TensorT<T> y = kern::softmax_planes_forward(x->value);
  auto px = x;
  return make_op<T>(std::move(y), {x}, [px](NodeT<T>& n) {
    TensorT<T> gx = kern::softmax_planes_backward(n.grad, n.value);
    auto& g = px->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += gx[i];
  });
}

// Mean cross entropy between logits and a one-hot target, both NCHW with
// the class axis on the planes. The mean runs over all N*H*W cells.
template <class T>
VarT<T> softmax_cross_entropy(const VarT<T>& logits, const TensorT<T>& target) {
  const auto& d = logits->dims();
  if (d.size() != 4) throw ShapeError("softmax_cross_entropy: want NCHW");
  if (target.dims() != d)
    throw ShapeError("softmax_cross_entropy: target shape " +
                     target.shape_str() + " != logits " +
                     logits->value.shape_str());
  const int n = d[0], c = d[1];
  const int64_t hw = int64_t(d[2]) * d[3];
  const int64_t cells = int64_t(n) * hw;

  auto softmax = std::make_shared<TensorT<T>>(
      kern::softmax_planes_forward(logits->value));
  auto tgt = std::make_shared<TensorT<T>>(target);

  double total = 0;
  const T* lp = logits->value.data();
  const T* tp = target.data();
  for (int in = 0; in < n; ++in) {
    const int64_t base = int64_t(in) * c * hw;
    for (int64_t i = 0; i < hw; ++i) {
      int hot = -1;
      for (int ch = 0; ch < c; ++ch) {
        const T tv = tp[base + ch * hw + i];
        if (tv == T(1)) {
          if (hot >= 0)
            throw UsageError("softmax_cross_entropy: target not one-hot");
          hot = ch;
        } else if (tv != T(0)) {
          throw UsageError("softmax_cross_entropy: target not one-hot");
        }
      }
      if (hot < 0)
        throw UsageError("softmax_cross_entropy: target not one-hot");
      T mx = lp[base + i];
      for (int ch = 1; ch < c; ++ch) mx = std::max(mx, lp[base + ch * hw + i]);
      double lse = 0;
      for (int ch = 0; ch < c; ++ch)
        lse += std::exp(double(lp[base + ch * hw + i] - mx));
      total += std::log(lse) + double(mx) - double(lp[base + hot * hw + i]);
    }
  }
  TensorT<T> loss({1}, {T(total / double(cells))});
  auto pl = logits;
  return make_op<T>(std::move(loss), {logits},
                    [pl, softmax, tgt, cells](NodeT<T>& nd) {
                      const T scale = nd.grad[0] / T(cells);
                      auto& g = pl->ensure_grad();
                      for (int64_t i = 0; i < g.numel(); ++i)
                        g[i] += scale * ((*softmax)[i] - (*tgt)[i]);
                    });
}

// ---- parameter initialization ----

// Kaiming-style fan-in uniform: bound = sqrt(6 / fan_in). Every parameter
// draws from its own stream keyed by (seed, name) so initialization is a
// pure function of both.
template <class T>
TensorT<T> kaiming_uniform(const std::vector<int>& dims, int fan_in,
                           uint64_t seed, const std::string& name) {
  TensorT<T> t(dims);
  Rng rng(seed ^ hash_name(name));
  const double bound = std::sqrt(6.0 / double(fan_in));
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = T(rng.uniform(-bound, bound));
  return t;
}

// ---- optimizer ----

// Adam with bias correction. State is owned here, keyed by parameter order,
// and serializes through the checkpoint format by parameter name.
template <class T>
class AdamT {
 public:
  struct Options {
    T lr = T(1e-3);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
  };

  AdamT(std::vector<VarT<T>> params, Options opt = {})
      : params_(std::move(params)), opt_(opt) {
    for (const auto& p : params_)
      slots_.push_back({TensorT<T>(p->dims()), TensorT<T>(p->dims())});
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(double(opt_.beta1), double(t_));
    const double bc2 = 1.0 - std::pow(double(opt_.beta2), double(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      if (p->grad.numel() != p->value.numel()) continue;  // no grad yet
      auto& m = slots_[k].m;
      auto& v = slots_[k].v;
      T* pv = p->value.data();
      const T* g = p->grad.data();
      for (int64_t i = 0; i < p->value.numel(); ++i) {
        m[i] = opt_.beta1 * m[i] + (1 - opt_.beta1) * g[i];
        v[i] = opt_.beta2 * v[i] + (1 - opt_.beta2) * g[i] * g[i];
        const T mhat = T(double(m[i]) / bc1);
        const T vhat = T(double(v[i]) / bc2);
        pv[i] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
      }
    }
  }

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  const std::vector<VarT<T>>& params() const { return params_; }
  struct Slot {
    TensorT<T> m, v;
  };
  std::vector<Slot>& slots() { return slots_; }

 private:
  std::vector<VarT<T>> params_;
  std::vector<Slot> slots_;
  Options opt_;
  int64_t t_ = 0;
};

using Var = VarT<float>;
using Node = NodeT<float>;
using Adam = AdamT<float>;

}  // namespace asl::nn
