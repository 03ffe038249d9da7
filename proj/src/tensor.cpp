/*
 * Copyright 2026 VpbSD Project Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "vpbsd/tensor.hpp"

#include <cassert>
#include <cmath>
#include <cstring>
#include <sstream>

namespace vpbsd::tc {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

namespace {

thread_local Tape* g_active_tape = nullptr;

std::shared_ptr<TensorImpl> make_impl(const Shape& shape, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  int64_t n = shape_numel(shape);
  VPBSD_CHECK(n >= 0, ErrorKind::Dimension, "negative extent in shape " + shape_str(shape));
  impl->data.assign(static_cast<size_t>(n), 0.0);
  impl->requires_grad = requires_grad;
  return impl;
}

#ifndef NDEBUG
void debug_check_finite(const TensorImpl& t, const char* op) {
  for (double v : t.data) assert(std::isfinite(v) && op);
  (void)op;
}
#define VPBSD_DEBUG_FINITE(t, op) debug_check_finite(t, op)
#else
#define VPBSD_DEBUG_FINITE(t, op) ((void)0)
#endif

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

// Records the node when a tape is active and some input needs gradients.
void finish_op(const char* name, std::initializer_list<const Tensor*> inputs,
               Tensor& out, std::function<void()> backward) {
  bool rg = wants_grad(inputs);
  out.set_requires_grad(rg);
  VPBSD_DEBUG_FINITE(*out.raw(), name);
  Tape* tape = Tape::active();
  if (rg && tape != nullptr) {
    Tape::Node node;
    node.op = name;
    for (const Tensor* t : inputs) node.inputs.push_back(t->impl());
    node.output = out.impl();
    node.backward = std::move(backward);
    tape->record(std::move(node));
  }
}

// grad buffer of t if it participates in backprop, else nullptr
double* grad_dst(const std::shared_ptr<TensorImpl>& t) {
  if (!t->requires_grad) return nullptr;
  t->ensure_grad();
  return t->grad.data();
}

const std::vector<double>* out_grad(const std::shared_ptr<TensorImpl>& t) {
  return t->grad.empty() ? nullptr : &t->grad;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  VPBSD_CHECK(a.shape() == b.shape(), ErrorKind::Dimension,
              std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                  " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(make_impl(shape, requires_grad));
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  Tensor t(make_impl(shape, requires_grad));
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from(const Shape& shape, std::vector<double> data, bool requires_grad) {
  VPBSD_CHECK(shape_numel(shape) == static_cast<int64_t>(data.size()), ErrorKind::Dimension,
              "data length does not match shape " + shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(impl);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::randn(const Shape& shape, Rng& rng, double stddev, bool requires_grad) {
  Tensor t(make_impl(shape, requires_grad));
  for (double& v : t.data()) v = rng.normal(0.0, stddev);
  return t;
}

Tensor Tensor::rand_uniform(const Shape& shape, Rng& rng, double lo, double hi, bool requires_grad) {
  Tensor t(make_impl(shape, requires_grad));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

double Tensor::item() const {
  VPBSD_CHECK(numel() == 1, ErrorKind::Contract, "item() on non-scalar tensor");
  return data()[0];
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = false;
  return Tensor(impl);
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(impl);
}

// ---- tape ------------------------------------------------------------------

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) {
  prev_ = g_active_tape;
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = prev_; }

void Tape::backward(const Tensor& loss) {
  VPBSD_CHECK(loss.numel() == 1, ErrorKind::Contract,
              "backward() requires a scalar loss, got " + shape_str(loss.shape()));
  auto impl = loss.impl();
  impl->ensure_grad();
  std::fill(impl->grad.begin(), impl->grad.end(), 0.0);
  impl->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // not reachable from the loss
    it->backward();
  }
}

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  auto ai = a.impl(), bi = b.impl(), oi = out.impl();
  finish_op("add", {&a, &b}, out, [ai, bi, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
    if (double* db = grad_dst(bi))
      for (size_t i = 0; i < g->size(); ++i) db[i] += (*g)[i];
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
  auto ai = a.impl(), bi = b.impl(), oi = out.impl();
  finish_op("sub", {&a, &b}, out, [ai, bi, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
    if (double* db = grad_dst(bi))
      for (size_t i = 0; i < g->size(); ++i) db[i] -= (*g)[i];
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  auto ai = a.impl(), bi = b.impl(), oi = out.impl();
  finish_op("mul", {&a, &b}, out, [ai, bi, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] * bi->data[i];
    if (double* db = grad_dst(bi))
      for (size_t i = 0; i < g->size(); ++i) db[i] += (*g)[i] * ai->data[i];
  });
  return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i];
  auto ai = a.impl(), bi = b.impl(), oi = out.impl();
  finish_op("div", {&a, &b}, out, [ai, bi, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] / bi->data[i];
    if (double* db = grad_dst(bi))
      for (size_t i = 0; i < g->size(); ++i) {
        double inv = 1.0 / bi->data[i];
        db[i] -= (*g)[i] * ai->data[i] * inv * inv;
      }
  });
  return out;
}

Tensor add_scalar(const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[static_cast<size_t>(i)] = a.data()[static_cast<size_t>(i)] + s;
  auto ai = a.impl(), oi = out.impl();
  finish_op("add_scalar", {&a}, out, [ai, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
  });
  return out;
}

Tensor mul_scalar(const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[static_cast<size_t>(i)] = a.data()[static_cast<size_t>(i)] * s;
  auto ai = a.impl(), oi = out.impl();
  finish_op("mul_scalar", {&a}, out, [ai, oi, s] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] * s;
  });
  return out;
}

Tensor abs(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[static_cast<size_t>(i)] = std::fabs(a.data()[static_cast<size_t>(i)]);
  auto ai = a.impl(), oi = out.impl();
  finish_op("abs", {&a}, out, [ai, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) {
        double x = ai->data[i];
        da[i] += (*g)[i] * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
      }
  });
  return out;
}

Tensor leaky_relu(const Tensor& a, double slope) {
  VPBSD_CHECK(slope > 0.0 && slope <= 1.0, ErrorKind::InvalidArgument,
              "leaky_relu slope must lie in (0,1]");
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  const double* pa = a.data().data();
  double* po = out.data().data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] >= 0.0 ? pa[i] : slope * pa[i];
  auto ai = a.impl(), oi = out.impl();
  // subgradient at 0 uses the slope
  finish_op("leaky_relu", {&a}, out, [ai, oi, slope] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i)
        da[i] += (*g)[i] * (ai->data[i] > 0.0 ? 1.0 : slope);
  });
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  const double* pa = a.data().data();
  double* po = out.data().data();
  for (int64_t i = 0; i < n; ++i) po[i] = 1.0 / (1.0 + std::exp(-pa[i]));
  auto ai = a.impl(), oi = out.impl();
  finish_op("sigmoid", {&a}, out, [ai, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) {
        double y = oi->data[i];
        da[i] += (*g)[i] * y * (1.0 - y);
      }
  });
  return out;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  auto ai = a.impl(), oi = out.impl();
  finish_op("sum", {&a}, out, [ai, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai)) {
      double gv = (*g)[0];
      for (size_t i = 0; i < ai->data.size(); ++i) da[i] += gv;
    }
  });
  return out;
}

Tensor mean(const Tensor& a) {
  VPBSD_CHECK(a.numel() > 0, ErrorKind::Contract, "mean of empty tensor");
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  const double inv_n = 1.0 / static_cast<double>(a.numel());
  Tensor out = Tensor::scalar(acc * inv_n);
  auto ai = a.impl(), oi = out.impl();
  finish_op("mean", {&a}, out, [ai, oi, inv_n] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai)) {
      double gv = (*g)[0] * inv_n;
      for (size_t i = 0; i < ai->data.size(); ++i) da[i] += gv;
    }
  });
  return out;
}

// ---- shape ops --------------------------------------------------------------

Tensor reshape(const Tensor& a, const Shape& shape) {
  VPBSD_CHECK(shape_numel(shape) == a.numel(), ErrorKind::Dimension,
              "reshape " + shape_str(a.shape()) + " -> " + shape_str(shape) +
                  " changes element count");
  Tensor out = Tensor::from(shape, a.data());
  auto ai = a.impl(), oi = out.impl();
  finish_op("reshape", {&a}, out, [ai, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai))
      for (size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
  });
  return out;
}

Tensor transpose_12(const Tensor& a) {
  VPBSD_CHECK(a.ndim() == 3, ErrorKind::Dimension, "transpose_12 expects a 3-d tensor");
  const int64_t B = a.dim(0), X = a.dim(1), Y = a.dim(2);
  Tensor out = Tensor::zeros({B, Y, X});
  const double* pa = a.data().data();
  double* po = out.data().data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t x = 0; x < X; ++x)
      for (int64_t y = 0; y < Y; ++y)
        po[(b * Y + y) * X + x] = pa[(b * X + x) * Y + y];
  auto ai = a.impl(), oi = out.impl();
  finish_op("transpose_12", {&a}, out, [ai, oi, B, X, Y] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai)) {
      const double* pg = g->data();
      for (int64_t b = 0; b < B; ++b)
        for (int64_t x = 0; x < X; ++x)
          for (int64_t y = 0; y < Y; ++y)
            da[(b * X + x) * Y + y] += pg[(b * Y + y) * X + x];
    }
  });
  return out;
}

Tensor nchw_to_rows(const Tensor& a) {
  VPBSD_CHECK(a.ndim() >= 3, ErrorKind::Dimension,
              "nchw_to_rows expects [B,C,spatial...]");
  const int64_t B = a.dim(0), C = a.dim(1);
  int64_t S = 1;
  for (int i = 2; i < a.ndim(); ++i) S *= a.dim(i);
  Tensor out = Tensor::zeros({B * S, C});
  const double* pa = a.data().data();
  double* po = out.data().data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t c = 0; c < C; ++c) {
      const double* src = pa + (b * C + c) * S;
      double* dst = po + b * S * C + c;
      for (int64_t s = 0; s < S; ++s) dst[s * C] = src[s];
    }
  auto ai = a.impl(), oi = out.impl();
  finish_op("nchw_to_rows", {&a}, out, [ai, oi, B, C, S] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai)) {
      const double* pg = g->data();
      for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
          double* dst = da + (b * C + c) * S;
          const double* src = pg + b * S * C + c;
          for (int64_t s = 0; s < S; ++s) dst[s] += src[s * C];
        }
    }
  });
  return out;
}

Tensor rows_to_nchw(const Tensor& rows, const Shape& nchw_shape) {
  VPBSD_CHECK(rows.ndim() == 2, ErrorKind::Dimension, "rows_to_nchw expects [rows,C]");
  VPBSD_CHECK(nchw_shape.size() >= 3, ErrorKind::Dimension,
              "rows_to_nchw target must be [B,C,spatial...]");
  const int64_t B = nchw_shape[0], C = nchw_shape[1];
  int64_t S = 1;
  for (size_t i = 2; i < nchw_shape.size(); ++i) S *= nchw_shape[i];
  VPBSD_CHECK(rows.dim(0) == B * S && rows.dim(1) == C, ErrorKind::Dimension,
              "rows_to_nchw: row count/width do not match target shape");
  Tensor out = Tensor::zeros(nchw_shape);
  const double* pr = rows.data().data();
  double* po = out.data().data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t c = 0; c < C; ++c) {
      double* dst = po + (b * C + c) * S;
      const double* src = pr + b * S * C + c;
      for (int64_t s = 0; s < S; ++s) dst[s] = src[s * C];
    }
  auto ri = rows.impl(), oi = out.impl();
  finish_op("rows_to_nchw", {&rows}, out, [ri, oi, B, C, S] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* dr = grad_dst(ri)) {
      const double* pg = g->data();
      for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
          const double* src = pg + (b * C + c) * S;
          double* dst = dr + b * S * C + c;
          for (int64_t s = 0; s < S; ++s) dst[s * C] += src[s];
        }
    }
  });
  return out;
}

// ---- matmul -----------------------------------------------------------------

namespace {

// C[m,n] += A[m,k] * B[k,n]
void gemm_acc(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double a = a_row[p];
      const double* b_row = B + p * n;
      for (int64_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

// C[m,n] += A[m,k] * B^T where Bt is [n,k]
void gemm_bt_acc(const double* A, const double* Bt, double* C, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* b_row = Bt + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
      c_row[j] += acc;
    }
  }
}

// C[k,n] += A^T * B where A is [m,k], B is [m,n]
void gemm_at_acc(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    const double* b_row = B + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double a = a_row[p];
      double* c_row = C + p * n;
      for (int64_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const int an = a.ndim(), bn = b.ndim();
  VPBSD_CHECK((an == 2 && bn == 2) || (an == 3 && bn == 3) || (an == 3 && bn == 2),
              ErrorKind::Dimension, "matmul supports [m,k]x[k,n], [B,m,k]x[B,k,n], [B,m,k]x[k,n]");
  const int64_t B = an == 3 ? a.dim(0) : 1;
  const int64_t m = a.dim(an - 2), k = a.dim(an - 1);
  const int64_t kb = b.dim(bn - 2), n = b.dim(bn - 1);
  VPBSD_CHECK(k == kb, ErrorKind::Dimension,
              "matmul: inner axis mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  if (bn == 3)
    VPBSD_CHECK(b.dim(0) == B, ErrorKind::Dimension, "matmul: batch axis mismatch");

  Shape out_shape = an == 3 ? Shape{B, m, n} : Shape{m, n};
  Tensor out = Tensor::zeros(out_shape);
  const bool b_batched = (bn == 3);
  for (int64_t batch = 0; batch < B; ++batch) {
    const double* pa = a.data().data() + batch * m * k;
    const double* pb = b.data().data() + (b_batched ? batch * k * n : 0);
    double* po = out.data().data() + batch * m * n;
    gemm_acc(pa, pb, po, m, k, n);
  }
  auto ai = a.impl(), bi = b.impl(), oi = out.impl();
  finish_op("matmul", {&a, &b}, out, [ai, bi, oi, B, m, k, n, b_batched] {
    const auto* g = out_grad(oi);
    if (!g) return;
    double* da = grad_dst(ai);
    double* db = grad_dst(bi);
    for (int64_t batch = 0; batch < B; ++batch) {
      const double* pg = g->data() + batch * m * n;
      const double* pa = ai->data.data() + batch * m * k;
      const double* pb = bi->data.data() + (b_batched ? batch * k * n : 0);
      if (da) gemm_bt_acc(pg, pb, da + batch * m * k, m, n, k);  // dA = G * B^T
      if (db) gemm_at_acc(pa, pg, db + (b_batched ? batch * k * n : 0), m, k, n);  // dB = A^T * G
    }
  });
  return out;
}

Tensor softmax(const Tensor& a, int axis) {
  VPBSD_CHECK(axis >= 0 && axis < a.ndim(), ErrorKind::Dimension,
              "softmax: axis out of range");
  const int64_t L = a.dim(axis);
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= a.dim(i);
  for (int i = axis + 1; i < a.ndim(); ++i) inner *= a.dim(i);

  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data().data();
  double* po = out.data().data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t in = 0; in < inner; ++in) {
      const int64_t base = o * L * inner + in;
      double mx = pa[base];
      for (int64_t l = 1; l < L; ++l) mx = std::max(mx, pa[base + l * inner]);
      double denom = 0.0;
      for (int64_t l = 0; l < L; ++l) {
        double e = std::exp(pa[base + l * inner] - mx);
        po[base + l * inner] = e;
        denom += e;
      }
      double inv = 1.0 / denom;
      for (int64_t l = 0; l < L; ++l) po[base + l * inner] *= inv;
    }
  auto ai = a.impl(), oi = out.impl();
  finish_op("softmax", {&a}, out, [ai, oi, L, outer, inner] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* da = grad_dst(ai)) {
      const double* pg = g->data();
      const double* py = oi->data.data();
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
          const int64_t base = o * L * inner + in;
          double dot = 0.0;
          for (int64_t l = 0; l < L; ++l) dot += pg[base + l * inner] * py[base + l * inner];
          for (int64_t l = 0; l < L; ++l) {
            const int64_t idx = base + l * inner;
            da[idx] += (pg[idx] - dot) * py[idx];
          }
        }
    }
  });
  return out;
}

Tensor straight_through(const Tensor& soft, const std::vector<double>& hard) {
  VPBSD_CHECK(hard.size() == soft.data().size(), ErrorKind::Dimension,
              "straight_through: hard values size mismatch");
  Tensor out = Tensor::from(soft.shape(), hard);
  auto si = soft.impl(), oi = out.impl();
  finish_op("straight_through", {&soft}, out, [si, oi] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* ds = grad_dst(si))
      for (size_t i = 0; i < g->size(); ++i) ds[i] += (*g)[i];
  });
  return out;
}

}  // namespace vpbsd::tc
