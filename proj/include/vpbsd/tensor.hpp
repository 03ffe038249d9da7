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
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vpbsd/common.hpp"
#include "vpbsd/rng.hpp"

namespace vpbsd::tc {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major double tensor. grad, when allocated, mirrors data's shape.
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // elementwise draws from rng
  static Tensor randn(const Shape& shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);
  static Tensor rand_uniform(const Shape& shape, Rng& rng, double lo, double hi, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t numel() const { return impl_->numel(); }
  int64_t dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }

  std::vector<double>& data() { return impl_->data; }
  const std::vector<double>& data() const { return impl_->data; }
  std::vector<double>& grad() { impl_->ensure_grad(); return impl_->grad; }
  bool has_grad() const { return !impl_->grad.empty(); }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }
  void zero_grad() { if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

  double item() const;

  // Copy that shares no graph history and never requires grad: the
  // stop-gradient barrier.
  Tensor detach() const;
  Tensor clone() const;

  std::shared_ptr<TensorImpl> impl() const { return impl_; }
  TensorImpl* raw() const { return impl_.get(); }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Recorded forward pass. Ops append one node each; backward replays the list
// in reverse, visiting every node exactly once.
class Tape {
 public:
  struct Node {
    const char* op;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::shared_ptr<TensorImpl> output;
    std::function<void()> backward;
  };

  void record(Node n) { nodes_.push_back(std::move(n)); }
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // loss must be scalar; fills grads of every requires_grad tensor reachable
  // from it. Does not clear the tape, so a second call (after zeroing grads)
  // replays identically.
  void backward(const Tensor& loss);

  static Tape* active();

 private:
  std::vector<Node> nodes_;
  friend class TapeScope;
};

// RAII activation of a tape on the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

// ---- operator set ---------------------------------------------------------
// Same-shape elementwise ops plus the specific NN ops the networks need.
// No general broadcasting.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor abs(const Tensor& a);  // subgradient 0 at ties
Tensor leaky_relu(const Tensor& a, double slope);
Tensor sigmoid(const Tensor& a);
Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

Tensor reshape(const Tensor& a, const Shape& shape);
// [B,X,Y] -> [B,Y,X]
Tensor transpose_12(const Tensor& a);
// [B,C,spatial...] -> [B*prod(spatial), C]; rows ordered batch-major then
// raster order over the spatial extents
Tensor nchw_to_rows(const Tensor& a);
Tensor rows_to_nchw(const Tensor& rows, const Shape& nchw_shape);

// matmul: [m,k]x[k,n], [B,m,k]x[B,k,n], or [B,m,k]x[k,n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax(const Tensor& a, int axis);

// Direct cross-correlation. input [B,C,D,H,W], kernel [C',C,k,k,k], bias [C'].
Tensor conv3(const Tensor& input, const Tensor& kernel, const Tensor& bias,
             int stride, int padding);
Tensor group_norm(const Tensor& input, int groups, const Tensor& gamma,
                  const Tensor& beta, double eps);
Tensor upsample_nearest(const Tensor& input, int factor);

// squared Euclidean distances between row sets: z [m,d], v [n,d] -> [m,n]
Tensor pairwise_sqdist(const Tensor& z, const Tensor& v);

// Forward takes `hard` values; backward passes gradients to `soft` unchanged.
Tensor straight_through(const Tensor& soft, const std::vector<double>& hard);

// softmax(QK^T/sqrt(d))·V then output projection; residual is added by the
// caller. tokens [B,T,d]; all projections [d,d].
Tensor self_attention(const Tensor& tokens, const Tensor& wq, const Tensor& wk,
                      const Tensor& wv, const Tensor& wo);

// ---- optimizer ------------------------------------------------------------

struct NamedParam {
  std::string name;
  Tensor tensor;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // lr already includes any epoch decay applied by the caller
  void step(double lr);
  void zero_grad();

  int64_t step_count() const { return step_count_; }
  // moment access for checkpointing; indices follow the params order
  std::vector<Tensor>& params() { return params_; }
  std::vector<std::vector<double>>& m() { return m_; }
  std::vector<std::vector<double>>& v() { return v_; }
  void set_step_count(int64_t t) { step_count_ = t; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  int64_t step_count_ = 0;
};

}  // namespace vpbsd::tc
