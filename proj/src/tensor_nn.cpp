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
#include <cmath>
#include <cstring>

#include "vpbsd/tensor.hpp"

namespace vpbsd::tc {

namespace {

bool wants_grad2(const Tensor& a) { return a.requires_grad(); }

void finish(const char* name, std::initializer_list<const Tensor*> inputs,
            Tensor& out, std::function<void()> backward) {
  bool rg = false;
  for (const Tensor* t : inputs) rg = rg || wants_grad2(*t);
  out.set_requires_grad(rg);
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

double* grad_dst(const std::shared_ptr<TensorImpl>& t) {
  if (!t->requires_grad) return nullptr;
  t->ensure_grad();
  return t->grad.data();
}

const std::vector<double>* out_grad(const std::shared_ptr<TensorImpl>& t) {
  return t->grad.empty() ? nullptr : &t->grad;
}

struct ConvDims {
  int64_t B, C, D, H, W;    // input
  int64_t Cp, K;            // kernel
  int64_t Do, Ho, Wo;       // output
  int stride, padding;
};

// valid output range [lo, hi) for one axis given kernel offset `off` = k - pad
inline void axis_range(int64_t in_extent, int64_t out_extent, int stride,
                       int64_t off, int64_t& lo, int64_t& hi) {
  // need 0 <= o*stride + off < in_extent
  lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  int64_t max_o = (in_extent - 1 - off) >= 0 ? (in_extent - 1 - off) / stride : -1;
  hi = std::min(out_extent - 1, max_o) + 1;
  if (hi < lo) hi = lo;
}

ConvDims conv_dims(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                   int stride, int padding) {
  VPBSD_CHECK(input.ndim() == 5, ErrorKind::Dimension,
              "conv3: input must be [B,C,D,H,W], got " + shape_str(input.shape()));
  VPBSD_CHECK(kernel.ndim() == 5, ErrorKind::Dimension,
              "conv3: kernel must be [C',C,k,k,k], got " + shape_str(kernel.shape()));
  ConvDims d;
  d.B = input.dim(0); d.C = input.dim(1);
  d.D = input.dim(2); d.H = input.dim(3); d.W = input.dim(4);
  d.Cp = kernel.dim(0);
  d.K = kernel.dim(2);
  VPBSD_CHECK(kernel.dim(1) == d.C, ErrorKind::Dimension,
              "conv3: channel axis mismatch, input C=" + std::to_string(d.C) +
                  " vs kernel C=" + std::to_string(kernel.dim(1)));
  VPBSD_CHECK(kernel.dim(3) == d.K && kernel.dim(4) == d.K, ErrorKind::Dimension,
              "conv3: kernel must be cubic");
  VPBSD_CHECK(d.K % 2 == 1, ErrorKind::InvalidArgument, "conv3: kernel extent must be odd");
  VPBSD_CHECK(stride == 1 || stride == 2, ErrorKind::InvalidArgument,
              "conv3: stride must be 1 or 2");
  VPBSD_CHECK(padding >= 0, ErrorKind::InvalidArgument, "conv3: padding must be >= 0");
  VPBSD_CHECK(bias.ndim() == 1 && bias.dim(0) == d.Cp, ErrorKind::Dimension,
              "conv3: bias axis mismatch, expected [" + std::to_string(d.Cp) + "]");
  d.stride = stride;
  d.padding = padding;
  d.Do = (d.D + 2 * padding - d.K) / stride + 1;
  d.Ho = (d.H + 2 * padding - d.K) / stride + 1;
  d.Wo = (d.W + 2 * padding - d.K) / stride + 1;
  const char* axes[3] = {"depth", "height", "width"};
  int64_t outs[3] = {d.Do, d.Ho, d.Wo};
  int64_t ins[3] = {d.D, d.H, d.W};
  for (int i = 0; i < 3; ++i)
    VPBSD_CHECK(ins[i] + 2 * padding >= d.K && outs[i] >= 1, ErrorKind::Dimension,
                std::string("conv3: ") + axes[i] + " extent too small for kernel");
  return d;
}

void conv3_forward(const ConvDims& d, const double* in, const double* w,
                   const double* bias, double* out) {
  const int64_t in_sz = d.D * d.H * d.W;
  const int64_t out_sz = d.Do * d.Ho * d.Wo;
  parallel_for(d.B * d.Cp, [&](int64_t lo, int64_t hi) {
    for (int64_t bc = lo; bc < hi; ++bc) {
      const int64_t b = bc / d.Cp, co = bc % d.Cp;
      double* o_base = out + (b * d.Cp + co) * out_sz;
      const double bval = bias[co];
      for (int64_t i = 0; i < out_sz; ++i) o_base[i] = bval;
      for (int64_t ci = 0; ci < d.C; ++ci) {
        const double* i_base = in + (b * d.C + ci) * in_sz;
        const double* w_base = w + (co * d.C + ci) * d.K * d.K * d.K;
        for (int64_t kz = 0; kz < d.K; ++kz) {
          const int64_t offz = kz - d.padding;
          int64_t zlo, zhi;
          axis_range(d.D, d.Do, d.stride, offz, zlo, zhi);
          for (int64_t ky = 0; ky < d.K; ++ky) {
            const int64_t offy = ky - d.padding;
            int64_t ylo, yhi;
            axis_range(d.H, d.Ho, d.stride, offy, ylo, yhi);
            for (int64_t kx = 0; kx < d.K; ++kx) {
              const int64_t offx = kx - d.padding;
              int64_t xlo, xhi;
              axis_range(d.W, d.Wo, d.stride, offx, xlo, xhi);
              const double wv = w_base[(kz * d.K + ky) * d.K + kx];
              if (wv == 0.0) continue;
              for (int64_t oz = zlo; oz < zhi; ++oz) {
                const int64_t iz = oz * d.stride + offz;
                for (int64_t oy = ylo; oy < yhi; ++oy) {
                  const int64_t iy = oy * d.stride + offy;
                  const double* irow = i_base + (iz * d.H + iy) * d.W + offx;
                  double* orow = o_base + (oz * d.Ho + oy) * d.Wo;
                  if (d.stride == 1) {
                    for (int64_t ox = xlo; ox < xhi; ++ox) orow[ox] += wv * irow[ox];
                  } else {
                    for (int64_t ox = xlo; ox < xhi; ++ox) orow[ox] += wv * irow[ox * 2];
                  }
                }
              }
            }
          }
        }
      }
    }
  });
}

}  // namespace

Tensor conv3(const Tensor& input, const Tensor& kernel, const Tensor& bias,
             int stride, int padding) {
  const ConvDims d = conv_dims(input, kernel, bias, stride, padding);
  Tensor out = Tensor::zeros({d.B, d.Cp, d.Do, d.Ho, d.Wo});
  conv3_forward(d, input.data().data(), kernel.data().data(), bias.data().data(),
                out.data().data());
  auto ii = input.impl(), ki = kernel.impl(), bi = bias.impl(), oi = out.impl();
  finish("conv3", {&input, &kernel, &bias}, out, [ii, ki, bi, oi, d] {
    const auto* g = out_grad(oi);
    if (!g) return;
    const double* pg = g->data();
    const int64_t in_sz = d.D * d.H * d.W;
    const int64_t out_sz = d.Do * d.Ho * d.Wo;
    const int64_t kvol = d.K * d.K * d.K;

    if (double* dbias = grad_dst(bi)) {
      for (int64_t co = 0; co < d.Cp; ++co) {
        double acc = 0.0;
        for (int64_t b = 0; b < d.B; ++b) {
          const double* row = pg + (b * d.Cp + co) * out_sz;
          for (int64_t i = 0; i < out_sz; ++i) acc += row[i];
        }
        dbias[co] += acc;
      }
    }

    if (double* dw = grad_dst(ki)) {
      const double* pin = ii->data.data();
      parallel_for(d.Cp, [&](int64_t lo, int64_t hi) {
        for (int64_t co = lo; co < hi; ++co) {
          for (int64_t ci = 0; ci < d.C; ++ci) {
            double* dw_base = dw + (co * d.C + ci) * kvol;
            for (int64_t kz = 0; kz < d.K; ++kz) {
              const int64_t offz = kz - d.padding;
              int64_t zlo, zhi;
              axis_range(d.D, d.Do, d.stride, offz, zlo, zhi);
              for (int64_t ky = 0; ky < d.K; ++ky) {
                const int64_t offy = ky - d.padding;
                int64_t ylo, yhi;
                axis_range(d.H, d.Ho, d.stride, offy, ylo, yhi);
                for (int64_t kx = 0; kx < d.K; ++kx) {
                  const int64_t offx = kx - d.padding;
                  int64_t xlo, xhi;
                  axis_range(d.W, d.Wo, d.stride, offx, xlo, xhi);
                  double acc = 0.0;
                  for (int64_t b = 0; b < d.B; ++b) {
                    const double* i_base = pin + (b * d.C + ci) * in_sz;
                    const double* g_base = pg + (b * d.Cp + co) * out_sz;
                    for (int64_t oz = zlo; oz < zhi; ++oz) {
                      const int64_t iz = oz * d.stride + offz;
                      for (int64_t oy = ylo; oy < yhi; ++oy) {
                        const int64_t iy = oy * d.stride + offy;
                        const double* irow = i_base + (iz * d.H + iy) * d.W + offx;
                        const double* grow = g_base + (oz * d.Ho + oy) * d.Wo;
                        if (d.stride == 1) {
                          for (int64_t ox = xlo; ox < xhi; ++ox) acc += grow[ox] * irow[ox];
                        } else {
                          for (int64_t ox = xlo; ox < xhi; ++ox) acc += grow[ox] * irow[ox * 2];
                        }
                      }
                    }
                  }
                  dw_base[(kz * d.K + ky) * d.K + kx] += acc;
                }
              }
            }
          }
        }
      });
    }

    if (double* din = grad_dst(ii)) {
      const double* pw = ki->data.data();
      parallel_for(d.B * d.C, [&](int64_t lo, int64_t hi) {
        for (int64_t bc = lo; bc < hi; ++bc) {
          const int64_t b = bc / d.C, ci = bc % d.C;
          double* di_base = din + (b * d.C + ci) * in_sz;
          for (int64_t co = 0; co < d.Cp; ++co) {
            const double* g_base = pg + (b * d.Cp + co) * out_sz;
            const double* w_base = pw + (co * d.C + ci) * kvol;
            for (int64_t kz = 0; kz < d.K; ++kz) {
              const int64_t offz = kz - d.padding;
              int64_t zlo, zhi;
              axis_range(d.D, d.Do, d.stride, offz, zlo, zhi);
              for (int64_t ky = 0; ky < d.K; ++ky) {
                const int64_t offy = ky - d.padding;
                int64_t ylo, yhi;
                axis_range(d.H, d.Ho, d.stride, offy, ylo, yhi);
                for (int64_t kx = 0; kx < d.K; ++kx) {
                  const int64_t offx = kx - d.padding;
                  int64_t xlo, xhi;
                  axis_range(d.W, d.Wo, d.stride, offx, xlo, xhi);
                  const double wv = w_base[(kz * d.K + ky) * d.K + kx];
                  if (wv == 0.0) continue;
                  for (int64_t oz = zlo; oz < zhi; ++oz) {
                    const int64_t iz = oz * d.stride + offz;
                    for (int64_t oy = ylo; oy < yhi; ++oy) {
                      const int64_t iy = oy * d.stride + offy;
                      double* drow = di_base + (iz * d.H + iy) * d.W + offx;
                      const double* grow = g_base + (oz * d.Ho + oy) * d.Wo;
                      if (d.stride == 1) {
                        for (int64_t ox = xlo; ox < xhi; ++ox) drow[ox] += wv * grow[ox];
                      } else {
                        for (int64_t ox = xlo; ox < xhi; ++ox) drow[ox * 2] += wv * grow[ox];
                      }
                    }
                  }
                }
              }
            }
          }
        }
      });
    }
  });
  return out;
}

Tensor group_norm(const Tensor& input, int groups, const Tensor& gamma,
                  const Tensor& beta, double eps) {
  VPBSD_CHECK(input.ndim() == 5, ErrorKind::Dimension,
              "group_norm: input must be [B,C,D,H,W]");
  const int64_t B = input.dim(0), C = input.dim(1);
  const int64_t S = input.dim(2) * input.dim(3) * input.dim(4);
  VPBSD_CHECK(groups >= 1 && C % groups == 0, ErrorKind::Config,
              "group_norm: channel count " + std::to_string(C) +
                  " not divisible by groups " + std::to_string(groups));
  VPBSD_CHECK(eps > 0.0, ErrorKind::InvalidArgument, "group_norm: eps must be > 0");
  VPBSD_CHECK(gamma.ndim() == 1 && gamma.dim(0) == C, ErrorKind::Dimension,
              "group_norm: gamma must be [C]");
  VPBSD_CHECK(beta.ndim() == 1 && beta.dim(0) == C, ErrorKind::Dimension,
              "group_norm: beta must be [C]");

  const int64_t cpg = C / groups;
  const int64_t gs = cpg * S;  // elements per (batch, group)
  Tensor out = Tensor::zeros(input.shape());

  // saved for backward
  auto xhat = std::make_shared<std::vector<double>>(input.data().size());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(B * groups));

  const double* pin = input.data().data();
  const double* pgm = gamma.data().data();
  const double* pbt = beta.data().data();
  double* pout = out.data().data();
  double* pxh = xhat->data();

  parallel_for(B * groups, [&](int64_t lo, int64_t hi) {
    for (int64_t bg = lo; bg < hi; ++bg) {
      const int64_t b = bg / groups, g = bg % groups;
      const int64_t base = (b * C + g * cpg) * S;
      double m = 0.0;
      for (int64_t i = 0; i < gs; ++i) m += pin[base + i];
      m /= static_cast<double>(gs);
      double var = 0.0;
      for (int64_t i = 0; i < gs; ++i) {
        const double dv = pin[base + i] - m;
        var += dv * dv;
      }
      var /= static_cast<double>(gs);
      const double istd = 1.0 / std::sqrt(var + eps);
      (*inv_std)[static_cast<size_t>(bg)] = istd;
      for (int64_t c = 0; c < cpg; ++c) {
        const double gm = pgm[g * cpg + c];
        const double bt = pbt[g * cpg + c];
        const int64_t cb = base + c * S;
        for (int64_t i = 0; i < S; ++i) {
          const double xh = (pin[cb + i] - m) * istd;
          pxh[cb + i] = xh;
          pout[cb + i] = gm * xh + bt;
        }
      }
    }
  });

  auto ii = input.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
  finish("group_norm", {&input, &gamma, &beta}, out,
         [ii, gi, bi, oi, xhat, inv_std, B, C, S, groups, cpg, gs] {
    const auto* g = out_grad(oi);
    if (!g) return;
    const double* pg = g->data();
    const double* pxh = xhat->data();
    const double* pgm = gi->data.data();

    if (double* dgm = grad_dst(gi)) {
      for (int64_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int64_t b = 0; b < B; ++b) {
          const int64_t base = (b * C + c) * S;
          for (int64_t i = 0; i < S; ++i) acc += pg[base + i] * pxh[base + i];
        }
        dgm[c] += acc;
      }
    }
    if (double* dbt = grad_dst(bi)) {
      for (int64_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int64_t b = 0; b < B; ++b) {
          const int64_t base = (b * C + c) * S;
          for (int64_t i = 0; i < S; ++i) acc += pg[base + i];
        }
        dbt[c] += acc;
      }
    }
    if (double* din = grad_dst(ii)) {
      parallel_for(B * groups, [&](int64_t lo, int64_t hi) {
        for (int64_t bg = lo; bg < hi; ++bg) {
          const int64_t b = bg / groups, grp = bg % groups;
          const int64_t base = (b * C + grp * cpg) * S;
          const double istd = (*inv_std)[static_cast<size_t>(bg)];
          double mean_h = 0.0, mean_hx = 0.0;
          for (int64_t c = 0; c < cpg; ++c) {
            const double gm = pgm[grp * cpg + c];
            const int64_t cb = base + c * S;
            for (int64_t i = 0; i < S; ++i) {
              const double h = pg[cb + i] * gm;
              mean_h += h;
              mean_hx += h * pxh[cb + i];
            }
          }
          mean_h /= static_cast<double>(gs);
          mean_hx /= static_cast<double>(gs);
          for (int64_t c = 0; c < cpg; ++c) {
            const double gm = pgm[grp * cpg + c];
            const int64_t cb = base + c * S;
            for (int64_t i = 0; i < S; ++i) {
              const double h = pg[cb + i] * gm;
              din[cb + i] += istd * (h - mean_h - pxh[cb + i] * mean_hx);
            }
          }
        }
      });
    }
  });
  return out;
}

Tensor upsample_nearest(const Tensor& input, int factor) {
  VPBSD_CHECK(input.ndim() == 5, ErrorKind::Dimension,
              "upsample_nearest: input must be [B,C,D,H,W]");
  VPBSD_CHECK(factor >= 1, ErrorKind::InvalidArgument, "upsample_nearest: factor must be >= 1");
  const int64_t B = input.dim(0), C = input.dim(1);
  const int64_t D = input.dim(2), H = input.dim(3), W = input.dim(4);
  const int64_t f = factor;
  Tensor out = Tensor::zeros({B, C, D * f, H * f, W * f});
  const double* pin = input.data().data();
  double* pout = out.data().data();
  const int64_t Ho = H * f, Wo = W * f;
  parallel_for(B * C, [&](int64_t lo, int64_t hi) {
    for (int64_t bc = lo; bc < hi; ++bc) {
      const double* ib = pin + bc * D * H * W;
      double* ob = pout + bc * D * f * Ho * Wo;
      for (int64_t z = 0; z < D * f; ++z) {
        const int64_t iz = z / f;
        for (int64_t y = 0; y < Ho; ++y) {
          const int64_t iy = y / f;
          const double* irow = ib + (iz * H + iy) * W;
          double* orow = ob + (z * Ho + y) * Wo;
          for (int64_t x = 0; x < Wo; ++x) orow[x] = irow[x / f];
        }
      }
    }
  });
  auto ii = input.impl(), oi = out.impl();
  finish("upsample_nearest", {&input}, out, [ii, oi, B, C, D, H, W, f] {
    const auto* g = out_grad(oi);
    if (!g) return;
    if (double* din = grad_dst(ii)) {
      const double* pg = g->data();
      const int64_t Ho = H * f, Wo = W * f;
      parallel_for(B * C, [&](int64_t lo, int64_t hi) {
        for (int64_t bc = lo; bc < hi; ++bc) {
          double* db = din + bc * D * H * W;
          const double* gb = pg + bc * D * f * Ho * Wo;
          for (int64_t z = 0; z < D * f; ++z) {
            const int64_t iz = z / f;
            for (int64_t y = 0; y < Ho; ++y) {
              const int64_t iy = y / f;
              double* drow = db + (iz * H + iy) * W;
              const double* grow = gb + (z * Ho + y) * Wo;
              for (int64_t x = 0; x < Wo; ++x) drow[x / f] += grow[x];
            }
          }
        }
      });
    }
  });
  return out;
}

Tensor pairwise_sqdist(const Tensor& z, const Tensor& v) {
  VPBSD_CHECK(z.ndim() == 2 && v.ndim() == 2, ErrorKind::Dimension,
              "pairwise_sqdist expects [m,d] and [n,d]");
  VPBSD_CHECK(z.dim(1) == v.dim(1), ErrorKind::Dimension,
              "pairwise_sqdist: feature widths differ");
  const int64_t m = z.dim(0), n = v.dim(0), d = z.dim(1);
  Tensor out = Tensor::zeros({m, n});
  const double* pz = z.data().data();
  const double* pv = v.data().data();
  double* po = out.data().data();
  parallel_for(m, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) {
      const double* zi = pz + i * d;
      double* orow = po + i * n;
      for (int64_t j = 0; j < n; ++j) {
        const double* vj = pv + j * d;
        double acc = 0.0;
        for (int64_t k = 0; k < d; ++k) {
          const double diff = zi[k] - vj[k];
          acc += diff * diff;
        }
        orow[j] = acc;
      }
    }
  });
  auto zi_ = z.impl(), vi_ = v.impl(), oi = out.impl();
  finish("pairwise_sqdist", {&z, &v}, out, [zi_, vi_, oi, m, n, d] {
    const auto* g = out_grad(oi);
    if (!g) return;
    const double* pg = g->data();
    const double* pz = zi_->data.data();
    const double* pv = vi_->data.data();
    if (double* dz = grad_dst(zi_)) {
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
          const double gv = 2.0 * pg[i * n + j];
          if (gv == 0.0) continue;
          for (int64_t k = 0; k < d; ++k)
            dz[i * d + k] += gv * (pz[i * d + k] - pv[j * d + k]);
        }
    }
    if (double* dv = grad_dst(vi_)) {
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
          const double gv = 2.0 * pg[i * n + j];
          if (gv == 0.0) continue;
          for (int64_t k = 0; k < d; ++k)
            dv[j * d + k] += gv * (pv[j * d + k] - pz[i * d + k]);
        }
    }
  });
  return out;
}

Tensor self_attention(const Tensor& tokens, const Tensor& wq, const Tensor& wk,
                      const Tensor& wv, const Tensor& wo) {
  VPBSD_CHECK(tokens.ndim() == 3, ErrorKind::Dimension,
              "self_attention: tokens must be [B,T,d]");
  const int64_t d = tokens.dim(2);
  for (const Tensor* w : {&wq, &wk, &wv, &wo})
    VPBSD_CHECK(w->ndim() == 2 && w->dim(0) == d && w->dim(1) == d, ErrorKind::Dimension,
                "self_attention: projections must be square [d,d] with d=" + std::to_string(d));
  Tensor q = matmul(tokens, wq);
  Tensor k = matmul(tokens, wk);
  Tensor v = matmul(tokens, wv);
  Tensor scores = mul_scalar(matmul(q, transpose_12(k)), 1.0 / std::sqrt(static_cast<double>(d)));
  Tensor attn = softmax(scores, 2);
  Tensor ctx = matmul(attn, v);
  return matmul(ctx, wo);
}

// ---- Adam -------------------------------------------------------------------

Adam::Adam(std::vector<Tensor> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.data().size(), 0.0);
    v_.emplace_back(p.data().size(), 0.0);
  }
}

void Adam::step(double lr) {
  VPBSD_CHECK(lr > 0.0, ErrorKind::Config, "adam: learning rate must be > 0");
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi];
    auto& data = p.data();
    auto& m = m_[pi];
    auto& v = v_[pi];
    const bool has_g = p.has_grad();
    const double* g = has_g ? p.raw()->grad.data() : nullptr;
    for (size_t i = 0; i < data.size(); ++i) {
      const double gi = has_g ? g[i] : 0.0;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      data[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace vpbsd::tc
