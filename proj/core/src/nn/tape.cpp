#include "stablegrasp/nn/tape.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace sg::nn {

namespace {

constexpr float kLog2Pi = 1.8378770664093453f;

void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
              k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                Tensor::shape_str(a.shape) + " vs " + Tensor::shape_str(b.shape));
}

struct ConvDims {
  int batch, cin, h, w, cout, kh, kw, oh, ow, stride, pad, patch;
};

}  // namespace

ValueId Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&)> back) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  n->grad = Tensor(n->value.shape);
  n->back = std::move(back);
  n->needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

ValueId Tape::param(Parameter& p) {
  ValueId id = push(p.value, true, nullptr);
  node(id).parameter = &p;
  return id;
}

ValueId Tape::linear(ValueId x, ValueId w, ValueId b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (wv.ndim() != 2 || xv.cols() != wv.dim(0) || bv.numel() != wv.dim(1))
    throw std::invalid_argument("linear: shape mismatch x" + Tensor::shape_str(xv.shape) + " w" +
                                Tensor::shape_str(wv.shape) + " b" + Tensor::shape_str(bv.shape));
  int r = xv.rows(), in = wv.dim(0), out = wv.dim(1);
  Tensor y({r, out});
  for (int i = 0; i < r; ++i) std::memcpy(y.ptr() + i * out, bv.ptr(), sizeof(float) * out);
  gemm(false, false, r, out, in, 1.0f, xv.ptr(), in, wv.ptr(), out, 1.0f, y.ptr(), out);

  bool needs = ng(x) || ng(w) || ng(b);
  ValueId id = push(std::move(y), needs, [x, w, b, r, in, out](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    if (t.ng(x))
      gemm(false, true, r, in, out, 1.0f, dy, out, t.value(w).ptr(), out, 1.0f,
           t.grad_mut(x).ptr(), in);
    if (t.ng(w))
      gemm(true, false, in, out, r, 1.0f, t.value(x).ptr(), in, dy, out, 1.0f,
           t.grad_mut(w).ptr(), out);
    if (t.ng(b)) {
      float* db = t.grad_mut(b).ptr();
      for (int i = 0; i < r; ++i)
        for (int o = 0; o < out; ++o) db[o] += dy[i * out + o];
    }
  });
  return id;
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(1) != bv.dim(0))
    throw std::invalid_argument("matmul: shape mismatch " + Tensor::shape_str(av.shape) + " vs " +
                                Tensor::shape_str(bv.shape));
  int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor y({m, n});
  gemm(false, false, m, n, k, 1.0f, av.ptr(), k, bv.ptr(), n, 0.0f, y.ptr(), n);
  return push(std::move(y), ng(a) || ng(b), [a, b, m, n, k](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    if (t.ng(a))
      gemm(false, true, m, k, n, 1.0f, dy, n, t.value(b).ptr(), n, 1.0f, t.grad_mut(a).ptr(), k);
    if (t.ng(b))
      gemm(true, false, k, n, m, 1.0f, t.value(a).ptr(), k, dy, n, 1.0f, t.grad_mut(b).ptr(), n);
  });
}

ValueId Tape::transpose(ValueId a) {
  const Tensor& av = value(a);
  if (av.ndim() != 2) throw std::invalid_argument("transpose: expects rank-2 tensor");
  int m = av.dim(0), n = av.dim(1);
  Tensor y({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) y.data[j * m + i] = av.data[i * n + j];
  return push(std::move(y), ng(a), [a, m, n](Tape& t) {
    if (!t.ng(a)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* da = t.grad_mut(a).ptr();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) da[i * n + j] += dy[j * m + i];
  });
}

ValueId Tape::conv2d(ValueId x, ValueId kernel, ValueId bias, int stride, int padding) {
  const Tensor& xv = value(x);
  const Tensor& kv = value(kernel);
  const Tensor& bv = value(bias);
  if (xv.ndim() != 4 || kv.ndim() != 4 || kv.dim(1) != xv.dim(1) || bv.numel() != kv.dim(0))
    throw std::invalid_argument("conv2d: shape mismatch x" + Tensor::shape_str(xv.shape) + " k" +
                                Tensor::shape_str(kv.shape));
  ConvDims d;
  d.batch = xv.dim(0);
  d.cin = xv.dim(1);
  d.h = xv.dim(2);
  d.w = xv.dim(3);
  d.cout = kv.dim(0);
  d.kh = kv.dim(2);
  d.kw = kv.dim(3);
  d.stride = stride;
  d.pad = padding;
  if (d.kh > d.h + 2 * padding || d.kw > d.w + 2 * padding)
    throw std::invalid_argument("conv2d: kernel " + Tensor::shape_str(kv.shape) +
                                " larger than padded input " + Tensor::shape_str(xv.shape));
  d.oh = (d.h + 2 * padding - d.kh) / stride + 1;
  d.ow = (d.w + 2 * padding - d.kw) / stride + 1;
  d.patch = d.cin * d.kh * d.kw;

  int nrows = d.batch * d.oh * d.ow;
  auto patches = std::make_shared<std::vector<float>>(
      static_cast<size_t>(nrows) * static_cast<size_t>(d.patch), 0.0f);
  // im2col
  for (int b = 0; b < d.batch; ++b) {
    const float* xb = xv.ptr() + static_cast<size_t>(b) * d.cin * d.h * d.w;
    for (int oy = 0; oy < d.oh; ++oy)
      for (int ox = 0; ox < d.ow; ++ox) {
        float* row =
            patches->data() + (static_cast<size_t>(b) * d.oh * d.ow + oy * d.ow + ox) * d.patch;
        for (int c = 0; c < d.cin; ++c)
          for (int ky = 0; ky < d.kh; ++ky) {
            int iy = oy * stride - padding + ky;
            for (int kx = 0; kx < d.kw; ++kx) {
              int ix = ox * stride - padding + kx;
              float v = 0.0f;
              if (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w) v = xb[(c * d.h + iy) * d.w + ix];
              row[(c * d.kh + ky) * d.kw + kx] = v;
            }
          }
      }
  }

  // y2[nrows, cout] = patches * kernel^T, then rearrange to [b, cout, oh, ow]
  std::vector<float> y2(static_cast<size_t>(nrows) * d.cout);
  gemm(false, true, nrows, d.cout, d.patch, 1.0f, patches->data(), d.patch, kv.ptr(), d.patch,
       0.0f, y2.data(), d.cout);
  Tensor y({d.batch, d.cout, d.oh, d.ow});
  for (int b = 0; b < d.batch; ++b)
    for (int oy = 0; oy < d.oh; ++oy)
      for (int ox = 0; ox < d.ow; ++ox) {
        const float* src = y2.data() + (static_cast<size_t>(b) * d.oh * d.ow + oy * d.ow + ox) *
                                           static_cast<size_t>(d.cout);
        for (int oc = 0; oc < d.cout; ++oc)
          y.data[((static_cast<size_t>(b) * d.cout + oc) * d.oh + oy) * d.ow + ox] =
              src[oc] + bv.data[oc];
      }

  bool needs = ng(x) || ng(kernel) || ng(bias);
  return push(std::move(y), needs, [x, kernel, bias, d, nrows, patches](Tape& t) {
    const Tensor& dyt = t.grad(t.self_);
    // rearrange dy to [nrows, cout]
    std::vector<float> dy2(static_cast<size_t>(nrows) * d.cout);
    for (int b = 0; b < d.batch; ++b)
      for (int oc = 0; oc < d.cout; ++oc)
        for (int oy = 0; oy < d.oh; ++oy)
          for (int ox = 0; ox < d.ow; ++ox)
            dy2[(static_cast<size_t>(b) * d.oh * d.ow + oy * d.ow + ox) * d.cout + oc] =
                dyt.data[((static_cast<size_t>(b) * d.cout + oc) * d.oh + oy) * d.ow + ox];
    if (t.ng(bias)) {
      float* db = t.grad_mut(bias).ptr();
      for (int i = 0; i < nrows; ++i)
        for (int oc = 0; oc < d.cout; ++oc) db[oc] += dy2[static_cast<size_t>(i) * d.cout + oc];
    }
    if (t.ng(kernel))
      gemm(true, false, d.cout, d.patch, nrows, 1.0f, dy2.data(), d.cout, patches->data(),
           d.patch, 1.0f, t.grad_mut(kernel).ptr(), d.patch);
    if (t.ng(x)) {
      std::vector<float> dpatch(static_cast<size_t>(nrows) * d.patch);
      gemm(false, false, nrows, d.patch, d.cout, 1.0f, dy2.data(), d.cout, t.value(kernel).ptr(),
           d.patch, 0.0f, dpatch.data(), d.patch);
      float* dx = t.grad_mut(x).ptr();
      for (int b = 0; b < d.batch; ++b) {
        float* dxb = dx + static_cast<size_t>(b) * d.cin * d.h * d.w;
        for (int oy = 0; oy < d.oh; ++oy)
          for (int ox = 0; ox < d.ow; ++ox) {
            const float* row = dpatch.data() +
                               (static_cast<size_t>(b) * d.oh * d.ow + oy * d.ow + ox) * d.patch;
            for (int c = 0; c < d.cin; ++c)
              for (int ky = 0; ky < d.kh; ++ky) {
                int iy = oy * d.stride - d.pad + ky;
                if (iy < 0 || iy >= d.h) continue;
                for (int kx = 0; kx < d.kw; ++kx) {
                  int ix = ox * d.stride - d.pad + kx;
                  if (ix < 0 || ix >= d.w) continue;
                  dxb[(c * d.h + iy) * d.w + ix] += row[(c * d.kh + ky) * d.kw + kx];
                }
              }
          }
      }
    }
  });
}

ValueId Tape::batchnorm2d(ValueId x, ValueId gamma, ValueId beta, Parameter& running_mean,
                          Parameter& running_var, bool training, float momentum, float eps) {
  const Tensor& xv = value(x);
  if (xv.ndim() != 4) throw std::invalid_argument("batchnorm2d: expects [batch, c, h, w]");
  int b = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  if (value(gamma).numel() != c || value(beta).numel() != c ||
      running_mean.value.numel() != c || running_var.value.numel() != c)
    throw std::invalid_argument("batchnorm2d: affine/stat size must equal channel count");
  if (training && b < 2)
    throw std::invalid_argument("batchnorm2d: training mode requires batch >= 2, got " +
                                std::to_string(b));
  int m = b * h * w;
  auto xhat = std::make_shared<std::vector<float>>(static_cast<size_t>(xv.numel()));
  auto invstd = std::make_shared<std::vector<float>>(static_cast<size_t>(c));

  Tensor y(xv.shape);
  const float* g = value(gamma).ptr();
  const float* be = value(beta).ptr();
  for (int ch = 0; ch < c; ++ch) {
    float mean, var;
    if (training) {
      double s = 0.0;
      for (int bi = 0; bi < b; ++bi) {
        const float* p = xv.ptr() + ((static_cast<size_t>(bi) * c + ch) * h) * w;
        for (int i = 0; i < h * w; ++i) s += p[i];
      }
      mean = static_cast<float>(s / m);
      double sv = 0.0;
      for (int bi = 0; bi < b; ++bi) {
        const float* p = xv.ptr() + ((static_cast<size_t>(bi) * c + ch) * h) * w;
        for (int i = 0; i < h * w; ++i) {
          double dlt = p[i] - mean;
          sv += dlt * dlt;
        }
      }
      var = static_cast<float>(sv / m);
      running_mean.value.data[ch] = (1.0f - momentum) * running_mean.value.data[ch] + momentum * mean;
      float var_unbiased = m > 1 ? var * static_cast<float>(m) / static_cast<float>(m - 1) : var;
      running_var.value.data[ch] = (1.0f - momentum) * running_var.value.data[ch] + momentum * var_unbiased;
    } else {
      mean = running_mean.value.data[ch];
      var = running_var.value.data[ch];
    }
    float is = 1.0f / std::sqrt(var + eps);
    (*invstd)[ch] = is;
    for (int bi = 0; bi < b; ++bi) {
      const float* p = xv.ptr() + ((static_cast<size_t>(bi) * c + ch) * h) * w;
      float* xh = xhat->data() + ((static_cast<size_t>(bi) * c + ch) * h) * w;
      float* yp = y.ptr() + ((static_cast<size_t>(bi) * c + ch) * h) * w;
      for (int i = 0; i < h * w; ++i) {
        xh[i] = (p[i] - mean) * is;
        yp[i] = g[ch] * xh[i] + be[ch];
      }
    }
  }

  bool needs = ng(x) || ng(gamma) || ng(beta);
  return push(std::move(y), needs,
              [x, gamma, beta, b, c, h, w, m, training, xhat, invstd](Tape& t) {
                const float* dy = t.grad(t.self_).ptr();
                const float* g = t.value(gamma).ptr();
                for (int ch = 0; ch < c; ++ch) {
                  double sum_dy = 0.0, sum_dy_xh = 0.0;
                  for (int bi = 0; bi < b; ++bi) {
                    size_t off = ((static_cast<size_t>(bi) * c + ch) * h) * w;
                    for (int i = 0; i < h * w; ++i) {
                      sum_dy += dy[off + i];
                      sum_dy_xh += dy[off + i] * (*xhat)[off + i];
                    }
                  }
                  if (t.ng(gamma)) t.grad_mut(gamma).data[ch] += static_cast<float>(sum_dy_xh);
                  if (t.ng(beta)) t.grad_mut(beta).data[ch] += static_cast<float>(sum_dy);
                  if (t.ng(x)) {
                    float* dx = t.grad_mut(x).ptr();
                    float is = (*invstd)[ch];
                    float mdy = static_cast<float>(sum_dy / m);
                    float mdyxh = static_cast<float>(sum_dy_xh / m);
                    for (int bi = 0; bi < b; ++bi) {
                      size_t off = ((static_cast<size_t>(bi) * c + ch) * h) * w;
                      for (int i = 0; i < h * w; ++i) {
                        if (training)
                          dx[off + i] += g[ch] * is *
                                         (dy[off + i] - mdy - (*xhat)[off + i] * mdyxh);
                        else
                          dx[off + i] += g[ch] * is * dy[off + i];
                      }
                    }
                  }
                }
              });
}

ValueId Tape::layernorm(ValueId x, ValueId gamma, ValueId beta, float eps) {
  const Tensor& xv = value(x);
  int d = xv.cols(), r = xv.rows();
  if (value(gamma).numel() != d || value(beta).numel() != d)
    throw std::invalid_argument("layernorm: affine size " +
                                Tensor::shape_str(value(gamma).shape) +
                                " must match last dim " + std::to_string(d));
  auto xhat = std::make_shared<std::vector<float>>(static_cast<size_t>(xv.numel()));
  auto invstd = std::make_shared<std::vector<float>>(static_cast<size_t>(r));
  Tensor y(xv.shape);
  const float* g = value(gamma).ptr();
  const float* be = value(beta).ptr();
  for (int i = 0; i < r; ++i) {
    const float* p = xv.ptr() + static_cast<size_t>(i) * d;
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += p[j];
    float mean = static_cast<float>(s / d);
    double sv = 0.0;
    for (int j = 0; j < d; ++j) {
      double dlt = p[j] - mean;
      sv += dlt * dlt;
    }
    float is = 1.0f / std::sqrt(static_cast<float>(sv / d) + eps);
    (*invstd)[i] = is;
    float* xh = xhat->data() + static_cast<size_t>(i) * d;
    float* yp = y.ptr() + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      xh[j] = (p[j] - mean) * is;
      yp[j] = g[j] * xh[j] + be[j];
    }
  }
  bool needs = ng(x) || ng(gamma) || ng(beta);
  return push(std::move(y), needs, [x, gamma, beta, r, d, xhat, invstd](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    const float* g = t.value(gamma).ptr();
    for (int i = 0; i < r; ++i) {
      size_t off = static_cast<size_t>(i) * d;
      double s1 = 0.0, s2 = 0.0;
      for (int j = 0; j < d; ++j) {
        float dg = dy[off + j] * g[j];
        s1 += dg;
        s2 += dg * (*xhat)[off + j];
      }
      if (t.ng(gamma) || t.ng(beta)) {
        float* dgm = t.ng(gamma) ? t.grad_mut(gamma).ptr() : nullptr;
        float* dbt = t.ng(beta) ? t.grad_mut(beta).ptr() : nullptr;
        for (int j = 0; j < d; ++j) {
          if (dgm) dgm[j] += dy[off + j] * (*xhat)[off + j];
          if (dbt) dbt[j] += dy[off + j];
        }
      }
      if (t.ng(x)) {
        float* dx = t.grad_mut(x).ptr();
        float m1 = static_cast<float>(s1 / d), m2 = static_cast<float>(s2 / d);
        for (int j = 0; j < d; ++j)
          dx[off + j] += (*invstd)[i] * (dy[off + j] * g[j] - m1 - (*xhat)[off + j] * m2);
      }
    }
  });
}

ValueId Tape::attention(ValueId q, ValueId k, ValueId v, int num_heads, int batch, int nq,
                        int nk) {
  const Tensor& qv = value(q);
  const Tensor& kv = value(k);
  const Tensor& vv = value(v);
  int d = qv.cols();
  if (d % num_heads != 0)
    throw std::invalid_argument("attention: dim " + std::to_string(d) +
                                " not divisible by head count " + std::to_string(num_heads));
  if (qv.rows() != batch * nq || kv.rows() != batch * nk || kv.cols() != d ||
      !vv.same_shape(kv))
    throw std::invalid_argument("attention: shape mismatch q" + Tensor::shape_str(qv.shape) +
                                " k" + Tensor::shape_str(kv.shape) + " v" +
                                Tensor::shape_str(vv.shape));
  int dh = d / num_heads;
  float sc = 1.0f / std::sqrt(static_cast<float>(dh));
  auto weights = std::make_shared<std::vector<float>>(
      static_cast<size_t>(batch) * num_heads * nq * nk);
  Tensor y({batch * nq, d});
  std::vector<float> srow(static_cast<size_t>(nk));
  for (int b = 0; b < batch; ++b)
    for (int hd = 0; hd < num_heads; ++hd) {
      const float* qb = qv.ptr() + static_cast<size_t>(b) * nq * d + hd * dh;
      const float* kb = kv.ptr() + static_cast<size_t>(b) * nk * d + hd * dh;
      const float* vb = vv.ptr() + static_cast<size_t>(b) * nk * d + hd * dh;
      float* ab = weights->data() + (static_cast<size_t>(b) * num_heads + hd) * nq * nk;
      float* yb = y.ptr() + static_cast<size_t>(b) * nq * d + hd * dh;
      for (int i = 0; i < nq; ++i) {
        float mx = -1e30f;
        for (int j = 0; j < nk; ++j) {
          float s = 0.0f;
          for (int e = 0; e < dh; ++e) s += qb[i * d + e] * kb[j * d + e];
          srow[static_cast<size_t>(j)] = s * sc;
          mx = std::max(mx, srow[static_cast<size_t>(j)]);
        }
        float z = 0.0f;
        for (int j = 0; j < nk; ++j) {
          float e = std::exp(srow[static_cast<size_t>(j)] - mx);
          ab[i * nk + j] = e;
          z += e;
        }
        float iz = 1.0f / z;
        for (int j = 0; j < nk; ++j) ab[i * nk + j] *= iz;
        for (int e = 0; e < dh; ++e) {
          float acc = 0.0f;
          for (int j = 0; j < nk; ++j) acc += ab[i * nk + j] * vb[j * d + e];
          yb[i * d + e] = acc;
        }
      }
    }
  bool needs = ng(q) || ng(k) || ng(v);
  return push(std::move(y), needs,
              [q, k, v, num_heads, batch, nq, nk, d, dh, sc, weights](Tape& t) {
                const float* dy = t.grad(t.self_).ptr();
                const Tensor& qv = t.value(q);
                const Tensor& kv = t.value(k);
                const Tensor& vv = t.value(v);
                float* dq = t.ng(q) ? t.grad_mut(q).ptr() : nullptr;
                float* dk = t.ng(k) ? t.grad_mut(k).ptr() : nullptr;
                float* dv = t.ng(v) ? t.grad_mut(v).ptr() : nullptr;
                std::vector<float> da(static_cast<size_t>(nk));
                std::vector<float> ds(static_cast<size_t>(nk));
                for (int b = 0; b < batch; ++b)
                  for (int hd = 0; hd < num_heads; ++hd) {
                    const float* qb = qv.ptr() + static_cast<size_t>(b) * nq * d + hd * dh;
                    const float* kb = kv.ptr() + static_cast<size_t>(b) * nk * d + hd * dh;
                    const float* vb = vv.ptr() + static_cast<size_t>(b) * nk * d + hd * dh;
                    const float* ab =
                        weights->data() + (static_cast<size_t>(b) * num_heads + hd) * nq * nk;
                    const float* dyb = dy + static_cast<size_t>(b) * nq * d + hd * dh;
                    for (int i = 0; i < nq; ++i) {
                      double dot = 0.0;
                      for (int j = 0; j < nk; ++j) {
                        float s = 0.0f;
                        for (int e = 0; e < dh; ++e) s += dyb[i * d + e] * vb[j * d + e];
                        da[static_cast<size_t>(j)] = s;
                        dot += static_cast<double>(s) * ab[i * nk + j];
                      }
                      for (int j = 0; j < nk; ++j)
                        ds[static_cast<size_t>(j)] =
                            ab[i * nk + j] *
                            (da[static_cast<size_t>(j)] - static_cast<float>(dot));
                      for (int j = 0; j < nk; ++j) {
                        float dsj = ds[static_cast<size_t>(j)] * sc;
                        if (dq)
                          for (int e = 0; e < dh; ++e)
                            dq[static_cast<size_t>(b) * nq * d + hd * dh + i * d + e] +=
                                dsj * kb[j * d + e];
                        if (dk)
                          for (int e = 0; e < dh; ++e)
                            dk[static_cast<size_t>(b) * nk * d + hd * dh + j * d + e] +=
                                dsj * qb[i * d + e];
                        if (dv)
                          for (int e = 0; e < dh; ++e)
                            dv[static_cast<size_t>(b) * nk * d + hd * dh + j * d + e] +=
                                ab[i * nk + j] * dyb[i * d + e];
                      }
                    }
                  }
              });
}

// --- elementwise ---

ValueId Tape::relu(ValueId x) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv = vv > 0.0f ? vv : 0.0f;
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& xv = t.value(x);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < xv.numel(); ++i)
      if (xv.data[static_cast<size_t>(i)] > 0.0f) dx[i] += dy[i];
  });
}

ValueId Tape::tanh_(ValueId x) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv = std::tanh(vv);
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& yv = t.value(t.self_);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < yv.numel(); ++i) {
      float yy = yv.data[static_cast<size_t>(i)];
      dx[i] += dy[i] * (1.0f - yy * yy);
    }
  });
}

ValueId Tape::softplus(ValueId x) {
  Tensor y = value(x);
  for (auto& vv : y.data) {
    if (vv > 20.0f)
      ;  // softplus(x) ~ x
    else if (vv < -20.0f)
      vv = std::exp(vv);
    else
      vv = std::log1p(std::exp(vv));
  }
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& xv = t.value(x);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < xv.numel(); ++i) {
      float s = 1.0f / (1.0f + std::exp(-xv.data[static_cast<size_t>(i)]));
      dx[i] += dy[i] * s;
    }
  });
}

ValueId Tape::exp_(ValueId x) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv = std::exp(vv);
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& yv = t.value(t.self_);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < yv.numel(); ++i) dx[i] += dy[i] * yv.data[static_cast<size_t>(i)];
  });
}

ValueId Tape::log_(ValueId x) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv = std::log(vv);
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& xv = t.value(x);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < xv.numel(); ++i) dx[i] += dy[i] / xv.data[static_cast<size_t>(i)];
  });
}

ValueId Tape::square(ValueId x) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv = vv * vv;
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& xv = t.value(x);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < xv.numel(); ++i) dx[i] += dy[i] * 2.0f * xv.data[static_cast<size_t>(i)];
  });
}

ValueId Tape::clamp(ValueId x, float lo, float hi) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv = std::min(hi, std::max(lo, vv));
  return push(std::move(y), ng(x), [x, lo, hi](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& xv = t.value(x);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < xv.numel(); ++i) {
      float vv = xv.data[static_cast<size_t>(i)];
      if (vv > lo && vv < hi) dx[i] += dy[i];
    }
  });
}

ValueId Tape::scale(ValueId x, float s) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv *= s;
  return push(std::move(y), ng(x), [x, s](Tape& t) {
    if (!t.ng(x)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < t.value(x).numel(); ++i) dx[i] += dy[i] * s;
  });
}

ValueId Tape::add_scalar(ValueId x, float c) {
  Tensor y = value(x);
  for (auto& vv : y.data) vv += c;
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < t.value(x).numel(); ++i) dx[i] += dy[i];
  });
}

ValueId Tape::add(ValueId a, ValueId b) {
  check_same_shape("add", value(a), value(b));
  Tensor y = value(a);
  const Tensor& bv = value(b);
  for (int i = 0; i < y.numel(); ++i) y.data[static_cast<size_t>(i)] += bv.data[static_cast<size_t>(i)];
  return push(std::move(y), ng(a) || ng(b), [a, b](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    int n = t.value(a).numel();
    if (t.ng(a)) {
      float* da = t.grad_mut(a).ptr();
      for (int i = 0; i < n; ++i) da[i] += dy[i];
    }
    if (t.ng(b)) {
      float* db = t.grad_mut(b).ptr();
      for (int i = 0; i < n; ++i) db[i] += dy[i];
    }
  });
}

ValueId Tape::sub(ValueId a, ValueId b) {
  check_same_shape("sub", value(a), value(b));
  Tensor y = value(a);
  const Tensor& bv = value(b);
  for (int i = 0; i < y.numel(); ++i) y.data[static_cast<size_t>(i)] -= bv.data[static_cast<size_t>(i)];
  return push(std::move(y), ng(a) || ng(b), [a, b](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    int n = t.value(a).numel();
    if (t.ng(a)) {
      float* da = t.grad_mut(a).ptr();
      for (int i = 0; i < n; ++i) da[i] += dy[i];
    }
    if (t.ng(b)) {
      float* db = t.grad_mut(b).ptr();
      for (int i = 0; i < n; ++i) db[i] -= dy[i];
    }
  });
}

ValueId Tape::mul(ValueId a, ValueId b) {
  check_same_shape("mul", value(a), value(b));
  Tensor y = value(a);
  const Tensor& bv = value(b);
  for (int i = 0; i < y.numel(); ++i) y.data[static_cast<size_t>(i)] *= bv.data[static_cast<size_t>(i)];
  return push(std::move(y), ng(a) || ng(b), [a, b](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    int n = av.numel();
    if (t.ng(a)) {
      float* da = t.grad_mut(a).ptr();
      for (int i = 0; i < n; ++i) da[i] += dy[i] * bv.data[static_cast<size_t>(i)];
    }
    if (t.ng(b)) {
      float* db = t.grad_mut(b).ptr();
      for (int i = 0; i < n; ++i) db[i] += dy[i] * av.data[static_cast<size_t>(i)];
    }
  });
}

ValueId Tape::min_(ValueId a, ValueId b) {
  check_same_shape("min", value(a), value(b));
  Tensor y = value(a);
  const Tensor& bv = value(b);
  for (int i = 0; i < y.numel(); ++i)
    y.data[static_cast<size_t>(i)] =
        std::min(y.data[static_cast<size_t>(i)], bv.data[static_cast<size_t>(i)]);
  return push(std::move(y), ng(a) || ng(b), [a, b](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    for (int i = 0; i < av.numel(); ++i) {
      bool takes_a = av.data[static_cast<size_t>(i)] <= bv.data[static_cast<size_t>(i)];
      if (takes_a && t.ng(a)) t.grad_mut(a).data[static_cast<size_t>(i)] += dy[i];
      if (!takes_a && t.ng(b)) t.grad_mut(b).data[static_cast<size_t>(i)] += dy[i];
    }
  });
}

ValueId Tape::add_row(ValueId x, ValueId row) {
  const Tensor& xv = value(x);
  const Tensor& rv = value(row);
  int c = xv.cols(), r = xv.rows();
  if (rv.numel() != c)
    throw std::invalid_argument("add_row: row size " + std::to_string(rv.numel()) +
                                " != cols " + std::to_string(c));
  Tensor y = xv;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) y.data[static_cast<size_t>(i) * c + j] += rv.data[static_cast<size_t>(j)];
  return push(std::move(y), ng(x) || ng(row), [x, row, r, c](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    if (t.ng(x)) {
      float* dx = t.grad_mut(x).ptr();
      for (int i = 0; i < r * c; ++i) dx[i] += dy[i];
    }
    if (t.ng(row)) {
      float* dr = t.grad_mut(row).ptr();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) dr[j] += dy[i * c + j];
    }
  });
}

ValueId Tape::mul_row(ValueId x, ValueId row) {
  const Tensor& xv = value(x);
  const Tensor& rv = value(row);
  int c = xv.cols(), r = xv.rows();
  if (rv.numel() != c)
    throw std::invalid_argument("mul_row: row size " + std::to_string(rv.numel()) +
                                " != cols " + std::to_string(c));
  Tensor y = xv;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) y.data[static_cast<size_t>(i) * c + j] *= rv.data[static_cast<size_t>(j)];
  return push(std::move(y), ng(x) || ng(row), [x, row, r, c](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    const Tensor& xv = t.value(x);
    const Tensor& rv = t.value(row);
    if (t.ng(x)) {
      float* dx = t.grad_mut(x).ptr();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) dx[i * c + j] += dy[i * c + j] * rv.data[static_cast<size_t>(j)];
    }
    if (t.ng(row)) {
      float* dr = t.grad_mut(row).ptr();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) dr[j] += dy[i * c + j] * xv.data[static_cast<size_t>(i) * c + j];
    }
  });
}

ValueId Tape::softmax_rows(ValueId x) {
  const Tensor& xv = value(x);
  int c = xv.cols(), r = xv.rows();
  Tensor y = xv;
  for (int i = 0; i < r; ++i) {
    float* p = y.ptr() + static_cast<size_t>(i) * c;
    float mx = *std::max_element(p, p + c);
    float z = 0.0f;
    for (int j = 0; j < c; ++j) {
      p[j] = std::exp(p[j] - mx);
      z += p[j];
    }
    for (int j = 0; j < c; ++j) p[j] /= z;
  }
  return push(std::move(y), ng(x), [x, r, c](Tape& t) {
    if (!t.ng(x)) return;
    const Tensor& yv = t.value(t.self_);
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < r; ++i) {
      size_t off = static_cast<size_t>(i) * c;
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += static_cast<double>(dy[off + j]) * yv.data[off + j];
      for (int j = 0; j < c; ++j)
        dx[off + j] += yv.data[off + j] * (dy[off + j] - static_cast<float>(dot));
    }
  });
}

ValueId Tape::concat_cols(ValueId a, ValueId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  int r = av.rows();
  if (bv.rows() != r)
    throw std::invalid_argument("concat_cols: row mismatch " + Tensor::shape_str(av.shape) +
                                " vs " + Tensor::shape_str(bv.shape));
  int ca = av.cols(), cb = bv.cols();
  Tensor y({r, ca + cb});
  for (int i = 0; i < r; ++i) {
    std::memcpy(y.ptr() + static_cast<size_t>(i) * (ca + cb), av.ptr() + static_cast<size_t>(i) * ca,
                sizeof(float) * ca);
    std::memcpy(y.ptr() + static_cast<size_t>(i) * (ca + cb) + ca,
                bv.ptr() + static_cast<size_t>(i) * cb, sizeof(float) * cb);
  }
  return push(std::move(y), ng(a) || ng(b), [a, b, r, ca, cb](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    for (int i = 0; i < r; ++i) {
      if (t.ng(a)) {
        float* da = t.grad_mut(a).ptr();
        for (int j = 0; j < ca; ++j) da[i * ca + j] += dy[i * (ca + cb) + j];
      }
      if (t.ng(b)) {
        float* db = t.grad_mut(b).ptr();
        for (int j = 0; j < cb; ++j) db[i * cb + j] += dy[i * (ca + cb) + ca + j];
      }
    }
  });
}

ValueId Tape::concat_rows(ValueId a, ValueId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols() != bv.cols())
    throw std::invalid_argument("concat_rows: col mismatch " + Tensor::shape_str(av.shape) +
                                " vs " + Tensor::shape_str(bv.shape));
  int ra = av.rows(), rb = bv.rows(), c = av.cols();
  Tensor y({ra + rb, c});
  std::memcpy(y.ptr(), av.ptr(), sizeof(float) * static_cast<size_t>(ra) * c);
  std::memcpy(y.ptr() + static_cast<size_t>(ra) * c, bv.ptr(), sizeof(float) * static_cast<size_t>(rb) * c);
  return push(std::move(y), ng(a) || ng(b), [a, b, ra, rb, c](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    if (t.ng(a)) {
      float* da = t.grad_mut(a).ptr();
      for (int i = 0; i < ra * c; ++i) da[i] += dy[i];
    }
    if (t.ng(b)) {
      float* db = t.grad_mut(b).ptr();
      for (int i = 0; i < rb * c; ++i) db[i] += dy[static_cast<size_t>(ra) * c + i];
    }
  });
}

ValueId Tape::slice_cols(ValueId x, int c0, int c1) {
  const Tensor& xv = value(x);
  int c = xv.cols(), r = xv.rows();
  if (c0 < 0 || c1 > c || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") for cols " + std::to_string(c));
  int w = c1 - c0;
  Tensor y({r, w});
  for (int i = 0; i < r; ++i)
    std::memcpy(y.ptr() + static_cast<size_t>(i) * w, xv.ptr() + static_cast<size_t>(i) * c + c0,
                sizeof(float) * w);
  return push(std::move(y), ng(x), [x, r, c, c0, w](Tape& t) {
    if (!t.ng(x)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < w; ++j) dx[i * c + c0 + j] += dy[i * w + j];
  });
}

ValueId Tape::gather_rows(ValueId x, std::vector<int> indices) {
  const Tensor& xv = value(x);
  int c = xv.cols(), r = xv.rows();
  for (int idx : indices)
    if (idx < 0 || idx >= r)
      throw std::invalid_argument("gather_rows: index " + std::to_string(idx) +
                                  " out of range for " + std::to_string(r) + " rows");
  int n = static_cast<int>(indices.size());
  Tensor y({n, c});
  for (int i = 0; i < n; ++i)
    std::memcpy(y.ptr() + static_cast<size_t>(i) * c,
                xv.ptr() + static_cast<size_t>(indices[static_cast<size_t>(i)]) * c,
                sizeof(float) * c);
  auto idx = std::make_shared<std::vector<int>>(std::move(indices));
  return push(std::move(y), ng(x), [x, idx, c](Tape& t) {
    if (!t.ng(x)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (size_t i = 0; i < idx->size(); ++i)
      for (int j = 0; j < c; ++j)
        dx[static_cast<size_t>((*idx)[i]) * c + j] += dy[i * c + j];
  });
}

ValueId Tape::reshape(ValueId x, std::vector<int> shape) {
  Tensor y = value(x).reshaped(std::move(shape));
  return push(std::move(y), ng(x), [x](Tape& t) {
    if (!t.ng(x)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < t.value(x).numel(); ++i) dx[i] += dy[i];
  });
}

ValueId Tape::spatial_mean(ValueId x) {
  const Tensor& xv = value(x);
  if (xv.ndim() != 4) throw std::invalid_argument("spatial_mean: expects [n, c, h, w]");
  int n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Tensor y({n, c});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const float* p = xv.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      double s = 0.0;
      for (int j = 0; j < hw; ++j) s += p[j];
      y.data[static_cast<size_t>(i) * c + ch] = static_cast<float>(s / hw);
    }
  return push(std::move(y), ng(x), [x, n, c, hw](Tape& t) {
    if (!t.ng(x)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    float inv = 1.0f / static_cast<float>(hw);
    for (int i = 0; i < n * c; ++i)
      for (int j = 0; j < hw; ++j) dx[static_cast<size_t>(i) * hw + j] += dy[i] * inv;
  });
}

ValueId Tape::sum_cols(ValueId x) {
  const Tensor& xv = value(x);
  int c = xv.cols(), r = xv.rows();
  Tensor y({r, 1});
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += xv.data[static_cast<size_t>(i) * c + j];
    y.data[static_cast<size_t>(i)] = static_cast<float>(s);
  }
  return push(std::move(y), ng(x), [x, r, c](Tape& t) {
    if (!t.ng(x)) return;
    const float* dy = t.grad(t.self_).ptr();
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) dx[i * c + j] += dy[i];
  });
}

ValueId Tape::mean_all(ValueId x) {
  const Tensor& xv = value(x);
  double s = 0.0;
  for (float vv : xv.data) s += vv;
  int n = xv.numel();
  Tensor y({1});
  y.data[0] = static_cast<float>(s / n);
  return push(std::move(y), ng(x), [x, n](Tape& t) {
    if (!t.ng(x)) return;
    float g = t.grad(t.self_).data[0] / static_cast<float>(n);
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < n; ++i) dx[i] += g;
  });
}

ValueId Tape::sum_all(ValueId x) {
  const Tensor& xv = value(x);
  double s = 0.0;
  for (float vv : xv.data) s += vv;
  int n = xv.numel();
  Tensor y({1});
  y.data[0] = static_cast<float>(s);
  return push(std::move(y), ng(x), [x, n](Tape& t) {
    if (!t.ng(x)) return;
    float g = t.grad(t.self_).data[0];
    float* dx = t.grad_mut(x).ptr();
    for (int i = 0; i < n; ++i) dx[i] += g;
  });
}

ValueId Tape::gaussian_log_prob(ValueId mean, ValueId log_std, ValueId sample) {
  const Tensor& mv = value(mean);
  check_same_shape("gaussian_log_prob", mv, value(log_std));
  check_same_shape("gaussian_log_prob", mv, value(sample));
  int c = mv.cols(), r = mv.rows();
  Tensor y({r, 1});
  const Tensor& lv = value(log_std);
  const Tensor& sv = value(sample);
  for (int i = 0; i < r; ++i) {
    double lp = 0.0;
    for (int j = 0; j < c; ++j) {
      size_t o = static_cast<size_t>(i) * c + j;
      float sd = std::exp(lv.data[o]);
      float z = (sv.data[o] - mv.data[o]) / sd;
      lp += -0.5 * (static_cast<double>(z) * z + kLog2Pi) - lv.data[o];
    }
    y.data[static_cast<size_t>(i)] = static_cast<float>(lp);
  }
  bool needs = ng(mean) || ng(log_std) || ng(sample);
  return push(std::move(y), needs, [mean, log_std, sample, r, c](Tape& t) {
    const float* dy = t.grad(t.self_).ptr();
    const Tensor& mv = t.value(mean);
    const Tensor& lv = t.value(log_std);
    const Tensor& sv = t.value(sample);
    for (int i = 0; i < r; ++i) {
      float g = dy[i];
      for (int j = 0; j < c; ++j) {
        size_t o = static_cast<size_t>(i) * c + j;
        float sd = std::exp(lv.data[o]);
        float z = (sv.data[o] - mv.data[o]) / sd;
        if (t.ng(mean)) t.grad_mut(mean).data[o] += g * z / sd;
        if (t.ng(log_std)) t.grad_mut(log_std).data[o] += g * (z * z - 1.0f);
        if (t.ng(sample)) t.grad_mut(sample).data[o] += g * (-z / sd);
      }
    }
  });
}

void Tape::backward(ValueId loss) {
  if (value(loss).numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                Tensor::shape_str(value(loss).shape));
  for (auto& n : nodes_)
    for (auto& g : n->grad.data) g = 0.0f;
  node(loss).grad.data[0] = 1.0f;
  for (ValueId id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (!n.needs_grad || !n.back) continue;
    self_ = id;
    n.back(*this);
  }
  for (ValueId id = 0; id <= loss; ++id) {
    Node& n = node(id);
    if (!n.parameter) continue;
    auto& pg = n.parameter->grad.data;
    for (size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad.data[i];
  }
}

}  // namespace sg::nn
