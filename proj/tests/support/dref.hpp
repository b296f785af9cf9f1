#pragma once

// Double-precision reference forwards for the gradient oracle. Each layer
// is restated from the math, independent of the tape, and evaluated in
// double so central differences are free of f32 noise.

#include <cmath>
#include <string>
#include <vector>

#include "stablegrasp/env/env.hpp"
#include "stablegrasp/nn/params.hpp"
#include "stablegrasp/policy/encoders.hpp"

namespace sg::test::dref {

using Vec = std::vector<double>;

struct T2 {
  Vec v;
  int r = 0, c = 0;
};

struct T4 {
  Vec v;
  int n = 0, c = 0, h = 0, w = 0;
};

inline Vec vec(const nn::Tensor& t) { return Vec(t.data.begin(), t.data.end()); }

inline Vec pvec(const nn::ParameterSet& ps, const std::string& name) {
  return vec(ps.at(name).value);
}

inline void relu_(Vec& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

inline void tanh_(Vec& v) {
  for (double& x : v) x = std::tanh(x);
}

inline double mse(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

inline T2 linear(const T2& x, const Vec& w, const Vec& b, int out) {
  T2 y;
  y.r = x.r;
  y.c = out;
  y.v.assign(static_cast<size_t>(x.r) * out, 0.0);
  for (int i = 0; i < x.r; ++i)
    for (int j = 0; j < out; ++j) {
      double s = b[static_cast<size_t>(j)];
      for (int e = 0; e < x.c; ++e)
        s += x.v[static_cast<size_t>(i) * x.c + e] * w[static_cast<size_t>(e) * out + j];
      y.v[static_cast<size_t>(i) * out + j] = s;
    }
  return y;
}

inline T4 conv2d(const T4& x, const Vec& k, const Vec& bias, int cout, int kh, int kw,
                 int stride, int pad) {
  T4 y;
  y.n = x.n;
  y.c = cout;
  y.h = (x.h + 2 * pad - kh) / stride + 1;
  y.w = (x.w + 2 * pad - kw) / stride + 1;
  y.v.assign(static_cast<size_t>(y.n) * cout * y.h * y.w, 0.0);
  for (int b = 0; b < x.n; ++b)
    for (int oc = 0; oc < cout; ++oc)
      for (int oy = 0; oy < y.h; ++oy)
        for (int ox = 0; ox < y.w; ++ox) {
          double s = bias[static_cast<size_t>(oc)];
          for (int c = 0; c < x.c; ++c)
            for (int ky = 0; ky < kh; ++ky) {
              int iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= x.h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                int ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= x.w) continue;
                s += x.v[((static_cast<size_t>(b) * x.c + c) * x.h + iy) * x.w + ix] *
                     k[((static_cast<size_t>(oc) * x.c + c) * kh + ky) * kw + kx];
              }
            }
          y.v[((static_cast<size_t>(b) * cout + oc) * y.h + oy) * y.w + ox] = s;
        }
  return y;
}

inline T4 batchnorm_train(const T4& x, const Vec& g, const Vec& b, double eps = 1e-5) {
  T4 y = x;
  int m = x.n * x.h * x.w;
  for (int ch = 0; ch < x.c; ++ch) {
    double mean = 0.0;
    for (int bi = 0; bi < x.n; ++bi) {
      size_t off = (static_cast<size_t>(bi) * x.c + ch) * x.h * x.w;
      for (int i = 0; i < x.h * x.w; ++i) mean += x.v[off + i];
    }
    mean /= m;
    double var = 0.0;
    for (int bi = 0; bi < x.n; ++bi) {
      size_t off = (static_cast<size_t>(bi) * x.c + ch) * x.h * x.w;
      for (int i = 0; i < x.h * x.w; ++i) var += (x.v[off + i] - mean) * (x.v[off + i] - mean);
    }
    var /= m;
    double is = 1.0 / std::sqrt(var + eps);
    for (int bi = 0; bi < x.n; ++bi) {
      size_t off = (static_cast<size_t>(bi) * x.c + ch) * x.h * x.w;
      for (int i = 0; i < x.h * x.w; ++i)
        y.v[off + i] = g[static_cast<size_t>(ch)] * (x.v[off + i] - mean) * is +
                       b[static_cast<size_t>(ch)];
    }
  }
  return y;
}

inline T2 layernorm(const T2& x, const Vec& g, const Vec& b, double eps = 1e-5) {
  T2 y = x;
  for (int i = 0; i < x.r; ++i) {
    size_t off = static_cast<size_t>(i) * x.c;
    double mean = 0.0;
    for (int j = 0; j < x.c; ++j) mean += x.v[off + j];
    mean /= x.c;
    double var = 0.0;
    for (int j = 0; j < x.c; ++j) var += (x.v[off + j] - mean) * (x.v[off + j] - mean);
    var /= x.c;
    double is = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < x.c; ++j)
      y.v[off + j] = g[static_cast<size_t>(j)] * (x.v[off + j] - mean) * is +
                     b[static_cast<size_t>(j)];
  }
  return y;
}

inline T2 attention(const T2& q, const T2& k, const T2& v, int heads, int batch, int nq,
                    int nk) {
  int d = q.c, dh = d / heads;
  double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  T2 y;
  y.r = batch * nq;
  y.c = d;
  y.v.assign(static_cast<size_t>(y.r) * d, 0.0);
  Vec a(static_cast<size_t>(nk));
  for (int b = 0; b < batch; ++b)
    for (int hd = 0; hd < heads; ++hd) {
      size_t qo = static_cast<size_t>(b) * nq * d + hd * dh;
      size_t ko = static_cast<size_t>(b) * nk * d + hd * dh;
      for (int i = 0; i < nq; ++i) {
        double mx = -1e300;
        for (int j = 0; j < nk; ++j) {
          double s = 0.0;
          for (int e = 0; e < dh; ++e) s += q.v[qo + i * d + e] * k.v[ko + j * d + e];
          a[static_cast<size_t>(j)] = s * sc;
          mx = std::max(mx, a[static_cast<size_t>(j)]);
        }
        double z = 0.0;
        for (int j = 0; j < nk; ++j) {
          a[static_cast<size_t>(j)] = std::exp(a[static_cast<size_t>(j)] - mx);
          z += a[static_cast<size_t>(j)];
        }
        for (int j = 0; j < nk; ++j) a[static_cast<size_t>(j)] /= z;
        for (int e = 0; e < dh; ++e) {
          double acc = 0.0;
          for (int j = 0; j < nk; ++j) acc += a[static_cast<size_t>(j)] * v.v[ko + j * d + e];
          y.v[qo + i * d + e] = acc;
        }
      }
    }
  return y;
}

inline T2 spatial_mean(const T4& x) {
  T2 y;
  y.r = x.n;
  y.c = x.c;
  y.v.assign(static_cast<size_t>(x.n) * x.c, 0.0);
  int hw = x.h * x.w;
  for (int i = 0; i < x.n; ++i)
    for (int ch = 0; ch < x.c; ++ch) {
      double s = 0.0;
      size_t off = (static_cast<size_t>(i) * x.c + ch) * hw;
      for (int j = 0; j < hw; ++j) s += x.v[off + j];
      y.v[static_cast<size_t>(i) * x.c + ch] = s / hw;
    }
  return y;
}

// q = mha(query, context) with the module's packed projections
inline T2 mha(const nn::ParameterSet& ps, const std::string& prefix, const T2& query,
              const T2& context, int heads, int batch, int nq, int nk) {
  int d = query.c;
  T2 q = linear(query, pvec(ps, prefix + ".wq.w"), pvec(ps, prefix + ".wq.b"), d);
  T2 k = linear(context, pvec(ps, prefix + ".wk.w"), pvec(ps, prefix + ".wk.b"), d);
  T2 v = linear(context, pvec(ps, prefix + ".wv.w"), pvec(ps, prefix + ".wv.b"), d);
  T2 att = attention(q, k, v, heads, batch, nq, nk);
  return linear(att, pvec(ps, prefix + ".wo.w"), pvec(ps, prefix + ".wo.b"), d);
}

inline double transformer_loss(const nn::ParameterSet& ps, const std::string& prefix,
                               const policy::TransformerConfig& cfg, const nn::Tensor& obs,
                               int batch, const nn::Tensor& target) {
  const int T = env::kObsT * env::kObsS, d = cfg.token_dim, n = T + 1;

  T4 maps;
  maps.n = batch * T;
  maps.c = env::kObsF;
  maps.h = env::kObsH;
  maps.w = env::kObsW;
  maps.v = vec(obs);
  for (double& x : maps.v) x *= cfg.input_scale;

  T4 x1 = conv2d(maps, pvec(ps, prefix + ".tok.conv1.k"), pvec(ps, prefix + ".tok.conv1.b"),
                 cfg.tok_channels, 3, 3, 1, 1);
  relu_(x1.v);
  T4 x2 = conv2d(x1, pvec(ps, prefix + ".tok.conv2.k"), pvec(ps, prefix + ".tok.conv2.b"), d,
                 3, 3, 2, 1);
  relu_(x2.v);
  T2 tok = spatial_mean(x2);

  for (int b = 0; b < batch; ++b)
    for (int p = 0; p < T; ++p)
      for (int i = 0; i < d / 2; ++i) {
        double freq = std::pow(10000.0, -2.0 * i / d);
        size_t off = (static_cast<size_t>(b) * T + p) * d;
        tok.v[off + 2 * i] += std::sin(p * freq);
        tok.v[off + 2 * i + 1] += std::cos(p * freq);
      }

  Vec ro = pvec(ps, prefix + ".readout");
  T2 x;
  x.r = batch * n;
  x.c = d;
  x.v.assign(static_cast<size_t>(x.r) * d, 0.0);
  for (int b = 0; b < batch; ++b) {
    for (int j = 0; j < d; ++j) x.v[static_cast<size_t>(b) * n * d + j] = ro[static_cast<size_t>(j)];
    for (int p = 0; p < T; ++p)
      for (int j = 0; j < d; ++j)
        x.v[(static_cast<size_t>(b) * n + 1 + p) * d + j] =
            tok.v[(static_cast<size_t>(b) * T + p) * d + j];
  }

  for (int blk = 0; blk < cfg.depth; ++blk) {
    std::string bp = prefix + ".block" + std::to_string(blk);
    T2 h = layernorm(x, pvec(ps, bp + ".ln1.g"), pvec(ps, bp + ".ln1.b"));
    if (cfg.readout_only_attention) {
      T2 q;
      q.r = batch;
      q.c = d;
      q.v.resize(static_cast<size_t>(batch) * d);
      for (int b = 0; b < batch; ++b)
        for (int j = 0; j < d; ++j)
          q.v[static_cast<size_t>(b) * d + j] = h.v[static_cast<size_t>(b) * n * d + j];
      T2 att = mha(ps, bp + ".attn", q, h, cfg.num_heads, batch, 1, n);
      for (int b = 0; b < batch; ++b)
        for (int j = 0; j < d; ++j)
          x.v[static_cast<size_t>(b) * n * d + j] += att.v[static_cast<size_t>(b) * d + j];
    } else {
      T2 att = mha(ps, bp + ".attn", h, h, cfg.num_heads, batch, n, n);
      for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += att.v[i];
    }
    T2 h2 = layernorm(x, pvec(ps, bp + ".ln2.g"), pvec(ps, bp + ".ln2.b"));
    T2 m = linear(h2, pvec(ps, bp + ".mlp.fc1.w"), pvec(ps, bp + ".mlp.fc1.b"), cfg.mlp_dim);
    relu_(m.v);
    m = linear(m, pvec(ps, bp + ".mlp.fc2.w"), pvec(ps, bp + ".mlp.fc2.b"), d);
    for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += m.v[i];
  }

  Vec out(static_cast<size_t>(batch) * d);
  for (int b = 0; b < batch; ++b)
    for (int j = 0; j < d; ++j)
      out[static_cast<size_t>(b) * d + j] = x.v[static_cast<size_t>(b) * n * d + j];
  return mse(out, vec(target));
}

inline double cnn_loss(const nn::ParameterSet& ps, const std::string& prefix,
                       const policy::CnnConfig& cfg, const nn::Tensor& obs, int batch,
                       const nn::Tensor& target) {
  T4 maps;
  maps.n = batch;
  maps.c = env::kObsT * env::kObsF;
  maps.h = env::kObsH;
  maps.w = env::kObsW;
  maps.v = vec(obs);
  for (double& x : maps.v) x *= cfg.input_scale;

  auto block = [&](const T4& in, const std::string& conv, const std::string& bn, int cout) {
    T4 y = conv2d(in, pvec(ps, prefix + conv + ".k"), pvec(ps, prefix + conv + ".b"), cout, 3,
                  3, 1, 1);
    y = batchnorm_train(y, pvec(ps, prefix + bn + ".g"), pvec(ps, prefix + bn + ".b"));
    relu_(y.v);
    return y;
  };
  T4 x = block(maps, ".conv1", ".bn1", cfg.c1);
  x = block(x, ".conv2", ".bn2", cfg.c2);
  x = block(x, ".conv3", ".bn3", cfg.c3);

  T2 flat;
  flat.r = batch;
  flat.c = cfg.c3 * env::kObsH * env::kObsW;
  flat.v = std::move(x.v);
  T2 h = linear(flat, pvec(ps, prefix + ".fc1.w"), pvec(ps, prefix + ".fc1.b"), cfg.fc1);
  relu_(h.v);
  h = linear(h, pvec(ps, prefix + ".fc2.w"), pvec(ps, prefix + ".fc2.b"), cfg.fc2);
  relu_(h.v);
  return mse(h.v, vec(target));
}

}  // namespace sg::test::dref
