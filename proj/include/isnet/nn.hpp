// Trainable parameters and the layer kernels the network is assembled from:
// affine map, LSTM, group normalization, set mean, concatenation, MSE.
// Every layer has an explicit reverse-mode backward that accumulates
// parameter gradients and returns the input adjoint.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "isnet/tensor.hpp"

namespace isnet {

template <class Real>
struct Param {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;  // sized lazily by zero_grads()/backward
  Tensor<Real> m, v;  // Adam moments, sized lazily by the optimizer

  std::size_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) {
      grad = Tensor<Real>::zeros(value.shape);
    }
  }
};

// Owns every trainable tensor of one model plus the Adam step counter.
// Registration order is the canonical order for serialization and reductions.
template <class Real>
class ParamStore {
 public:
  Param<Real>& create(const std::string& name, std::vector<std::size_t> shape) {
    if (index_.count(name)) throw std::invalid_argument("param store: duplicate name " + name);
    params_.emplace_back();
    Param<Real>& p = params_.back();
    p.name = name;
    p.value = Tensor<Real>::zeros(std::move(shape));
    index_[name] = params_.size() - 1;
    return p;
  }

  Param<Real>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }

  std::size_t count() const { return params_.size(); }
  Param<Real>& at(std::size_t i) { return params_[i]; }
  const Param<Real>& at(std::size_t i) const { return params_[i]; }

  std::uint64_t param_count() const {
    std::uint64_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) {
      p.ensure_grad();
      p.grad.fill(Real(0));
    }
  }

  // Copies parameter values from another store with identical layout.
  void copy_values_from(const ParamStore& other) {
    if (other.count() != count()) throw std::invalid_argument("param store: layout mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name != other.params_[i].name ||
          params_[i].value.shape != other.params_[i].value.shape)
        throw std::invalid_argument("param store: layout mismatch at " + params_[i].name);
      params_[i].value.v = other.params_[i].value.v;
    }
  }

  std::uint64_t adam_step = 0;

 private:
  std::deque<Param<Real>> params_;  // deque: stable addresses for layer bindings
  std::unordered_map<std::string, std::size_t> index_;
};

// y = x W + b over the trailing axis; W stored [in, out].
template <class Real>
struct Affine {
  Param<Real>* w = nullptr;
  Param<Real>* b = nullptr;
  std::size_t in = 0, out = 0;

  Affine() = default;
  Affine(ParamStore<Real>& ps, const std::string& name, std::size_t in_dim, std::size_t out_dim,
         Rng& rng)
      : in(in_dim), out(out_dim) {
    w = &ps.create(name + ".w", {in, out});
    b = &ps.create(name + ".b", {out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    rng.fill_uniform(w->value, -bound, bound);
  }

  void forward_rows(const Real* x, Real* y, std::size_t rows) const {
    gemm_nn(x, w->value.data(), y, rows, in, out, false);
    for (std::size_t r = 0; r < rows; ++r) {
      Real* yr = y + r * out;
      const Real* bp = b->value.data();
      for (std::size_t j = 0; j < out; ++j) yr[j] += bp[j];
    }
  }

  // Accumulates w/b gradients; writes (or accumulates into) dx when non-null.
  void backward_rows(const Real* x, const Real* dy, Real* dx, std::size_t rows,
                     bool dx_accumulate = false) {
    w->ensure_grad();
    b->ensure_grad();
    gemm_tn(x, dy, w->grad.data(), rows, in, out, true);
    Real* bg = b->grad.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* dyr = dy + r * out;
      for (std::size_t j = 0; j < out; ++j) bg[j] += dyr[j];
    }
    if (dx) gemm_nt(dy, w->value.data(), dx, rows, out, in, dx_accumulate);
  }
};

// Contract form: broadcast over all leading axes.
template <class Real>
inline Tensor<Real> affine(const Tensor<Real>& x, const Affine<Real>& layer) {
  if (x.ndim() == 0 || x.shape.back() != layer.in)
    throw std::invalid_argument("affine: input shape " + shape_str(x.shape) +
                                " does not match layer [" + std::to_string(layer.in) + ", " +
                                std::to_string(layer.out) + "]");
  std::vector<std::size_t> out_shape = x.shape;
  out_shape.back() = layer.out;
  Tensor<Real> y(out_shape);
  layer.forward_rows(x.data(), y.data(), x.size() / layer.in);
  y.check_finite("affine output");
  return y;
}

namespace nn_detail {

// Polynomial single-precision exp (Cephes coefficients), ~1 ulp over the
// clamped range, branch-free so the per-gate loops vectorize. Callers must
// keep NaN out (the LSTM probes its pre-activations first). The double
// overloads below stay on the exact libm path; the verification suite runs
// in double.
inline float fast_expf(float x) {
  x = std::min(86.0f, std::max(-86.0f, x));
  // round-to-nearest via the 2^23 shift; |x * log2(e)| < 2^22 after clamping
  const float y = 1.44269504088896341f * x;
  const float z = (y + 12582912.0f) - 12582912.0f;
  const float r = (x - z * 0.693359375f) - z * (-2.12194440e-4f);
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  const float e = p * r * r + r + 1.0f;
  return std::bit_cast<float>(std::bit_cast<std::int32_t>(e) +
                              (static_cast<std::int32_t>(z) << 23));
}

inline float sigmoid(float x) { return 1.0f / (1.0f + fast_expf(-x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline float tanh_act(float x) {
  const float e = fast_expf(2.0f * x);
  return (e - 1.0f) / (e + 1.0f);
}
inline double tanh_act(double x) { return std::tanh(x); }

inline void sigmoid_span(float* x, const float* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = sigmoid(x[i] + b[i]);
}
inline void sigmoid_span(double* x, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = sigmoid(x[i] + b[i]);
}
inline void tanh_span(float* x, const float* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = tanh_act(x[i] + b[i]);
}
inline void tanh_span(double* x, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = tanh_act(x[i] + b[i]);
}

// NaN or Inf anywhere in the block leaves the sum non-finite.
template <class Real>
inline bool block_finite(const Real* x, std::size_t n) {
  Real s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return std::isfinite(s);
}

}  // namespace nn_detail

// Unidirectional LSTM, shared across all sequences of a batch.
// Gate order in the stacked weight/bias layout: input, forget, cell, output.
// Parameters: w_ih [D, 4H], w_hh [H, 4H], bias [4H] (one bias vector per gate).
template <class Real>
struct Lstm {
  Param<Real>* w_ih = nullptr;
  Param<Real>* w_hh = nullptr;
  Param<Real>* bias = nullptr;
  std::size_t D = 0, H = 0;

  Lstm() = default;
  Lstm(ParamStore<Real>& ps, const std::string& name, std::size_t in_dim, std::size_t hidden,
       Rng& rng)
      : D(in_dim), H(hidden) {
    w_ih = &ps.create(name + ".w_ih", {D, 4 * H});
    w_hh = &ps.create(name + ".w_hh", {H, 4 * H});
    bias = &ps.create(name + ".bias", {4 * H});
    rng.fill_uniform(w_ih->value, -1.0 / std::sqrt(static_cast<double>(D)),
                     1.0 / std::sqrt(static_cast<double>(D)));
    rng.fill_uniform(w_hh->value, -1.0 / std::sqrt(static_cast<double>(H)),
                     1.0 / std::sqrt(static_cast<double>(H)));
  }

  // Stored time-major so each step's slice is contiguous in backward.
  struct Cache {
    std::size_t B = 0, T = 0;
    Tensor<Real> x_tm;      // [T, B, D]
    Tensor<Real> gates_tm;  // [T, B, 4H] post-activation (i, f, g, o)
    Tensor<Real> c_tm;      // [T, B, H]
    Tensor<Real> h_tm;      // [T, B, H]
  };

  // One step's gate activation and state update, in place over the
  // pre-activation block g [B, 4H]. The finiteness probe runs on the
  // pre-activations: that is where a NaN/Inf parameter or input first lands,
  // and the bounded activations keep c and h finite afterwards.
  void cell_step(Real* g, const Real* cprev, Real* cnew, Real* hnew, std::size_t B,
                 std::size_t t) const {
    if (!nn_detail::block_finite(g, B * 4 * H))
      throw std::runtime_error("lstm: non-finite state at step " + std::to_string(t));
    const Real* bp = bias->value.data();
    for (std::size_t b = 0; b < B; ++b) {
      Real* gb = g + b * 4 * H;
      nn_detail::sigmoid_span(gb, bp, H);                      // input gate
      nn_detail::sigmoid_span(gb + H, bp + H, H);              // forget gate
      nn_detail::tanh_span(gb + 2 * H, bp + 2 * H, H);         // cell candidate
      nn_detail::sigmoid_span(gb + 3 * H, bp + 3 * H, H);      // output gate
      const Real* cp = cprev ? cprev + b * H : nullptr;
      Real* cn = cnew + b * H;
      Real* hn = hnew + b * H;
      for (std::size_t j = 0; j < H; ++j)
        cn[j] = (cp ? gb[H + j] * cp[j] : Real(0)) + gb[j] * gb[2 * H + j];
      for (std::size_t j = 0; j < H; ++j)
        hn[j] = gb[3 * H + j] * nn_detail::tanh_act(cn[j]);
    }
  }

  // x: [B, T, D] -> h: [B, T, H]; zero initial state.
  Tensor<Real> forward(const Tensor<Real>& x, Cache* cache) const {
    if (x.ndim() != 3 || x.dim(2) != D)
      throw std::invalid_argument("lstm: input shape " + shape_str(x.shape) +
                                  " does not match input size " + std::to_string(D));
    const std::size_t B = x.dim(0), T = x.dim(1);
    Tensor<Real> out({B, T, H});

    if (cache) {
      // Training path: one big input-side GEMM, then gate blocks activated in
      // place inside the cache so backward reads contiguous slices.
      cache->B = B;
      cache->T = T;
      cache->x_tm = Tensor<Real>({T, B, D});
      cache->gates_tm = Tensor<Real>({T, B, 4 * H});
      cache->c_tm = Tensor<Real>({T, B, H});
      cache->h_tm = Tensor<Real>({T, B, H});
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
          std::copy_n(&x.at(b, t, 0), D, &cache->x_tm.at(t, b, 0));
      gemm_nn(cache->x_tm.data(), w_ih->value.data(), cache->gates_tm.data(), T * B, D, 4 * H,
              false);
      for (std::size_t t = 0; t < T; ++t) {
        Real* g = &cache->gates_tm.at(t, 0, 0);
        const Real* hprev = (t > 0) ? &cache->h_tm.at(t - 1, 0, 0) : nullptr;
        const Real* cprev = (t > 0) ? &cache->c_tm.at(t - 1, 0, 0) : nullptr;
        if (hprev) gemm_nn(hprev, w_hh->value.data(), g, B, H, 4 * H, true);
        cell_step(g, cprev, &cache->c_tm.at(t, 0, 0), &cache->h_tm.at(t, 0, 0), B, t);
      }
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
          std::copy_n(&cache->h_tm.at(t, b, 0), H, &out.at(b, t, 0));
      return out;
    }

    // Inference path: rolling state buffers, memory flat in T.
    std::vector<Real> hprev(B * H, Real(0)), cprev(B * H, Real(0));
    std::vector<Real> hnew(B * H), cnew(B * H);
    std::vector<Real> gbuf(B * 4 * H), xbuf(B * D);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t b = 0; b < B; ++b) std::copy_n(&x.at(b, t, 0), D, &xbuf[b * D]);
      gemm_nn(xbuf.data(), w_ih->value.data(), gbuf.data(), B, D, 4 * H, false);
      if (t > 0) gemm_nn(hprev.data(), w_hh->value.data(), gbuf.data(), B, H, 4 * H, true);
      cell_step(gbuf.data(), t > 0 ? cprev.data() : nullptr, cnew.data(), hnew.data(), B, t);
      std::swap(hprev, hnew);
      std::swap(cprev, cnew);
      for (std::size_t b = 0; b < B; ++b) std::copy_n(&hprev[b * H], H, &out.at(b, t, 0));
    }
    return out;
  }

  // dh: [B, T, H] -> dx: [B, T, D]; accumulates parameter gradients.
  Tensor<Real> backward(const Cache& cache, const Tensor<Real>& dh) {
    const std::size_t B = cache.B, T = cache.T;
    if (dh.ndim() != 3 || dh.dim(0) != B || dh.dim(1) != T || dh.dim(2) != H)
      throw std::invalid_argument("lstm backward: adjoint shape " + shape_str(dh.shape));
    w_ih->ensure_grad();
    w_hh->ensure_grad();
    bias->ensure_grad();

    Tensor<Real> dpre_tm({T, B, 4 * H});
    std::vector<Real> dh_carry(B * H, Real(0)), dc(B * H, Real(0));

    for (std::size_t t = T; t-- > 0;) {
      const Real* gates = &cache.gates_tm.at(t, 0, 0);
      const Real* ct = &cache.c_tm.at(t, 0, 0);
      const Real* cprev = (t > 0) ? &cache.c_tm.at(t - 1, 0, 0) : nullptr;
      Real* da = &dpre_tm.at(t, 0, 0);

      for (std::size_t b = 0; b < B; ++b) {
        const Real* g = gates + b * 4 * H;
        Real* dab = da + b * 4 * H;
        for (std::size_t j = 0; j < H; ++j) {
          const Real ig = g[j], fg = g[H + j], gg = g[2 * H + j], og = g[3 * H + j];
          const Real c = ct[b * H + j];
          const Real tc = nn_detail::tanh_act(c);
          const Real dht = dh.at(b, t, j) + dh_carry[b * H + j];
          const Real dot = dht * tc;
          Real dct = dc[b * H + j] + dht * og * (Real(1) - tc * tc);
          const Real cp = cprev ? cprev[b * H + j] : Real(0);
          dab[j] = dct * gg * ig * (Real(1) - ig);
          dab[H + j] = dct * cp * fg * (Real(1) - fg);
          dab[2 * H + j] = dct * ig * (Real(1) - gg * gg);
          dab[3 * H + j] = dot * og * (Real(1) - og);
          dc[b * H + j] = dct * fg;
        }
      }
      gemm_nt(da, w_hh->value.data(), dh_carry.data(), B, 4 * H, H, false);
      if (t > 0)
        gemm_tn(&cache.h_tm.at(t - 1, 0, 0), da, w_hh->grad.data(), B, H, 4 * H, true);
    }

    gemm_tn(cache.x_tm.data(), dpre_tm.data(), w_ih->grad.data(), T * B, D, 4 * H, true);
    Real* bg = bias->grad.data();
    for (std::size_t r = 0; r < T * B; ++r) {
      const Real* row = dpre_tm.data() + r * 4 * H;
      for (std::size_t j = 0; j < 4 * H; ++j) bg[j] += row[j];
    }

    Tensor<Real> dx_tm({T, B, D});
    gemm_nt(dpre_tm.data(), w_ih->value.data(), dx_tm.data(), T * B, 4 * H, D, false);
    Tensor<Real> dx({B, T, D});
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t b = 0; b < B; ++b) std::copy_n(&dx_tm.at(t, b, 0), D, &dx.at(b, t, 0));
    return dx;
  }
};

// Contract form: x [T, D] -> [T, H], zero initial state.
template <class Real>
inline Tensor<Real> lstm_forward(const Tensor<Real>& x, const Lstm<Real>& layer) {
  if (x.ndim() != 2)
    throw std::invalid_argument("lstm_forward: expected [T, D], got " + shape_str(x.shape));
  Tensor<Real> x3({1, x.dim(0), x.dim(1)}, x.v);
  Tensor<Real> h3 = layer.forward(x3, nullptr);
  return Tensor<Real>({x.dim(0), layer.H}, std::move(h3.v));
}

// Per-row group standardization followed by a per-channel affine map.
template <class Real>
struct GroupNorm {
  Param<Real>* gamma = nullptr;
  Param<Real>* beta = nullptr;
  std::size_t C = 0, groups = 1;
  Real eps = Real(1e-5);

  GroupNorm() = default;
  GroupNorm(ParamStore<Real>& ps, const std::string& name, std::size_t channels,
            std::size_t num_groups)
      : C(channels), groups(num_groups) {
    if (groups == 0 || C % groups != 0)
      throw std::invalid_argument("group norm: channels " + std::to_string(C) +
                                  " not divisible by groups " + std::to_string(groups));
    gamma = &ps.create(name + ".gamma", {C});
    beta = &ps.create(name + ".beta", {C});
    gamma->value.fill(Real(1));
  }

  struct Cache {
    std::size_t rows = 0;
    Tensor<Real> xhat;              // [rows, C]
    std::vector<Real> inv_sigma;    // [rows * groups]
  };

  // x viewed as [rows, C]; each (row, group) standardized independently.
  void forward_rows(const Real* x, Real* y, std::size_t rows, Cache* cache) const {
    const std::size_t gs = C / groups;
    if (cache) {
      cache->rows = rows;
      cache->xhat = Tensor<Real>({rows, C});
      cache->inv_sigma.assign(rows * groups, Real(0));
    }
    const Real* gp = gamma->value.data();
    const Real* bp = beta->value.data();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* xr = x + r * C;
      Real* yr = y + r * C;
      for (std::size_t g = 0; g < groups; ++g) {
        const Real* xg = xr + g * gs;
        Real mean = 0;
        for (std::size_t j = 0; j < gs; ++j) mean += xg[j];
        mean /= static_cast<Real>(gs);
        Real var = 0;
        for (std::size_t j = 0; j < gs; ++j) {
          const Real d = xg[j] - mean;
          var += d * d;
        }
        var /= static_cast<Real>(gs);
        const Real inv = Real(1) / std::sqrt(var + eps);
        if (cache) cache->inv_sigma[r * groups + g] = inv;
        for (std::size_t j = 0; j < gs; ++j) {
          const std::size_t c = g * gs + j;
          const Real xh = (xr[c] - mean) * inv;
          if (cache) cache->xhat.at(r, c) = xh;
          yr[c] = gp[c] * xh + bp[c];
        }
      }
    }
  }

  void backward_rows(const Cache& cache, const Real* dy, Real* dx) {
    gamma->ensure_grad();
    beta->ensure_grad();
    const std::size_t gs = C / groups;
    Real* gg = gamma->grad.data();
    Real* bg = beta->grad.data();
    const Real* gp = gamma->value.data();
    for (std::size_t r = 0; r < cache.rows; ++r) {
      const Real* dyr = dy + r * C;
      const Real* xh = &cache.xhat.at(r, 0);
      Real* dxr = dx + r * C;
      for (std::size_t c = 0; c < C; ++c) {
        gg[c] += dyr[c] * xh[c];
        bg[c] += dyr[c];
      }
      for (std::size_t g = 0; g < groups; ++g) {
        const Real inv = cache.inv_sigma[r * groups + g];
        Real mean_dxh = 0, mean_dxh_xh = 0;
        for (std::size_t j = 0; j < gs; ++j) {
          const std::size_t c = g * gs + j;
          const Real dxh = dyr[c] * gp[c];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xh[c];
        }
        mean_dxh /= static_cast<Real>(gs);
        mean_dxh_xh /= static_cast<Real>(gs);
        for (std::size_t j = 0; j < gs; ++j) {
          const std::size_t c = g * gs + j;
          const Real dxh = dyr[c] * gp[c];
          dxr[c] = inv * (dxh - mean_dxh - xh[c] * mean_dxh_xh);
        }
      }
    }
  }
};

// Contract form: x [T, C] -> [T, C].
template <class Real>
inline Tensor<Real> group_norm(const Tensor<Real>& x, const GroupNorm<Real>& gn) {
  if (x.ndim() != 2 || x.dim(1) != gn.C)
    throw std::invalid_argument("group_norm: expected [T, " + std::to_string(gn.C) + "], got " +
                                shape_str(x.shape));
  Tensor<Real> y(x.shape);
  gn.forward_rows(x.data(), y.data(), x.dim(0), nullptr);
  return y;
}

// Arithmetic mean over the first axis: [F, T, H] -> [T, H].
template <class Real>
inline Tensor<Real> mean_over_set(const Tensor<Real>& xs) {
  if (xs.ndim() != 3 || xs.dim(0) == 0)
    throw std::invalid_argument("mean_over_set: expected non-empty [F, T, H], got " +
                                shape_str(xs.shape));
  const std::size_t F = xs.dim(0), rest = xs.dim(1) * xs.dim(2);
  Tensor<Real> out({xs.dim(1), xs.dim(2)});
  for (std::size_t f = 0; f < F; ++f) {
    const Real* src = xs.data() + f * rest;
    for (std::size_t i = 0; i < rest; ++i) out.v[i] += src[i];
  }
  const Real inv = Real(1) / static_cast<Real>(F);
  for (auto& x : out.v) x *= inv;
  return out;
}

// Trailing-axis concatenation, a first: [.., H] x [.., H] -> [.., 2H].
template <class Real>
inline Tensor<Real> concat_last(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.ndim() == 0 || a.ndim() != b.ndim())
    throw std::invalid_argument("concat_last: rank mismatch " + shape_str(a.shape) + " vs " +
                                shape_str(b.shape));
  for (std::size_t i = 0; i + 1 < a.ndim(); ++i)
    if (a.shape[i] != b.shape[i])
      throw std::invalid_argument("concat_last: leading shape mismatch " + shape_str(a.shape) +
                                  " vs " + shape_str(b.shape));
  const std::size_t ha = a.shape.back(), hb = b.shape.back();
  std::vector<std::size_t> out_shape = a.shape;
  out_shape.back() = ha + hb;
  Tensor<Real> out(out_shape);
  const std::size_t rows = a.size() / ha;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data() + r * ha, ha, out.data() + r * (ha + hb));
    std::copy_n(b.data() + r * hb, hb, out.data() + r * (ha + hb) + ha);
  }
  return out;
}

template <class Real>
inline Real mse_loss(const Tensor<Real>& pred, const Tensor<Real>& target) {
  if (!same_shape(pred, target))
    throw std::invalid_argument("mse_loss: shape mismatch " + shape_str(pred.shape) + " vs " +
                                shape_str(target.shape));
  if (pred.size() == 0) throw std::invalid_argument("mse_loss: empty tensors");
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
    acc += d * d;
  }
  return static_cast<Real>(acc / static_cast<double>(pred.size()));
}

// d mse / d pred, optionally scaled (used to fold in batch averaging).
template <class Real>
inline Tensor<Real> mse_grad(const Tensor<Real>& pred, const Tensor<Real>& target,
                             Real scale = Real(1)) {
  if (!same_shape(pred, target))
    throw std::invalid_argument("mse_grad: shape mismatch " + shape_str(pred.shape) + " vs " +
                                shape_str(target.shape));
  Tensor<Real> g(pred.shape);
  const Real k = scale * Real(2) / static_cast<Real>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) g.v[i] = k * (pred.v[i] - target.v[i]);
  return g;
}

}  // namespace isnet
