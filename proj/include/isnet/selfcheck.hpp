// Self-verification suite behind the `verify` command: finite-difference
// gradient checks for every differentiable op and the full toy-scale model,
// subband-interaction equivariance, STFT and mask oracles, and the
// parameter-count audit.
#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "isnet/data.hpp"
#include "isnet/model.hpp"

namespace isnet {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SelfcheckOptions {
  int grad_seeds = 20;
  std::string corrupt_op;  // test hook: breaks the named op's analytic gradient
};

namespace selfcheck_detail {

inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
}

// Central finite differences over every parameter element in `ps`.
// `grads` must fill every Param::grad; `loss` must be a pure function of the
// parameter values.
template <class LossFn, class GradFn>
inline double fd_max_rel_err(ParamStore<double>& ps, LossFn&& loss, GradFn&& grads,
                             bool corrupt) {
  grads();
  std::vector<std::vector<double>> analytic;
  for (std::size_t p = 0; p < ps.count(); ++p) analytic.push_back(ps.at(p).grad.v);
  if (corrupt && !analytic.empty() && !analytic[0].empty())
    analytic[0][0] += 0.01 * (1.0 + std::abs(analytic[0][0]));

  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t p = 0; p < ps.count(); ++p) {
    Param<double>& par = ps.at(p);
    for (std::size_t j = 0; j < par.value.size(); ++j) {
      const double saved = par.value.v[j];
      par.value.v[j] = saved + h;
      const double lp = loss();
      par.value.v[j] = saved - h;
      const double lm = loss();
      par.value.v[j] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      worst = std::max(worst, rel_err(analytic[p][j], numeric));
    }
  }
  return worst;
}

template <class Real>
inline double dot(const Tensor<Real>& a, const Tensor<Real>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a.v[i]) * b.v[i];
  return s;
}

inline double check_affine(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ParamStore<double> ps;
  Affine<double> layer(ps, "layer", 5, 4, rng);
  rng.fill_uniform(layer.b->value, -0.5, 0.5);
  Param<double>& x = ps.create("x", {3, 5});
  rng.fill_normal(x.value);
  Tensor<double> proj({3, 4});
  rng.fill_normal(proj);

  auto loss = [&] {
    Tensor<double> y = affine(x.value, layer);
    return dot(y, proj);
  };
  auto grads = [&] {
    ps.zero_grads();
    Tensor<double> dx({3, 5});
    layer.backward_rows(x.value.data(), proj.data(), dx.data(), 3);
    x.grad.v = dx.v;
  };
  return fd_max_rel_err(ps, loss, grads, corrupt);
}

inline double check_lstm(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ParamStore<double> ps;
  Lstm<double> layer(ps, "lstm", 2, 2, rng);
  rng.fill_uniform(layer.bias->value, -0.3, 0.3);
  Param<double>& x = ps.create("x", {1, 3, 2});
  rng.fill_normal(x.value);
  Tensor<double> proj({1, 3, 2});
  rng.fill_normal(proj);

  auto loss = [&] { return dot(layer.forward(x.value, nullptr), proj); };
  auto grads = [&] {
    ps.zero_grads();
    typename Lstm<double>::Cache cache;
    layer.forward(x.value, &cache);
    Tensor<double> dx = layer.backward(cache, proj);
    x.grad.v = dx.v;
  };
  return fd_max_rel_err(ps, loss, grads, corrupt);
}

inline double check_group_norm(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ParamStore<double> ps;
  const std::size_t groups = 1 + seed % 3;  // 1, 2, 3 all divide 6
  GroupNorm<double> gn(ps, "gn", 6, groups);
  rng.fill_uniform(gn.gamma->value, 0.5, 1.5);
  rng.fill_uniform(gn.beta->value, -0.5, 0.5);
  Param<double>& x = ps.create("x", {4, 6});
  rng.fill_normal(x.value);
  Tensor<double> proj({4, 6});
  rng.fill_normal(proj);

  auto loss = [&] { return dot(group_norm(x.value, gn), proj); };
  auto grads = [&] {
    ps.zero_grads();
    typename GroupNorm<double>::Cache cache;
    Tensor<double> y(x.value.shape);
    gn.forward_rows(x.value.data(), y.data(), 4, &cache);
    Tensor<double> dx(x.value.shape);
    gn.backward_rows(cache, proj.data(), dx.data());
    x.grad.v = dx.v;
  };
  return fd_max_rel_err(ps, loss, grads, corrupt);
}

inline double check_mean_over_set(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ParamStore<double> ps;
  Param<double>& xs = ps.create("xs", {3, 2, 4});
  rng.fill_normal(xs.value);
  Tensor<double> proj({2, 4});
  rng.fill_normal(proj);

  auto loss = [&] { return dot(mean_over_set(xs.value), proj); };
  auto grads = [&] {
    ps.zero_grads();
    for (std::size_t f = 0; f < 3; ++f)
      for (std::size_t i = 0; i < proj.size(); ++i)
        xs.grad.v[f * proj.size() + i] = proj.v[i] / 3.0;
  };
  return fd_max_rel_err(ps, loss, grads, corrupt);
}

inline double check_concat_last(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ParamStore<double> ps;
  Param<double>& a = ps.create("a", {2, 3});
  Param<double>& b = ps.create("b", {2, 3});
  rng.fill_normal(a.value);
  rng.fill_normal(b.value);
  Tensor<double> proj({2, 6});
  rng.fill_normal(proj);

  auto loss = [&] { return dot(concat_last(a.value, b.value), proj); };
  auto grads = [&] {
    ps.zero_grads();
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t j = 0; j < 3; ++j) {
        a.grad.at(r, j) = proj.at(r, j);
        b.grad.at(r, j) = proj.at(r, j + 3);
      }
  };
  return fd_max_rel_err(ps, loss, grads, corrupt);
}

inline double check_mse(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ParamStore<double> ps;
  Param<double>& pred = ps.create("pred", {3, 4});
  rng.fill_normal(pred.value);
  Tensor<double> target({3, 4});
  rng.fill_normal(target);

  auto loss = [&] { return mse_loss(pred.value, target); };
  auto grads = [&] {
    ps.zero_grads();
    pred.grad = mse_grad(pred.value, target);
  };
  return fd_max_rel_err(ps, loss, grads, corrupt);
}

inline double check_subinter(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  ParamStore<double> ps;
  SubInter<double> module(ps, "si", 4, 3, rng);
  Param<double>& x = ps.create("x", {3, 2, 4});  // [F, T, D]
  rng.fill_normal(x.value);
  Tensor<double> proj({3, 2, 4});
  rng.fill_normal(proj);

  auto loss = [&] { return dot(module.forward_tm(x.value, nullptr), proj); };
  auto grads = [&] {
    ps.zero_grads();
    typename SubInter<double>::Cache cache;
    module.forward_tm(x.value, &cache);
    Tensor<double> dx = module.backward_tm(cache, proj);
    x.grad.v = dx.v;
  };
  return fd_max_rel_err(ps, loss, grads, corrupt);
}

inline ModelConfig toy_model_config() {
  ModelConfig cfg;
  cfg.variant = Variant::inter_subnet;
  cfg.win_len = 16;
  cfg.hop = 8;
  cfg.bins = 9;
  cfg.n = 2;
  cfg.subinter1_h = 6;
  cfg.subinter2_h = 8;
  cfg.lstm_hidden = 12;
  return cfg;
}

inline double check_model(std::uint64_t seed, bool corrupt) {
  Rng rng(seed);
  Model<double> model(toy_model_config(), seed);
  Tensor<double> mag({9, 4});
  rng.fill_uniform(mag, 0.05, 2.0);
  Tensor<double> tr({9, 4}), ti({9, 4});
  rng.fill_normal(tr, 0.0, 0.3);
  rng.fill_normal(ti, 0.0, 0.3);

  auto loss = [&] {
    MaskPlanes<double> p = model.forward(mag, false);
    return 0.5 * (mse_loss(p.mr, tr) + mse_loss(p.mi, ti));
  };
  auto grads = [&] {
    model.store().zero_grads();
    MaskPlanes<double> p = model.forward(mag, true);
    model.backward(mse_grad(p.mr, tr, 0.5), mse_grad(p.mi, ti, 0.5));
  };
  return fd_max_rel_err(model.store(), loss, grads, corrupt);
}

}  // namespace selfcheck_detail

inline std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& opt = {}) {
  using namespace selfcheck_detail;
  std::vector<CheckResult> results;

  // ---- parameter-count audit ----
  struct AuditRow {
    Variant v;
    std::uint64_t lo, hi;
  };
  const AuditRow audits[] = {
      {Variant::inter_subnet, 2270000, 2310000},
      {Variant::subband_baseline, 1800000, 1840000},
      {Variant::subband_large, 2980000, 3020000},
  };
  for (const auto& row : audits) {
    const ModelConfig cfg = build_variant(row.v);
    Model<float> m(cfg, 0);
    const std::uint64_t built = m.store().param_count();
    const std::uint64_t formula = config_param_count(cfg);
    CheckResult r;
    r.name = std::string("params/") + to_string(row.v);
    r.measured = static_cast<double>(built);
    r.threshold = static_cast<double>(row.hi);
    r.pass = built == formula && built >= row.lo && built <= row.hi;
    r.detail = with_commas(built) + " parameters (" + in_millions(built) + "), expected [" +
               with_commas(row.lo) + ", " + with_commas(row.hi) + "]";
    results.push_back(r);
  }

  // ---- gradient suite ----
  struct GradOp {
    const char* name;
    double (*fn)(std::uint64_t, bool);
    double threshold;
  };
  const GradOp ops[] = {
      {"affine", check_affine, 1e-6},
      {"lstm", check_lstm, 1e-5},
      {"group_norm", check_group_norm, 1e-5},
      {"mean_over_set", check_mean_over_set, 1e-7},
      {"concat_last", check_concat_last, 1e-7},
      {"mse", check_mse, 1e-7},
      {"subinter", check_subinter, 1e-5},
      {"model", check_model, 1e-4},
  };
  for (const auto& op : ops) {
    const bool corrupt = (opt.corrupt_op == op.name);
    double worst = 0.0;
    for (int s = 0; s < opt.grad_seeds; ++s)
      worst = std::max(worst, op.fn(1000 + 17 * static_cast<std::uint64_t>(s), corrupt));
    CheckResult r;
    r.name = std::string("gradcheck/") + op.name;
    r.measured = worst;
    r.threshold = op.threshold;
    r.pass = worst < op.threshold;
    r.detail = "max rel err over " + std::to_string(opt.grad_seeds) + " seeds";
    if (corrupt) r.detail += " (gradient deliberately corrupted)";
    results.push_back(r);
  }

  // ---- subband interaction equivariance + residual identity ----
  {
    double worst = 0.0;
    for (int c = 0; c < 50; ++c) {
      Rng rng(5000 + c);
      const std::size_t F = 2 + rng.index(5), D = 2 + rng.index(4), T = 1 + rng.index(3),
                        H = 2 + rng.index(4);
      ParamStore<double> ps;
      SubInter<double> module(ps, "si", D, H, rng);
      Tensor<double> units({F, D, T});
      rng.fill_normal(units);
      Tensor<double> out = subinter_forward(units, module);

      std::vector<std::size_t> perm(F);
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = F; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);

      Tensor<double> permuted({F, D, T});
      for (std::size_t f = 0; f < F; ++f)
        std::copy_n(&units.at(perm[f], 0, 0), D * T, &permuted.at(f, 0, 0));
      Tensor<double> out_permuted = subinter_forward(permuted, module);
      for (std::size_t f = 0; f < F; ++f)
        for (std::size_t i = 0; i < D * T; ++i)
          worst = std::max(worst,
                           std::abs(out_permuted.v[f * D * T + i] - out.v[perm[f] * D * T + i]));
    }
    CheckResult r;
    r.name = "subinter/permutation_equivariance";
    r.measured = worst;
    r.threshold = 1e-6;
    r.pass = worst < r.threshold;
    r.detail = "max abs diff over 50 random cases";
    results.push_back(r);
  }
  {
    Rng rng(77);
    ParamStore<double> ps;
    SubInter<double> module(ps, "si", 5, 4, rng);
    module.pmap.w->value.fill(0.0);
    module.pmap.b->value.fill(0.0);
    Tensor<double> units({4, 5, 3});
    rng.fill_uniform(units, 0.01, 2.0);
    Tensor<double> out = subinter_forward(units, module);
    double worst = 0.0;
    bool exact = true;
    for (std::size_t i = 0; i < units.size(); ++i) {
      worst = std::max(worst, std::abs(out.v[i] - units.v[i]));
      if (out.v[i] != units.v[i]) exact = false;
    }
    CheckResult r;
    r.name = "subinter/residual_identity";
    r.measured = worst;
    r.threshold = 0.0;
    r.pass = exact;
    r.detail = "zero fusion map must be a bit-exact identity";
    results.push_back(r);
  }

  // ---- STFT oracles ----
  {
    AudioSignal sig = synth_noise(123, 1.0);
    Spectrogram spec = stft(sig, 512, 256);
    AudioSignal rec = istft(spec, sig.samples.size());
    double num = 0, den = 0;
    for (std::size_t i = 512; i + 512 < sig.samples.size(); ++i) {
      const double d = rec.samples[i] - sig.samples[i];
      num += d * d;
      den += sig.samples[i] * sig.samples[i];
    }
    const double rel = std::sqrt(num / den);
    CheckResult r;
    r.name = "stft/roundtrip";
    r.measured = rel;
    r.threshold = 1e-6;
    r.pass = rel < r.threshold;
    r.detail = "interior relative L2 of istft(stft(x))";
    results.push_back(r);
  }
  {
    // FFT vs direct DFT on one frame
    Rng rng(9);
    std::vector<std::complex<double>> buf(512);
    for (auto& x : buf) x = std::complex<double>(rng.normal(), rng.normal());
    std::vector<std::complex<double>> ref(512);
    const double two_pi = 6.283185307179586476925286766559;
    for (std::size_t k = 0; k < 512; ++k) {
      std::complex<double> s = 0;
      for (std::size_t t = 0; t < 512; ++t)
        s += buf[t] * std::polar(1.0, -two_pi * static_cast<double>(k * t % 512) / 512.0);
      ref[k] = s;
    }
    std::vector<std::complex<double>> fftbuf = buf;
    detail::fft_inplace(fftbuf, false);
    double worst = 0;
    for (std::size_t k = 0; k < 512; ++k) worst = std::max(worst, std::abs(fftbuf[k] - ref[k]));
    CheckResult r;
    r.name = "stft/fft_vs_direct_dft";
    r.measured = worst;
    r.threshold = 1e-8;
    r.pass = worst < r.threshold;
    r.detail = "max abs diff against O(N^2) DFT";
    results.push_back(r);
  }

  // ---- mask oracles ----
  {
    Rng rng(31);
    Spectrogram noisy(17, 9, 32, 16), clean(17, 9, 32, 16);
    for (std::size_t i = 0; i < noisy.data.size(); ++i) {
      noisy.data[i] = std::complex<double>(rng.normal(), rng.normal());
      clean.data[i] = std::complex<double>(rng.normal(), rng.normal());
    }
    noisy.data[3] *= 1e-5;  // near-silent bin, excluded by the |Y| floor
    CirmMask<double> mask = ideal_cirm(noisy, clean);
    Spectrogram rec = apply_mask(noisy, mask);
    double worst = 0;
    for (std::size_t i = 0; i < rec.data.size(); ++i) {
      if (std::abs(noisy.data[i]) <= 1e-4) continue;
      worst = std::max(worst, std::abs(rec.data[i] - clean.data[i]) / std::abs(clean.data[i]));
    }
    CheckResult r;
    r.name = "cirm/ideal_mask_roundtrip";
    r.measured = worst;
    r.threshold = 1e-6;
    r.pass = worst < r.threshold;
    r.detail = "apply_mask(ideal_cirm) vs clean where |Y| > 1e-4";
    results.push_back(r);
  }
  {
    double worst = 0;
    for (double x = -50.0; x <= 50.0; x += 0.01)
      worst = std::max(worst, std::abs(decompress_value(compress_value(x)) - x));
    CheckResult r;
    r.name = "cirm/compress_roundtrip";
    r.measured = worst;
    r.threshold = 1e-6;
    r.pass = worst < r.threshold;
    r.detail = "max abs err on [-50, 50]";
    results.push_back(r);
  }

  return results;
}

inline bool all_pass(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

inline std::string format_check_line(const CheckResult& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "[%s] %-36s measured=%-12.4g threshold=%-10.4g %s",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.measured, r.threshold,
                r.detail.c_str());
  return buf;
}

}  // namespace isnet
