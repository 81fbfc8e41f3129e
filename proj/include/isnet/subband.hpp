// Subband units: magnitude extraction, the unfold operation with circular or
// reflected boundary handling, and input magnitude normalization.
#pragma once

#include <stdexcept>
#include <string>

#include "isnet/stft.hpp"
#include "isnet/tensor.hpp"

namespace isnet {

enum class BoundaryMode { circular, reflect };

inline const char* to_string(BoundaryMode m) {
  return m == BoundaryMode::circular ? "circular" : "reflect";
}
inline BoundaryMode boundary_from_string(const std::string& s) {
  if (s == "circular") return BoundaryMode::circular;
  if (s == "reflect") return BoundaryMode::reflect;
  throw std::invalid_argument("unknown boundary mode: " + s);
}

// Maps a (possibly out-of-range) neighbor index into [0, F).
inline std::size_t neighbor_row(std::ptrdiff_t idx, std::size_t F, BoundaryMode mode) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(F);
  if (idx >= 0 && idx < n) return static_cast<std::size_t>(idx);
  if (mode == BoundaryMode::circular) {
    std::ptrdiff_t r = idx % n;
    if (r < 0) r += n;
    return static_cast<std::size_t>(r);
  }
  // reflect without repeating the edge row; valid for |overhang| < F
  if (idx < 0) return static_cast<std::size_t>(-idx);
  return static_cast<std::size_t>(2 * n - 2 - idx);
}

template <class Real>
inline Tensor<Real> magnitude(const Spectrogram& spec) {
  Tensor<Real> mag({spec.F, spec.T});
  for (std::size_t f = 0; f < spec.F; ++f)
    for (std::size_t t = 0; t < spec.T; ++t) mag.at(f, t) = static_cast<Real>(std::abs(spec.at(f, t)));
  return mag;
}

// mag [F, T] -> units [F, F_s, T] with F_s = 2n+1; unit i holds rows
// i-n .. i+n with boundary rows resolved by `mode`.
template <class Real>
inline Tensor<Real> unfold(const Tensor<Real>& mag, std::size_t n,
                           BoundaryMode mode = BoundaryMode::circular) {
  if (mag.ndim() != 2) throw std::invalid_argument("unfold: expected [F, T]");
  const std::size_t F = mag.dim(0), T = mag.dim(1);
  if (F <= 2 * n)
    throw std::invalid_argument("unfold: need F > 2n, got F=" + std::to_string(F) +
                                ", n=" + std::to_string(n));
  const std::size_t fs = 2 * n + 1;
  Tensor<Real> units({F, fs, T});
  for (std::size_t i = 0; i < F; ++i) {
    for (std::size_t k = 0; k < fs; ++k) {
      const std::size_t src = neighbor_row(
          static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) -
              static_cast<std::ptrdiff_t>(n),
          F, mode);
      std::copy_n(&mag.at(src, 0), T, &units.at(i, k, 0));
    }
  }
  return units;
}

// Time-major gather used by the model: mag [F, T] -> [F, T, F_s].
template <class Real>
inline Tensor<Real> unfold_time_major(const Tensor<Real>& mag, std::size_t n, BoundaryMode mode) {
  if (mag.ndim() != 2) throw std::invalid_argument("unfold: expected [F, T]");
  const std::size_t F = mag.dim(0), T = mag.dim(1);
  if (F <= 2 * n)
    throw std::invalid_argument("unfold: need F > 2n, got F=" + std::to_string(F) +
                                ", n=" + std::to_string(n));
  const std::size_t fs = 2 * n + 1;
  Tensor<Real> units({F, T, fs});
  for (std::size_t i = 0; i < F; ++i) {
    for (std::size_t k = 0; k < fs; ++k) {
      const std::size_t src = neighbor_row(
          static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) -
              static_cast<std::ptrdiff_t>(n),
          F, mode);
      const Real* col = &mag.at(src, 0);
      for (std::size_t t = 0; t < T; ++t) units.at(i, t, k) = col[t];
    }
  }
  return units;
}

template <class Real>
struct NormState {
  Real denom = Real(1);  // per-utterance mean magnitude + eps
};

// Scales the magnitude spectrogram by 1 / (mean + eps). The enhancement
// target is a mask, so the output never needs denormalizing.
template <class Real>
inline std::pair<Tensor<Real>, NormState<Real>> normalize_input(const Tensor<Real>& mag) {
  double mean = 0;
  for (auto x : mag.v) mean += static_cast<double>(x);
  if (!mag.v.empty()) mean /= static_cast<double>(mag.v.size());
  NormState<Real> st;
  st.denom = static_cast<Real>(mean + 1e-8);
  Tensor<Real> out(mag.shape);
  const Real inv = Real(1) / st.denom;
  for (std::size_t i = 0; i < mag.size(); ++i) out.v[i] = mag.v[i] * inv;
  return {std::move(out), st};
}

}  // namespace isnet
