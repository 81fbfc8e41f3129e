// STFT / iSTFT with a periodic Hann window.
//
// Conventions (fixed and relied on everywhere):
//   - no center padding: frame t covers samples [t*hop, t*hop + win_len)
//   - the tail is zero-padded so every input sample is covered by a frame
//   - one-sided spectrum, F = win_len/2 + 1
//   - synthesis multiplies by the same window again and normalizes by the
//     per-sample sum of squared windows (weighted overlap-add)
#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "isnet/audio.hpp"
#include "isnet/util.hpp"

namespace isnet {

struct Spectrogram {
  std::vector<std::complex<double>> data;  // [F][T], frequency-major
  std::size_t F = 0, T = 0;
  std::size_t win_len = 0, hop = 0;

  Spectrogram() = default;
  Spectrogram(std::size_t f, std::size_t t, std::size_t win, std::size_t h)
      : data(f * t), F(f), T(t), win_len(win), hop(h) {}

  std::complex<double>& at(std::size_t f, std::size_t t) { return data[f * T + t]; }
  std::complex<double> at(std::size_t f, std::size_t t) const { return data[f * T + t]; }
};

inline std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT. Correctness is gated by the direct-DFT oracle in the
// test suite, not by the choice of algorithm.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double two_pi = 6.283185307179586476925286766559;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? two_pi : -two_pi) / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

}  // namespace detail

inline Spectrogram stft(const AudioSignal& sig, std::size_t win_len = 512,
                        std::size_t hop = 256) {
  if (!detail::is_pow2(win_len)) throw std::invalid_argument("stft: win_len must be a power of two");
  if (hop == 0) throw std::invalid_argument("stft: hop must be positive");
  const std::size_t len = sig.samples.size();
  if (len < win_len) throw std::invalid_argument("stft: input too short");
  check_finite(sig.samples.data(), len, "stft input");

  const std::size_t frames =
      1 + (len - win_len + hop - 1) / hop;  // zero-padded tail frame when needed
  const std::size_t bins = win_len / 2 + 1;
  const std::vector<double> w = hann_periodic(win_len);

  Spectrogram spec(bins, frames, win_len, hop);
  std::vector<std::complex<double>> buf(win_len);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < win_len; ++i) {
      const double x = (start + i < len) ? sig.samples[start + i] : 0.0;
      buf[i] = std::complex<double>(x * w[i], 0.0);
    }
    detail::fft_inplace(buf, false);
    for (std::size_t f = 0; f < bins; ++f) spec.at(f, t) = buf[f];
  }
  return spec;
}

inline AudioSignal istft(const Spectrogram& spec, std::size_t out_len) {
  if (spec.win_len == 0 || spec.hop == 0 || spec.F != spec.win_len / 2 + 1 ||
      !detail::is_pow2(spec.win_len))
    throw std::invalid_argument("istft: inconsistent spectrogram metadata");

  const std::size_t win = spec.win_len, hop = spec.hop, n = spec.win_len;
  const std::vector<double> w = hann_periodic(win);
  const std::size_t total = (spec.T == 0) ? 0 : (spec.T - 1) * hop + win;

  std::vector<double> acc(total, 0.0), wsum(total, 0.0);
  std::vector<std::complex<double>> buf(n);
  for (std::size_t t = 0; t < spec.T; ++t) {
    buf[0] = spec.at(0, t);
    buf[n / 2] = spec.at(n / 2, t);
    for (std::size_t f = 1; f < n / 2; ++f) {
      buf[f] = spec.at(f, t);
      buf[n - f] = std::conj(spec.at(f, t));
    }
    detail::fft_inplace(buf, true);
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < win; ++i) {
      acc[start + i] += buf[i].real() * w[i];
      wsum[start + i] += w[i] * w[i];
    }
  }

  AudioSignal out;
  out.sample_rate = 16000;
  out.samples.assign(out_len, 0.0);
  const std::size_t ncopy = std::min(out_len, total);
  for (std::size_t i = 0; i < ncopy; ++i)
    out.samples[i] = (wsum[i] > 1e-12) ? acc[i] / wsum[i] : 0.0;
  check_finite(out.samples.data(), out.samples.size(), "istft output");
  return out;
}

}  // namespace isnet
