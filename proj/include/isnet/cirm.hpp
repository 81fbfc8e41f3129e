// Complex ideal ratio mask: definition, bounded compression for training,
// and application to a noisy spectrogram.
#pragma once

#include <cmath>
#include <stdexcept>

#include "isnet/stft.hpp"
#include "isnet/tensor.hpp"

namespace isnet {

enum class MaskDomain { uncompressed, compressed };

inline constexpr double kCirmK = 10.0;   // compression bound
inline constexpr double kCirmC = 0.1;    // compression slope
// Denominator guard in the ideal mask. Small enough that masked
// reconstruction stays within 1e-6 relative wherever |Y| > 1e-4.
inline constexpr double kCirmEps = 1e-15;

template <class Real>
struct CirmMask {
  Tensor<Real> mr, mi;  // [F, T] real and imaginary planes
  MaskDomain domain = MaskDomain::uncompressed;
};

// c(x) = K (1 - e^{-Cx}) / (1 + e^{-Cx}) = K tanh(Cx/2)
inline double compress_value(double x) { return kCirmK * std::tanh(0.5 * kCirmC * x); }

inline double decompress_value(double y) {
  const double lim = kCirmK - 1e-6;
  if (y > lim) y = lim;
  if (y < -lim) y = -lim;
  return -std::log((kCirmK - y) / (kCirmK + y)) / kCirmC;
}

// M = S conj(Y) / (|Y|^2 + eps), componentwise over the spectrogram.
template <class Real = double>
inline CirmMask<Real> ideal_cirm(const Spectrogram& noisy, const Spectrogram& clean) {
  if (noisy.F != clean.F || noisy.T != clean.T)
    throw std::invalid_argument("ideal_cirm: shape mismatch");
  CirmMask<Real> m;
  m.domain = MaskDomain::uncompressed;
  m.mr = Tensor<Real>({noisy.F, noisy.T});
  m.mi = Tensor<Real>({noisy.F, noisy.T});
  for (std::size_t f = 0; f < noisy.F; ++f) {
    for (std::size_t t = 0; t < noisy.T; ++t) {
      const std::complex<double> y = noisy.at(f, t), s = clean.at(f, t);
      const double denom = std::norm(y) + kCirmEps;
      m.mr.at(f, t) = static_cast<Real>((y.real() * s.real() + y.imag() * s.imag()) / denom);
      m.mi.at(f, t) = static_cast<Real>((y.real() * s.imag() - y.imag() * s.real()) / denom);
    }
  }
  return m;
}

template <class Real>
inline CirmMask<Real> compress(const CirmMask<Real>& m) {
  if (m.domain != MaskDomain::uncompressed)
    throw std::invalid_argument("compress: mask already compressed");
  CirmMask<Real> out;
  out.domain = MaskDomain::compressed;
  out.mr = Tensor<Real>(m.mr.shape);
  out.mi = Tensor<Real>(m.mi.shape);
  for (std::size_t i = 0; i < m.mr.size(); ++i) {
    out.mr.v[i] = static_cast<Real>(compress_value(static_cast<double>(m.mr.v[i])));
    out.mi.v[i] = static_cast<Real>(compress_value(static_cast<double>(m.mi.v[i])));
  }
  return out;
}

template <class Real>
inline CirmMask<Real> decompress(const CirmMask<Real>& m) {
  if (m.domain != MaskDomain::compressed)
    throw std::invalid_argument("decompress: mask is not compressed");
  CirmMask<Real> out;
  out.domain = MaskDomain::uncompressed;
  out.mr = Tensor<Real>(m.mr.shape);
  out.mi = Tensor<Real>(m.mi.shape);
  for (std::size_t i = 0; i < m.mr.size(); ++i) {
    out.mr.v[i] = static_cast<Real>(decompress_value(static_cast<double>(m.mr.v[i])));
    out.mi.v[i] = static_cast<Real>(decompress_value(static_cast<double>(m.mi.v[i])));
  }
  return out;
}

// S~ = M * Y (complex product). Rejects compressed masks so the decompress
// step is always explicit.
template <class Real>
inline Spectrogram apply_mask(const Spectrogram& noisy, const CirmMask<Real>& mask) {
  if (mask.domain == MaskDomain::compressed)
    throw std::invalid_argument("apply_mask: mask must be decompressed first");
  if (mask.mr.ndim() != 2 || mask.mr.dim(0) != noisy.F || mask.mr.dim(1) != noisy.T)
    throw std::invalid_argument("apply_mask: shape mismatch");
  Spectrogram out(noisy.F, noisy.T, noisy.win_len, noisy.hop);
  for (std::size_t f = 0; f < noisy.F; ++f) {
    for (std::size_t t = 0; t < noisy.T; ++t) {
      const std::complex<double> y = noisy.at(f, t);
      const double mr = static_cast<double>(mask.mr.at(f, t));
      const double mi = static_cast<double>(mask.mi.at(f, t));
      out.at(f, t) = std::complex<double>(mr * y.real() - mi * y.imag(),
                                          mr * y.imag() + mi * y.real());
    }
  }
  return out;
}

}  // namespace isnet
