// Desk-scale data pipeline: synthetic clean/noise sources, dynamic SNR
// mixing and fixed-length training batches with compressed ideal-mask
// targets.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "isnet/audio.hpp"
#include "isnet/cirm.hpp"
#include "isnet/stft.hpp"
#include "isnet/subband.hpp"

namespace isnet {

// Seed salts keeping the training and evaluation item streams disjoint even
// under the same base seed.
inline constexpr std::uint64_t kTrainSalt = 0x7261696e;
inline constexpr std::uint64_t kEvalSalt = 0x6576616c;

// Sum of a few harmonics of a random fundamental, each with a slow amplitude
// envelope. Spectrally sparse, which is the structure subband models exploit.
inline AudioSignal synth_clean(std::uint64_t seed, double duration_s) {
  if (duration_s < 1.0) throw std::invalid_argument("synth_clean: duration must be >= 1 s");
  Rng rng(mix_seed(seed));
  const std::size_t len = static_cast<std::size_t>(duration_s * 16000.0);
  const int tones = 3 + static_cast<int>(rng.index(6));  // 3..8
  const double f0 = rng.uniform(80.0, 280.0);

  AudioSignal sig;
  sig.samples.assign(len, 0.0);
  const double two_pi = 6.283185307179586476925286766559;
  for (int k = 0; k < tones; ++k) {
    const double harmonic = 1.0 + rng.index(10);  // multiple of f0, may repeat
    const double freq = f0 * harmonic;
    const double phase = rng.uniform(0.0, two_pi);
    const double amp = rng.uniform(0.3, 1.0) / (1.0 + 0.3 * harmonic);
    const double env_rate = rng.uniform(0.5, 3.0);  // Hz, slow modulation
    const double env_phase = rng.uniform(0.0, two_pi);
    // Both oscillators as phasor rotations; drift over a few seconds is
    // far below the synthesis tolerances.
    std::complex<double> tone = std::polar(1.0, phase);
    const std::complex<double> tone_step = std::polar(1.0, two_pi * freq / 16000.0);
    std::complex<double> env = std::polar(1.0, env_phase);
    const std::complex<double> env_step = std::polar(1.0, two_pi * env_rate / 16000.0);
    for (std::size_t i = 0; i < len; ++i) {
      sig.samples[i] += amp * (0.55 + 0.45 * env.imag()) * tone.imag();
      tone *= tone_step;
      env *= env_step;
    }
  }
  double peak = 0.0;
  for (double x : sig.samples) peak = std::max(peak, std::abs(x));
  const double scale = (peak > 0.0) ? 0.5 / peak : 0.0;
  for (double& x : sig.samples) x *= scale;
  return sig;
}

// White Gaussian noise, peak-normalized to 0.5.
inline AudioSignal synth_noise(std::uint64_t seed, double duration_s) {
  if (duration_s < 1.0) throw std::invalid_argument("synth_noise: duration must be >= 1 s");
  Rng rng(mix_seed(seed ^ 0x9e3779b9u));
  const std::size_t len = static_cast<std::size_t>(duration_s * 16000.0);
  AudioSignal sig;
  sig.samples.resize(len);
  double peak = 0.0;
  for (auto& x : sig.samples) {
    x = rng.normal();
    peak = std::max(peak, std::abs(x));
  }
  const double scale = (peak > 0.0) ? 0.5 / peak : 0.0;
  for (double& x : sig.samples) x *= scale;
  return sig;
}

// Rescales the noise so that 10*log10(P_clean / P_noise) == snr_db exactly,
// then adds it to the clean signal.
inline AudioSignal mix_at_snr(const AudioSignal& clean, const AudioSignal& noise,
                              double snr_db) {
  if (clean.samples.size() != noise.samples.size())
    throw std::invalid_argument("mix_at_snr: length mismatch");
  double p_clean = 0.0, p_noise = 0.0;
  for (double x : clean.samples) p_clean += x * x;
  for (double x : noise.samples) p_noise += x * x;
  if (p_clean <= 0.0) throw std::invalid_argument("mix_at_snr: clean signal is silent");
  if (p_noise <= 0.0) throw std::invalid_argument("mix_at_snr: noise signal is silent");
  const double alpha = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  AudioSignal out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(clean.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = clean.samples[i] + alpha * noise.samples[i];
  return out;
}

struct MixSpec {
  double snr_min = -5.0, snr_max = 20.0;
  std::size_t frames = 192;
  std::uint64_t seed = 0;
  std::size_t win_len = 512, hop = 256;

  std::size_t chunk_samples() const { return win_len + (frames - 1) * hop; }
};

struct MixItem {
  AudioSignal clean, noisy;
  double snr_db = 0.0;
};

// One deterministic mixture; `item_seed` fully determines the draw.
inline MixItem make_mix_item(const MixSpec& spec, std::uint64_t item_seed) {
  if (spec.snr_min > spec.snr_max) throw std::invalid_argument("mix spec: snr range reversed");
  if (spec.frames == 0) throw std::invalid_argument("mix spec: frames must be >= 1");
  const std::size_t need = spec.chunk_samples();
  const double dur = std::max(1.0, static_cast<double>(need) / 16000.0 + 0.5);

  Rng rng(mix_seed(item_seed));
  AudioSignal clean = synth_clean(derive_seed(item_seed, 1), dur);
  AudioSignal noise = synth_noise(derive_seed(item_seed, 2), dur);

  const std::size_t slack_c = clean.samples.size() - need;
  const std::size_t slack_n = noise.samples.size() - need;
  const std::size_t off_c = slack_c ? rng.index(slack_c) : 0;
  const std::size_t off_n = slack_n ? rng.index(slack_n) : 0;
  clean.samples = std::vector<double>(clean.samples.begin() + off_c,
                                      clean.samples.begin() + off_c + need);
  noise.samples = std::vector<double>(noise.samples.begin() + off_n,
                                      noise.samples.begin() + off_n + need);

  MixItem item;
  item.snr_db = rng.uniform(spec.snr_min, spec.snr_max);
  item.clean = std::move(clean);
  item.noisy = mix_at_snr(item.clean, noise, item.snr_db);
  return item;
}

template <class Real>
struct Batch {
  std::vector<Tensor<Real>> mags;       // raw noisy magnitude [F, T]; the model normalizes
  std::vector<Tensor<Real>> target_mr;  // compressed ideal mask planes [F, T]
  std::vector<Tensor<Real>> target_mi;
  std::vector<double> snr_db;
  std::vector<Spectrogram> noisy_specs;  // filled when keep_specs is set
};

// Deterministic batch for training step `batch_index`.
template <class Real>
inline Batch<Real> make_batch(const MixSpec& spec, std::size_t batch_size,
                              std::uint64_t batch_index = 0, bool keep_specs = false) {
  Batch<Real> batch;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::uint64_t item_seed = derive_seed(spec.seed, kTrainSalt + batch_index, i);
    MixItem item = make_mix_item(spec, item_seed);
    Spectrogram noisy_spec = stft(item.noisy, spec.win_len, spec.hop);
    Spectrogram clean_spec = stft(item.clean, spec.win_len, spec.hop);
    if (noisy_spec.T != spec.frames)
      throw std::runtime_error("make_batch: frame count " + std::to_string(noisy_spec.T) +
                               " != requested " + std::to_string(spec.frames));

    Tensor<double> mag = magnitude<double>(noisy_spec);
    CirmMask<double> target = compress(ideal_cirm(noisy_spec, clean_spec));
    batch.mags.push_back(mag.template cast<Real>());
    batch.target_mr.push_back(target.mr.template cast<Real>());
    batch.target_mi.push_back(target.mi.template cast<Real>());
    batch.snr_db.push_back(item.snr_db);
    if (keep_specs) batch.noisy_specs.push_back(std::move(noisy_spec));
  }
  return batch;
}

}  // namespace isnet
