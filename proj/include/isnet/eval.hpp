// SI-SDR and the evaluation harness comparing noisy vs enhanced signals
// against clean references.
#pragma once

#include <cmath>
#include <functional>
#include <sstream>

#include "isnet/data.hpp"
#include "isnet/model.hpp"

namespace isnet {

// Scale-invariant signal-to-distortion ratio in dB, capped at +-100.
inline double si_sdr(const AudioSignal& est, const AudioSignal& ref) {
  if (est.samples.size() != ref.samples.size())
    throw std::invalid_argument("si_sdr: length mismatch");
  double rr = 0.0, er = 0.0;
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    rr += ref.samples[i] * ref.samples[i];
    er += est.samples[i] * ref.samples[i];
  }
  if (rr <= 0.0) throw std::invalid_argument("si_sdr: silent reference");
  const double a = er / rr;  // projection coefficient
  double target = 0.0, resid = 0.0;
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    const double s = a * ref.samples[i];
    const double e = est.samples[i] - s;
    target += s * s;
    resid += e * e;
  }
  if (resid <= 0.0) return 100.0;
  if (target <= 0.0) return -100.0;
  const double db = 10.0 * std::log10(target / resid);
  return std::min(100.0, std::max(-100.0, db));
}

// stft -> mask -> decompress -> apply -> istft; output length == input length.
inline AudioSignal enhance_signal(const AudioSignal& in, Model<float>& model) {
  const ModelConfig& cfg = model.config();
  Spectrogram spec = stft(in, cfg.win_len, cfg.hop);
  Tensor<float> mag = magnitude<float>(spec);
  CirmMask<float> compressed = model.predict_mask(mag);
  CirmMask<double> mask;
  mask.domain = MaskDomain::compressed;
  mask.mr = compressed.mr.template cast<double>();
  mask.mi = compressed.mi.template cast<double>();
  Spectrogram enhanced = apply_mask(spec, decompress(mask));
  return istft(enhanced, in.samples.size());
}

struct EvalItemReport {
  std::size_t id = 0;
  double snr_db = 0.0;
  double sisdr_noisy = 0.0;
  double sisdr_enh = 0.0;
  double delta = 0.0;
};

struct EvalReport {
  std::string variant;
  std::vector<EvalItemReport> items;
  double mean_noisy = 0.0, mean_enh = 0.0, mean_delta = 0.0;
};

// Enhancement is abstracted so oracles (identity mask, ideal mask) run
// through the same harness as a trained model.
using EnhanceFn = std::function<AudioSignal(const AudioSignal& noisy, const AudioSignal& clean)>;

inline EvalReport evaluate_with(const EnhanceFn& enhance, const MixSpec& spec,
                                std::size_t items) {
  EvalReport rep;
  for (std::size_t i = 0; i < items; ++i) {
    const std::uint64_t item_seed = derive_seed(spec.seed, kEvalSalt, i);
    MixItem item = make_mix_item(spec, item_seed);
    AudioSignal enhanced = enhance(item.noisy, item.clean);
    EvalItemReport r;
    r.id = i;
    r.snr_db = item.snr_db;
    r.sisdr_noisy = si_sdr(item.noisy, item.clean);
    r.sisdr_enh = si_sdr(enhanced, item.clean);
    r.delta = r.sisdr_enh - r.sisdr_noisy;
    rep.items.push_back(r);
  }
  for (const auto& r : rep.items) {
    rep.mean_noisy += r.sisdr_noisy;
    rep.mean_enh += r.sisdr_enh;
    rep.mean_delta += r.delta;
  }
  if (!rep.items.empty()) {
    rep.mean_noisy /= static_cast<double>(rep.items.size());
    rep.mean_enh /= static_cast<double>(rep.items.size());
    rep.mean_delta /= static_cast<double>(rep.items.size());
  }
  return rep;
}

inline EvalReport evaluate(Model<float>& model, const MixSpec& spec, std::size_t items) {
  EvalReport rep = evaluate_with(
      [&](const AudioSignal& noisy, const AudioSignal&) { return enhance_signal(noisy, model); },
      spec, items);
  rep.variant = to_string(model.config().variant);
  return rep;
}

inline std::string eval_report_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << "id,snr_db,sisdr_noisy,sisdr_enh,delta\n";
  char buf[160];
  for (const auto& r : rep.items) {
    std::snprintf(buf, sizeof(buf), "%zu,%.3f,%.4f,%.4f,%.4f\n", r.id, r.snr_db, r.sisdr_noisy,
                  r.sisdr_enh, r.delta);
    os << buf;
  }
  return os.str();
}

inline std::string eval_report_summary(const EvalReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "items=%zu variant=%s mean SI-SDR noisy=%.3f dB enhanced=%.3f dB delta=%+.3f dB",
                rep.items.size(), rep.variant.c_str(), rep.mean_noisy, rep.mean_enh,
                rep.mean_delta);
  return buf;
}

}  // namespace isnet
