// Network assembly: the subband interaction module, SIL blocks
// (interaction -> shared LSTM -> group norm), the full mask-estimation model
// and its baseline/ablation variants.
#pragma once

#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include "isnet/cirm.hpp"
#include "isnet/nn.hpp"
#include "isnet/subband.hpp"

namespace isnet {

enum class Variant {
  inter_subnet,
  minus_2nd_subinter,
  minus_both_subinter,
  subband_baseline,
  subband_large,
};

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::inter_subnet: return "inter_subnet";
    case Variant::minus_2nd_subinter: return "minus_2nd_subinter";
    case Variant::minus_both_subinter: return "minus_both_subinter";
    case Variant::subband_baseline: return "subband_baseline";
    case Variant::subband_large: return "subband_large";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "inter_subnet") return Variant::inter_subnet;
  if (s == "minus_2nd_subinter") return Variant::minus_2nd_subinter;
  if (s == "minus_both_subinter") return Variant::minus_both_subinter;
  if (s == "subband_baseline") return Variant::subband_baseline;
  if (s == "subband_large") return Variant::subband_large;
  throw std::invalid_argument("unknown model variant: " + s);
}

struct ModelConfig {
  Variant variant = Variant::inter_subnet;
  std::size_t win_len = 512, hop = 256;
  std::size_t bins = 257;  // win_len/2 + 1
  std::size_t n = 15;
  BoundaryMode boundary = BoundaryMode::circular;
  std::size_t subinter1_h = 102;
  std::size_t subinter2_h = 307;
  std::size_t lstm_hidden = 384;
  std::size_t gn_groups = 1;

  std::size_t unit_width() const { return 2 * n + 1; }

  struct BlockSpec {
    bool subinter = false;
    std::size_t subinter_h = 0;
  };

  std::vector<BlockSpec> blocks() const {
    switch (variant) {
      case Variant::inter_subnet:
        return {{true, subinter1_h}, {true, subinter2_h}};
      case Variant::minus_2nd_subinter:
        return {{true, subinter1_h}, {false, 0}};
      case Variant::minus_both_subinter:
      case Variant::subband_baseline:
        return {{false, 0}, {false, 0}};
      case Variant::subband_large:
        return {{false, 0}, {false, 0}, {false, 0}};
    }
    return {};
  }

  // Canonical key=value form; embedded in checkpoints.
  std::string serialize() const {
    std::ostringstream os;
    os << "variant=" << to_string(variant) << "\n"
       << "win_len=" << win_len << "\n"
       << "hop=" << hop << "\n"
       << "bins=" << bins << "\n"
       << "n=" << n << "\n"
       << "boundary=" << isnet::to_string(boundary) << "\n"
       << "subinter1_h=" << subinter1_h << "\n"
       << "subinter2_h=" << subinter2_h << "\n"
       << "lstm_hidden=" << lstm_hidden << "\n"
       << "gn_groups=" << gn_groups << "\n";
    return os.str();
  }

  static ModelConfig deserialize(const std::string& text) {
    ModelConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("model config: malformed line: " + line);
      const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "variant") cfg.variant = variant_from_string(val);
      else if (key == "win_len") cfg.win_len = std::stoull(val);
      else if (key == "hop") cfg.hop = std::stoull(val);
      else if (key == "bins") cfg.bins = std::stoull(val);
      else if (key == "n") cfg.n = std::stoull(val);
      else if (key == "boundary") cfg.boundary = boundary_from_string(val);
      else if (key == "subinter1_h") cfg.subinter1_h = std::stoull(val);
      else if (key == "subinter2_h") cfg.subinter2_h = std::stoull(val);
      else if (key == "lstm_hidden") cfg.lstm_hidden = std::stoull(val);
      else if (key == "gn_groups") cfg.gn_groups = std::stoull(val);
      else throw std::runtime_error("model config: unknown key: " + key);
    }
    return cfg;
  }
};

// Published layer widths for each variant.
inline ModelConfig build_variant(Variant v) {
  ModelConfig cfg;
  cfg.variant = v;
  return cfg;
}
inline ModelConfig build_variant(const std::string& tag) {
  return build_variant(variant_from_string(tag));
}

// Subband interaction: per-unit hidden map, mean over units, fusion of the
// global vector back into each unit, residual to the input.
template <class Real>
struct SubInter {
  Affine<Real> fmap;  // D -> H, per unit per frame
  Affine<Real> rmap;  // H -> H, on the unit mean
  Affine<Real> pmap;  // 2H -> D, fusion back to unit width
  std::size_t D = 0, H = 0;

  SubInter() = default;
  SubInter(ParamStore<Real>& ps, const std::string& name, std::size_t d, std::size_t h, Rng& rng)
      : fmap(ps, name + ".fmap", d, h, rng),
        rmap(ps, name + ".rmap", h, h, rng),
        pmap(ps, name + ".pmap", 2 * h, d, rng),
        D(d),
        H(h) {}

  struct Cache {
    Tensor<Real> x;     // [F, T, D]
    Tensor<Real> h;     // [F, T, H]
    Tensor<Real> hbar;  // [T, H]
    Tensor<Real> z;     // [F, T, 2H]
  };

  // x: [F, T, D] -> [F, T, D]
  Tensor<Real> forward_tm(const Tensor<Real>& x, Cache* cache) const {
    if (x.ndim() != 3 || x.dim(2) != D)
      throw std::invalid_argument("subinter: input shape " + shape_str(x.shape) +
                                  " does not match feature dim " + std::to_string(D));
    const std::size_t F = x.dim(0), T = x.dim(1);
    const std::size_t rows = F * T;

    Tensor<Real> h({F, T, H});
    fmap.forward_rows(x.data(), h.data(), rows);

    Tensor<Real> hbar = mean_over_set(h);  // [T, H]
    Tensor<Real> htil({T, H});
    rmap.forward_rows(hbar.data(), htil.data(), T);

    Tensor<Real> z({F, T, 2 * H});
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t t = 0; t < T; ++t) {
        std::copy_n(&h.at(f, t, 0), H, &z.at(f, t, 0));
        std::copy_n(&htil.at(t, 0), H, &z.at(f, t, 0) + H);
      }

    Tensor<Real> y({F, T, D});
    pmap.forward_rows(z.data(), y.data(), rows);
    for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += x.v[i];
    y.check_finite("subinter output");

    if (cache) {
      cache->x = x;
      cache->h = std::move(h);
      cache->hbar = std::move(hbar);
      cache->z = std::move(z);
    }
    return y;
  }

  Tensor<Real> backward_tm(const Cache& cache, const Tensor<Real>& dy) {
    const std::size_t F = cache.x.dim(0), T = cache.x.dim(1);
    const std::size_t rows = F * T;
    if (dy.shape != cache.x.shape)
      throw std::invalid_argument("subinter backward: adjoint shape " + shape_str(dy.shape));

    Tensor<Real> dz({F, T, 2 * H});
    pmap.backward_rows(cache.z.data(), dy.data(), dz.data(), rows);

    Tensor<Real> dh({F, T, H});
    Tensor<Real> dhtil({T, H});
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t t = 0; t < T; ++t) {
        std::copy_n(&dz.at(f, t, 0), H, &dh.at(f, t, 0));
        const Real* src = &dz.at(f, t, 0) + H;
        Real* dst = &dhtil.at(t, 0);
        for (std::size_t j = 0; j < H; ++j) dst[j] += src[j];
      }

    Tensor<Real> dhbar({T, H});
    rmap.backward_rows(cache.hbar.data(), dhtil.data(), dhbar.data(), T);

    const Real invF = Real(1) / static_cast<Real>(F);
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t t = 0; t < T; ++t) {
        Real* dst = &dh.at(f, t, 0);
        const Real* src = &dhbar.at(t, 0);
        for (std::size_t j = 0; j < H; ++j) dst[j] += src[j] * invF;
      }

    Tensor<Real> dx = dy;  // residual path
    fmap.backward_rows(cache.x.data(), dh.data(), dx.data(), rows, /*dx_accumulate=*/true);
    return dx;
  }
};

// Contract form on [F, D, T] units: transpose in, interact, transpose out.
template <class Real>
inline Tensor<Real> subinter_forward(const Tensor<Real>& units, const SubInter<Real>& module) {
  if (units.ndim() != 3 || units.dim(1) != module.D)
    throw std::invalid_argument("subinter_forward: expected [F, " + std::to_string(module.D) +
                                ", T], got " + shape_str(units.shape));
  const std::size_t F = units.dim(0), D = units.dim(1), T = units.dim(2);
  Tensor<Real> tm({F, T, D});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t t = 0; t < T; ++t) tm.at(f, t, d) = units.at(f, d, t);
  Tensor<Real> out_tm = module.forward_tm(tm, nullptr);
  Tensor<Real> out({F, D, T});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t t = 0; t < T; ++t) out.at(f, d, t) = out_tm.at(f, t, d);
  return out;
}

// One SIL block: optional subband interaction, shared LSTM over time per
// unit, group normalization over the hidden channels.
template <class Real>
struct SilBlock {
  std::optional<SubInter<Real>> subinter;
  Lstm<Real> lstm;
  GroupNorm<Real> gnorm;

  SilBlock() = default;
  SilBlock(ParamStore<Real>& ps, const std::string& name, bool with_subinter,
           std::size_t subinter_h, std::size_t in_dim, std::size_t hidden, std::size_t gn_groups,
           Rng& rng) {
    if (with_subinter) subinter.emplace(ps, name + ".subinter", in_dim, subinter_h, rng);
    lstm = Lstm<Real>(ps, name + ".lstm", in_dim, hidden, rng);
    gnorm = GroupNorm<Real>(ps, name + ".gnorm", hidden, gn_groups);
  }

  struct Cache {
    typename SubInter<Real>::Cache si;
    typename Lstm<Real>::Cache lstm;
    typename GroupNorm<Real>::Cache gn;
  };

  // x: [F, T, D] -> [F, T, H]
  Tensor<Real> forward_tm(const Tensor<Real>& x, Cache* cache) {
    const Tensor<Real>* in = &x;
    Tensor<Real> interacted;
    if (subinter) {
      interacted = subinter->forward_tm(x, cache ? &cache->si : nullptr);
      in = &interacted;
    }
    Tensor<Real> h = lstm.forward(*in, cache ? &cache->lstm : nullptr);
    Tensor<Real> y(h.shape);
    gnorm.forward_rows(h.data(), y.data(), h.dim(0) * h.dim(1), cache ? &cache->gn : nullptr);
    y.check_finite("sil block output");
    return y;
  }

  Tensor<Real> backward_tm(Cache& cache, const Tensor<Real>& dy) {
    Tensor<Real> dh(dy.shape);
    gnorm.backward_rows(cache.gn, dy.data(), dh.data());
    Tensor<Real> dx = lstm.backward(cache.lstm, dh);
    if (subinter) dx = subinter->backward_tm(cache.si, dx);
    return dx;
  }
};

template <class Real>
struct MaskPlanes {
  Tensor<Real> mr, mi;  // [F, T]
};

// Full model: magnitude -> normalize -> unfold -> SIL blocks -> per-unit
// affine head emitting (real, imag) mask planes in the compressed domain.
template <class Real>
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(seed);
    const auto blocks = cfg.blocks();
    std::size_t in_dim = cfg.unit_width();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks_.emplace_back(std::make_unique<SilBlock<Real>>(
          store_, "sil" + std::to_string(i + 1), blocks[i].subinter, blocks[i].subinter_h,
          in_dim, cfg.lstm_hidden, cfg.gn_groups, rng));
      in_dim = cfg.lstm_hidden;
    }
    head_ = Affine<Real>(store_, "head", cfg.lstm_hidden, 2, rng);
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore<Real>& store() { return store_; }
  const ParamStore<Real>& store() const { return store_; }
  std::size_t block_count() const { return blocks_.size(); }
  SilBlock<Real>& block(std::size_t i) { return *blocks_[i]; }

  // mag: [F, T] noisy magnitude -> compressed-domain mask planes.
  MaskPlanes<Real> forward(const Tensor<Real>& mag, bool train) {
    if (mag.ndim() != 2 || mag.dim(0) != cfg_.bins)
      throw std::invalid_argument("model: expected magnitude [" + std::to_string(cfg_.bins) +
                                  ", T], got " + shape_str(mag.shape));
    const std::size_t F = mag.dim(0), T = mag.dim(1);
    auto [nmag, norm] = normalize_input(mag);
    (void)norm;
    Tensor<Real> x = unfold_time_major(nmag, cfg_.n, cfg_.boundary);

    if (train) caches_.assign(blocks_.size(), typename SilBlock<Real>::Cache{});
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      x = blocks_[i]->forward_tm(x, train ? &caches_[i] : nullptr);

    const std::size_t rows = F * T;
    Tensor<Real> out({rows, 2});
    head_.forward_rows(x.data(), out.data(), rows);
    if (train) head_input_ = std::move(x);

    MaskPlanes<Real> planes;
    planes.mr = Tensor<Real>({F, T});
    planes.mi = Tensor<Real>({F, T});
    for (std::size_t r = 0; r < rows; ++r) {
      planes.mr.v[r] = out.v[2 * r];
      planes.mi.v[r] = out.v[2 * r + 1];
    }
    planes.mr.check_finite("mask real plane");
    planes.mi.check_finite("mask imag plane");
    return planes;
  }

  // Adjoints of the two planes; accumulates gradients into the store.
  void backward(const Tensor<Real>& dmr, const Tensor<Real>& dmi) {
    if (head_input_.empty()) throw std::runtime_error("model: backward without training forward");
    const std::size_t F = dmr.dim(0), T = dmr.dim(1);
    const std::size_t rows = F * T;
    Tensor<Real> dout({rows, 2});
    for (std::size_t r = 0; r < rows; ++r) {
      dout.v[2 * r] = dmr.v[r];
      dout.v[2 * r + 1] = dmi.v[r];
    }
    Tensor<Real> dx({F, T, cfg_.lstm_hidden});
    head_.backward_rows(head_input_.data(), dout.data(), dx.data(), rows);
    for (std::size_t i = blocks_.size(); i-- > 0;) dx = blocks_[i]->backward_tm(caches_[i], dx);
  }

  // Inference entry point: compressed mask with values clamped into the
  // representable compression range.
  CirmMask<Real> predict_mask(const Tensor<Real>& mag) {
    MaskPlanes<Real> planes = forward(mag, /*train=*/false);
    CirmMask<Real> mask;
    mask.domain = MaskDomain::compressed;
    const Real lim = static_cast<Real>(kCirmK - 1e-6);
    auto clamp = [lim](Tensor<Real>& t) {
      for (auto& x : t.v) x = std::min(lim, std::max(-lim, x));
    };
    mask.mr = std::move(planes.mr);
    mask.mi = std::move(planes.mi);
    clamp(mask.mr);
    clamp(mask.mi);
    return mask;
  }

 private:
  ModelConfig cfg_;
  ParamStore<Real> store_;
  std::vector<std::unique_ptr<SilBlock<Real>>> blocks_;
  Affine<Real> head_;
  std::vector<typename SilBlock<Real>::Cache> caches_;
  Tensor<Real> head_input_;
};

// Contract form of the full forward pass.
template <class Real>
inline CirmMask<Real> model_forward(const Tensor<Real>& mag, Model<Real>& model) {
  return model.predict_mask(mag);
}

struct LayerDesc {
  std::string name;
  std::string shape;
  std::uint64_t params = 0;
};

inline std::vector<LayerDesc> describe(const ModelConfig& cfg) {
  std::vector<LayerDesc> out;
  const auto blocks = cfg.blocks();
  std::size_t in_dim = cfg.unit_width();
  auto aff = [](std::size_t i, std::size_t o) { return static_cast<std::uint64_t>(i * o + o); };
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string base = "sil" + std::to_string(i + 1);
    if (blocks[i].subinter) {
      const std::size_t h = blocks[i].subinter_h;
      std::ostringstream os;
      os << "SubInter " << in_dim << " -> " << h << " (F " << in_dim << " -> " << h << ", R " << h
         << " -> " << h << ", P " << 2 * h << " -> " << in_dim << ")";
      out.push_back({base + ".subinter", os.str(), aff(in_dim, h) + aff(h, h) + aff(2 * h, in_dim)});
    }
    out.push_back({base + ".lstm", "LSTM " + std::to_string(in_dim) + " -> " +
                                       std::to_string(cfg.lstm_hidden),
                   static_cast<std::uint64_t>(4 * (in_dim * cfg.lstm_hidden +
                                                   cfg.lstm_hidden * cfg.lstm_hidden +
                                                   cfg.lstm_hidden))});
    out.push_back({base + ".gnorm",
                   "G-norm " + std::to_string(cfg.lstm_hidden) + " channels (groups=" +
                       std::to_string(cfg.gn_groups) + ")",
                   static_cast<std::uint64_t>(2 * cfg.lstm_hidden)});
    in_dim = cfg.lstm_hidden;
  }
  out.push_back({"head", "Linear " + std::to_string(cfg.lstm_hidden) + " -> 2",
                 aff(cfg.lstm_hidden, 2)});
  return out;
}

inline std::uint64_t config_param_count(const ModelConfig& cfg) {
  std::uint64_t n = 0;
  for (const auto& l : describe(cfg)) n += l.params;
  return n;
}

}  // namespace isnet
