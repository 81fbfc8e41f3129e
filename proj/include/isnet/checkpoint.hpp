// Checkpoint files. Everything is little-endian and layout is fixed so the
// format can be read from any language:
//
//   offset  size        field
//   0       8           magic "ISNCKPT1"
//   8       4           u32 format version (currently 1)
//   12      4           u32 FNV-1a hash of the config text
//   16      4           u32 config text length L
//   20      L           config text (key=value lines, '\n' separated)
//           4           u32 tensor count N
//   per tensor, in registration order:
//           4           u32 name length
//                       name bytes
//           4           u32 rank R
//           8*R         u64 dims
//           4*numel     f32 values
//   then:
//           1           u8 has_adam
//   if has_adam == 1:
//           8           u64 adam step
//           4*numel     f32 first moments, per tensor in the same order
//           4*numel     f32 second moments, per tensor in the same order
//           1           u8 has_train_state
//   if has_train_state == 1:
//           8           u64 train step
//           8           f64 running loss
//           4           u32 rng text length
//                       rng text (mt19937_64 stream state)
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "isnet/model.hpp"

namespace isnet {

inline constexpr char kCkptMagic[9] = "ISNCKPT1";
inline constexpr std::uint32_t kCkptVersion = 1;

struct TrainStateInfo {
  std::uint64_t step = 0;
  double running_loss = 0.0;
  std::string rng_state;
};

namespace detail {

struct ByteWriter {
  std::ofstream f;
  explicit ByteWriter(const std::string& path) : f(path, std::ios::binary | std::ios::trunc) {
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
  }
  void raw(const void* p, std::size_t n) { f.write(static_cast<const char*>(p), n); }
  void u8(std::uint8_t x) { raw(&x, 1); }
  void u32(std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                          static_cast<unsigned char>(x >> 16),
                          static_cast<unsigned char>(x >> 24)};
    raw(b, 4);
  }
  void u64(std::uint64_t x) {
    u32(static_cast<std::uint32_t>(x));
    u32(static_cast<std::uint32_t>(x >> 32));
  }
  void f32(float x) { u32(std::bit_cast<std::uint32_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
};

struct ByteReader {
  std::string bytes;
  std::size_t pos = 0;
  explicit ByteReader(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    bytes.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }
  void need(std::size_t n) const {
    if (pos + n > bytes.size())
      throw std::runtime_error("checkpoint: unexpected end of file");
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  }
  std::uint8_t u8() {
    std::uint8_t x;
    raw(&x, 1);
    return x;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
  }
  std::uint64_t u64() {
    std::uint64_t lo = u32();
    return lo | (std::uint64_t(u32()) << 32);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(bytes.data() + pos, n);
    pos += n;
    return s;
  }
};

}  // namespace detail

template <class Real>
inline void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                            const ParamStore<Real>& ps, bool with_adam = true,
                            const TrainStateInfo* train = nullptr) {
  detail::ByteWriter w(path);
  w.raw(kCkptMagic, 8);
  w.u32(kCkptVersion);
  const std::string cfg_text = cfg.serialize();
  w.u32(fnv1a(cfg_text));
  w.str(cfg_text);
  w.u32(static_cast<std::uint32_t>(ps.count()));
  for (std::size_t i = 0; i < ps.count(); ++i) {
    const Param<Real>& p = ps.at(i);
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.ndim()));
    for (auto d : p.value.shape) w.u64(d);
    for (Real x : p.value.v) w.f32(static_cast<float>(x));
  }
  const bool adam_ok = with_adam && ps.count() > 0 && ps.at(0).m.size() == ps.at(0).value.size();
  w.u8(adam_ok ? 1 : 0);
  if (adam_ok) {
    w.u64(ps.adam_step);
    for (std::size_t i = 0; i < ps.count(); ++i)
      for (Real x : ps.at(i).m.v) w.f32(static_cast<float>(x));
    for (std::size_t i = 0; i < ps.count(); ++i)
      for (Real x : ps.at(i).v.v) w.f32(static_cast<float>(x));
  }
  w.u8(train ? 1 : 0);
  if (train) {
    w.u64(train->step);
    w.f64(train->running_loss);
    w.str(train->rng_state);
  }
  w.f.flush();
  if (!w.f) throw std::runtime_error("checkpoint: write failed: " + path);
}

// Reads only the embedded model config (cheap header peek).
inline ModelConfig read_checkpoint_config(const std::string& path) {
  detail::ByteReader r(path);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic, not a checkpoint: " + path);
  const std::uint32_t ver = r.u32();
  if (ver != kCkptVersion)
    throw std::runtime_error("checkpoint: format version " + std::to_string(ver) +
                             " unsupported, this build reads version " +
                             std::to_string(kCkptVersion));
  const std::uint32_t hash = r.u32();
  const std::string cfg_text = r.str();
  if (fnv1a(cfg_text) != hash)
    throw std::runtime_error("checkpoint: config hash mismatch (corrupt header)");
  return ModelConfig::deserialize(cfg_text);
}

template <class Real>
struct LoadedModel {
  ModelConfig cfg;
  std::unique_ptr<Model<Real>> model;
  bool has_adam = false;
  bool has_train_state = false;
  TrainStateInfo train;
};

template <class Real>
inline LoadedModel<Real> load_checkpoint(const std::string& path) {
  detail::ByteReader r(path);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic, not a checkpoint: " + path);
  const std::uint32_t ver = r.u32();
  if (ver != kCkptVersion)
    throw std::runtime_error("checkpoint: format version " + std::to_string(ver) +
                             " unsupported, this build reads version " +
                             std::to_string(kCkptVersion));
  const std::uint32_t hash = r.u32();
  const std::string cfg_text = r.str();
  if (fnv1a(cfg_text) != hash)
    throw std::runtime_error("checkpoint: config hash mismatch (corrupt header)");

  LoadedModel<Real> out;
  out.cfg = ModelConfig::deserialize(cfg_text);
  out.model = std::make_unique<Model<Real>>(out.cfg, /*seed=*/0);
  ParamStore<Real>& ps = out.model->store();

  const std::uint32_t count = r.u32();
  if (count != ps.count())
    throw std::runtime_error("checkpoint: tensor count " + std::to_string(count) +
                             " does not match model layout (" + std::to_string(ps.count()) + ")");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    Param<Real>* p = ps.find(name);
    if (!p) throw std::runtime_error("checkpoint: unknown tensor " + name);
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
    if (shape != p->value.shape)
      throw std::runtime_error("checkpoint: tensor " + name + " has shape " + shape_str(shape) +
                               ", model expects " + shape_str(p->value.shape));
    for (auto& x : p->value.v) x = static_cast<Real>(r.f32());
  }
  out.has_adam = r.u8() != 0;
  if (out.has_adam) {
    ps.adam_step = r.u64();
    for (std::size_t i = 0; i < ps.count(); ++i) {
      Param<Real>& p = ps.at(i);
      p.m = Tensor<Real>::zeros(p.value.shape);
      for (auto& x : p.m.v) x = static_cast<Real>(r.f32());
    }
    for (std::size_t i = 0; i < ps.count(); ++i) {
      Param<Real>& p = ps.at(i);
      p.v = Tensor<Real>::zeros(p.value.shape);
      for (auto& x : p.v.v) x = static_cast<Real>(r.f32());
    }
  }
  out.has_train_state = r.u8() != 0;
  if (out.has_train_state) {
    out.train.step = r.u64();
    out.train.running_loss = r.f64();
    out.train.rng_state = r.str();
  }
  return out;
}

}  // namespace isnet
