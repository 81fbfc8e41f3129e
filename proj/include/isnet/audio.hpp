// Mono 16 kHz PCM audio and RIFF/WAVE 16-bit file I/O.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isnet {

struct AudioSignal {
  std::vector<double> samples;  // nominal range [-1, 1)
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t rd_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}
inline void wr_u32(std::string& s, std::uint32_t x) {
  s.push_back(char(x & 0xff));
  s.push_back(char((x >> 8) & 0xff));
  s.push_back(char((x >> 16) & 0xff));
  s.push_back(char((x >> 24) & 0xff));
}
inline void wr_u16(std::string& s, std::uint16_t x) {
  s.push_back(char(x & 0xff));
  s.push_back(char((x >> 8) & 0xff));
}

}  // namespace detail

// Reads a RIFF/WAVE file; accepts only PCM, 16-bit, mono, 16 kHz.
// Samples are scaled to [-1, 1) by 1/32768.
inline AudioSignal read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data_ptr = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* ch = bytes.data() + pos;
    std::uint32_t len = detail::rd_u32(ch + 4);
    if (pos + 8 + len > bytes.size()) throw std::runtime_error("wav: truncated chunk in " + path);
    if (std::memcmp(ch, "fmt ", 4) == 0) {
      if (len < 16) throw std::runtime_error("wav: malformed fmt chunk in " + path);
      format = detail::rd_u16(ch + 8);
      channels = detail::rd_u16(ch + 10);
      rate = detail::rd_u32(ch + 12);
      bits = detail::rd_u16(ch + 22);
      have_fmt = true;
    } else if (std::memcmp(ch, "data", 4) == 0) {
      data_ptr = ch + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr)
    throw std::runtime_error("wav: missing fmt or data chunk in " + path);
  if (format != 1) throw std::runtime_error("wav: only PCM supported: " + path);
  if (channels != 1) throw std::runtime_error("wav: mono required: " + path);
  if (bits != 16) throw std::runtime_error("wav: only 16-bit samples supported: " + path);
  if (rate != 16000)
    throw std::runtime_error("wav: 16 kHz required, got " + std::to_string(rate) + ": " + path);

  AudioSignal out;
  out.sample_rate = 16000;
  out.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    std::int16_t s = static_cast<std::int16_t>(detail::rd_u16(data_ptr + 2 * i));
    out.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return out;
}

struct WavWriteStats {
  std::size_t clipped = 0;  // samples saturated on write
};

// Inverse of read_wav: x -> round(x * 32768), saturated to int16.
inline WavWriteStats write_wav(const std::string& path, const AudioSignal& sig) {
  if (sig.sample_rate != 16000)
    throw std::runtime_error("wav: 16 kHz required, got " + std::to_string(sig.sample_rate));
  WavWriteStats stats;
  std::string pcm;
  pcm.reserve(sig.samples.size() * 2);
  for (double x : sig.samples) {
    double scaled = std::nearbyint(x * 32768.0);
    if (scaled > 32767.0) {
      scaled = 32767.0;
      ++stats.clipped;
    } else if (scaled < -32768.0) {
      scaled = -32768.0;
      ++stats.clipped;
    }
    detail::wr_u16(pcm, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }

  std::string hdr;
  hdr.reserve(44);
  hdr += "RIFF";
  detail::wr_u32(hdr, static_cast<std::uint32_t>(36 + pcm.size()));
  hdr += "WAVEfmt ";
  detail::wr_u32(hdr, 16);
  detail::wr_u16(hdr, 1);      // PCM
  detail::wr_u16(hdr, 1);      // mono
  detail::wr_u32(hdr, 16000);  // sample rate
  detail::wr_u32(hdr, 16000 * 2);
  detail::wr_u16(hdr, 2);
  detail::wr_u16(hdr, 16);
  hdr += "data";
  detail::wr_u32(hdr, static_cast<std::uint32_t>(pcm.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("wav: cannot write " + path);
  f.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  f.write(pcm.data(), static_cast<std::streamsize>(pcm.size()));
  if (!f) throw std::runtime_error("wav: write failed: " + path);
  return stats;
}

}  // namespace isnet
