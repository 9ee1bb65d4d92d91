// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace rirkit {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 24) & 0xff);
}
void wr_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 44 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw_io(path.string() + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* pcm = nullptr;
  size_t pcm_len = 0;

  size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const uint8_t* hdr = data.data() + pos;
    const uint32_t len = rd_u32(hdr + 4);
    const uint8_t* body = hdr + 8;
    if (pos + 8 + len > data.size()) throw_io(path.string() + ": truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (len < 16) throw_io(path.string() + ": short fmt chunk");
      format = rd_u16(body);
      channels = rd_u16(body + 2);
      sample_rate = rd_u32(body + 4);
      bits = rd_u16(body + 14);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      pcm = body;
      pcm_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }
  if (!pcm || channels == 0) throw_io(path.string() + ": missing fmt or data chunk");
  if (channels != 1) throw_io(path.string() + ": only mono supported");

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  if (format == 1 && bits == 16) {
    const size_t n = pcm_len / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t v = static_cast<int16_t>(rd_u16(pcm + 2 * i));
      w.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const size_t n = pcm_len / 4;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      uint32_t u = rd_u32(pcm + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      w.samples[i] = static_cast<double>(f);
    }
  } else {
    throw_io(path.string() + ": unsupported format (need PCM16 or float32)");
  }
  if (w.samples.empty()) throw_io(path.string() + ": empty data chunk");
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  if (w.samples.empty()) throw_validation("write_wav: empty waveform");
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  std::vector<uint8_t> out;
  out.reserve(58 + 4 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  wr_u32(out, 4 + 26 + 12 + 8 + 4 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  // float32 fmt chunk (cbSize = 0) plus the fact chunk mandated for non-PCM
  out.insert(out.end(), {'f', 'm', 't', ' '});
  wr_u32(out, 18);
  wr_u16(out, 3);  // IEEE float
  wr_u16(out, 1);
  wr_u32(out, static_cast<uint32_t>(w.sample_rate));
  wr_u32(out, static_cast<uint32_t>(w.sample_rate) * 4);
  wr_u16(out, 4);
  wr_u16(out, 32);
  wr_u16(out, 0);
  out.insert(out.end(), {'f', 'a', 'c', 't'});
  wr_u32(out, 4);
  wr_u32(out, n);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  wr_u32(out, 4 * n);
  for (double s : w.samples) {
    float f = static_cast<float>(s);
    uint32_t u;
    std::memcpy(&u, &f, 4);
    wr_u32(out, u);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw_io("cannot create " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw_io("write failed: " + path.string());
}

}  // namespace rirkit
