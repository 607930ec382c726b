#include "oae/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "oae/calibration.h"
#include "oae/errors.h"

namespace oae {
namespace {

void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::uint16_t GetU16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t GetU32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool TagIs(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

std::int16_t ToInt16(double v) {
  const double r = std::nearbyint(std::clamp(v, kMinSample, kMaxSample));
  return static_cast<std::int16_t>(r);
}

}  // namespace

std::vector<std::uint8_t> EncodeWav(const SampleBuffer& buffer) {
  const auto samples = buffer.samples();
  const auto channels = static_cast<std::uint16_t>(buffer.channels());
  const auto rate = static_cast<std::uint32_t>(buffer.sample_rate_hz());
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_bytes);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, channels);
  PutU32(out, rate);
  PutU32(out, rate * channels * 2);
  PutU16(out, static_cast<std::uint16_t>(channels * 2));
  PutU16(out, 16);
  PutTag(out, "data");
  PutU32(out, data_bytes);
  for (double v : samples) PutU16(out, static_cast<std::uint16_t>(ToInt16(v)));
  return out;
}

SampleBuffer DecodeWav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !TagIs(bytes, 0, "RIFF") || !TagIs(bytes, 8, "WAVE")) {
    throw IoError("not a RIFF/WAVE stream");
  }
  std::size_t at = 12;
  int channels = 0;
  int rate = 0;
  bool have_fmt = false;
  while (at + 8 <= bytes.size()) {
    const std::uint32_t size = GetU32(bytes, at + 4);
    const std::size_t body = at + 8;
    if (body + size > bytes.size()) throw IoError("truncated WAV chunk");
    if (TagIs(bytes, at, "fmt ")) {
      if (size < 16) throw IoError("short fmt chunk");
      if (GetU16(bytes, body) != 1) throw IoError("only PCM WAV is supported");
      channels = GetU16(bytes, body + 2);
      rate = static_cast<int>(GetU32(bytes, body + 4));
      if (GetU16(bytes, body + 14) != 16) throw IoError("only 16-bit WAV is supported");
      have_fmt = true;
    } else if (TagIs(bytes, at, "data")) {
      if (!have_fmt) throw IoError("data chunk before fmt chunk");
      std::vector<double> samples(size / 2);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i] = static_cast<std::int16_t>(GetU16(bytes, body + 2 * i));
      }
      return SampleBuffer(std::move(samples), channels, rate);
    }
    at = body + size + (size & 1u);
  }
  throw IoError("WAV stream has no data chunk");
}

void WriteWav(const std::filesystem::path& path, const SampleBuffer& buffer) {
  const auto bytes = EncodeWav(buffer);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

SampleBuffer ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeWav(bytes);
}

SampleBuffer Quantize(const SampleBuffer& buffer) {
  std::vector<double> out(buffer.samples().begin(), buffer.samples().end());
  for (double& v : out) v = ToInt16(v);
  return SampleBuffer(std::move(out), buffer.channels(), buffer.sample_rate_hz());
}

}  // namespace oae
