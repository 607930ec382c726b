#include "oae/stream.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>

#include "oae/errors.h"
#include "oae/wav.h"

namespace oae {
namespace {

void PutU32(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t GetU32(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

double Uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<std::uint8_t> EncodePacket(const AudioPacket& packet) {
  std::vector<std::uint8_t> out(kPacketBytes);
  PutU32(out.data(), packet.seq);
  std::copy(packet.payload.begin(), packet.payload.end(), out.begin() + 4);
  return out;
}

AudioPacket DecodePacket(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kPacketBytes) throw IoError("audio packet must be exactly 244 bytes");
  AudioPacket p;
  p.seq = GetU32(bytes.data());
  std::copy(bytes.begin() + 4, bytes.end(), p.payload.begin());
  return p;
}

std::vector<AudioPacket> Packetize(const SampleBuffer& frames, std::uint32_t start_seq) {
  if (frames.channels() != 2) throw ConfigError("packetize expects stereo frames");
  const SampleBuffer q = Quantize(frames);
  const auto s = q.samples();
  const std::size_t n_frames = q.frame_count();
  std::vector<AudioPacket> out;
  out.reserve((n_frames + kFramesPerPacket - 1) / kFramesPerPacket);
  for (std::size_t first = 0; first < n_frames; first += kFramesPerPacket) {
    AudioPacket p;
    p.seq = start_seq + static_cast<std::uint32_t>(out.size());
    const std::size_t count = std::min(kFramesPerPacket, n_frames - first);
    p.valid_frames = static_cast<std::uint16_t>(count);
    for (std::size_t i = 0; i < 2 * count; ++i) {
      const auto v = static_cast<std::uint16_t>(static_cast<std::int16_t>(s[2 * first + i]));
      p.payload[2 * i] = static_cast<std::uint8_t>(v & 0xff);
      p.payload[2 * i + 1] = static_cast<std::uint8_t>(v >> 8);
    }
    out.push_back(p);
  }
  return out;
}

std::vector<AudioPacket> SimulateChannel(std::span<const AudioPacket> packets,
                                         const ChannelConfig& cfg) {
  if (!(cfg.loss_rate >= 0.0 && cfg.loss_rate <= 1.0)) throw ConfigError("loss rate must lie in [0, 1]");
  if (cfg.reorder_window < 0) throw ConfigError("reorder window must be >= 0");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::pair<double, AudioPacket>> kept;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const bool lost = Uniform(rng) < cfg.loss_rate;
    const double slip = cfg.reorder_window > 0 ? Uniform(rng) * (cfg.reorder_window + 1) : 0.0;
    if (!lost) kept.emplace_back(static_cast<double>(i) + slip, packets[i]);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<AudioPacket> out;
  out.reserve(kept.size());
  for (auto& [key, p] : kept) out.push_back(p);
  return out;
}

Reassembled Reassemble(std::span<const AudioPacket> packets, int sample_rate_hz,
                       std::optional<std::uint32_t> first_seq) {
  Reassembled out;
  if (packets.empty()) {
    out.frames = SampleBuffer::Silence(0, 2, sample_rate_hz);
    return out;
  }
  const std::uint32_t ref = first_seq.value_or(packets.front().seq);
  std::map<std::int64_t, const AudioPacket*> ordered;
  for (const auto& p : packets) {
    const std::int64_t unwrapped = static_cast<std::int64_t>(ref) + static_cast<std::int32_t>(p.seq - ref);
    if (!ordered.emplace(unwrapped, &p).second) ++out.report.duplicates;
  }
  const std::int64_t base = first_seq ? static_cast<std::int64_t>(*first_seq) : ordered.begin()->first;
  if (ordered.begin()->first < base) throw IoError("packet precedes the declared first sequence number");
  const std::int64_t last = ordered.rbegin()->first;

  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(last - base + 1) * kFramesPerPacket * 2);
  std::size_t frame = 0;
  for (std::int64_t seq = base; seq <= last; ++seq) {
    const auto it = ordered.find(seq);
    if (it == ordered.end()) {
      ++out.report.packets_lost;
      if (!out.report.gap_spans.empty() &&
          out.report.gap_spans.back().start_frame + out.report.gap_spans.back().length == frame) {
        out.report.gap_spans.back().length += kFramesPerPacket;
      } else {
        out.report.gap_spans.push_back({frame, kFramesPerPacket});
      }
      samples.insert(samples.end(), 2 * kFramesPerPacket, 0.0);
      frame += kFramesPerPacket;
      continue;
    }
    const AudioPacket& p = *it->second;
    const std::size_t count = seq == last ? p.valid_frames : kFramesPerPacket;
    for (std::size_t i = 0; i < 2 * count; ++i) {
      const auto raw = static_cast<std::uint16_t>(p.payload[2 * i] | (p.payload[2 * i + 1] << 8));
      samples.push_back(static_cast<std::int16_t>(raw));
    }
    frame += count;
    out.report.frames_delivered += count;
  }
  out.frames = SampleBuffer(std::move(samples), 2, sample_rate_hz);
  return out;
}

void WritePacketStream(const std::filesystem::path& path, std::span<const AudioPacket> packets) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& p : packets) {
    std::uint8_t len[4];
    PutU32(len, kPacketBytes);
    f.write(reinterpret_cast<const char*>(len), 4);
    const auto bytes = EncodePacket(p);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!f) throw IoError("failed writing " + path.string());
}

std::vector<AudioPacket> ReadPacketStream(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> data{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  std::vector<AudioPacket> out;
  std::size_t pos = 0;
  while (pos < data.size()) {
    if (data.size() - pos < 4) throw IoError("truncated packet length prefix");
    const std::uint32_t len = GetU32(data.data() + pos);
    pos += 4;
    if (data.size() - pos < len) throw IoError("truncated packet body");
    out.push_back(DecodePacket(std::span<const std::uint8_t>(data).subspan(pos, len)));
    pos += len;
  }
  return out;
}

}  // namespace oae
