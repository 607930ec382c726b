#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "oae/sample_buffer.h"

namespace oae {

inline constexpr std::size_t kFramesPerPacket = 60;
inline constexpr std::size_t kPayloadBytes = 240;  // 60 frames x 2 channels x int16
inline constexpr std::size_t kPacketBytes = 4 + kPayloadBytes;

struct AudioPacket {
  std::uint32_t seq = 0;
  std::array<std::uint8_t, kPayloadBytes> payload{};
  // Frames carrying audio; the tail of a short final packet is zero padding.
  // Not part of the wire format.
  std::uint16_t valid_frames = kFramesPerPacket;

  friend bool operator==(const AudioPacket&, const AudioPacket&) = default;
};

// Bytes 0-3: seq (LE u32); bytes 4-243: payload.
std::vector<std::uint8_t> EncodePacket(const AudioPacket& packet);
AudioPacket DecodePacket(std::span<const std::uint8_t> bytes);

// Splits a stereo buffer into packets with consecutive (wrapping) sequence
// numbers. Samples are rounded to int16.
std::vector<AudioPacket> Packetize(const SampleBuffer& frames, std::uint32_t start_seq);

struct ChannelConfig {
  double loss_rate = 0.0;
  int reorder_window = 0;  // max positions a packet may slip back
  std::uint64_t seed = 0;
};

// Seeded loss and bounded reordering.
std::vector<AudioPacket> SimulateChannel(std::span<const AudioPacket> packets,
                                         const ChannelConfig& cfg);

struct GapSpan {
  std::size_t start_frame = 0;
  std::size_t length = 0;
  friend bool operator==(const GapSpan&, const GapSpan&) = default;
};

struct ReassemblyReport {
  std::size_t frames_delivered = 0;
  std::size_t packets_lost = 0;
  std::size_t duplicates = 0;
  std::vector<GapSpan> gap_spans;
};

struct Reassembled {
  SampleBuffer frames;  // stereo
  ReassemblyReport report;
};

// Orders packets by sequence number (tolerating one 2^32 wrap) and zero-fills
// lost packets. `first_seq`, when known, also accounts for losses at the head.
Reassembled Reassemble(std::span<const AudioPacket> packets, int sample_rate_hz = 15625,
                       std::optional<std::uint32_t> first_seq = std::nullopt);

// Framed dump: per packet a LE u32 byte count followed by the packet bytes.
void WritePacketStream(const std::filesystem::path& path, std::span<const AudioPacket> packets);
std::vector<AudioPacket> ReadPacketStream(const std::filesystem::path& path);

}  // namespace oae
