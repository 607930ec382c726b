#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <limits>
#include <random>

#include "oae/ear_sim.h"
#include "oae/errors.h"
#include "oae/extract.h"
#include "oae/signal.h"
#include "oae/stream.h"

namespace oae {
namespace {

SampleBuffer Ramp(std::size_t frames) {
  std::vector<double> s(2 * frames);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(static_cast<int>(i * 37 % 65536) - 32768);
  return SampleBuffer(std::move(s), 2, 15625);
}

TEST(PacketizeTest, OneCaptureIsSixPackets) {
  const auto packets = Packetize(Ramp(312), 0);
  ASSERT_EQ(packets.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(packets[i].seq, i);
  EXPECT_EQ(packets.back().valid_frames, 12);
  for (std::size_t b = 12 * 4; b < kPayloadBytes; ++b) EXPECT_EQ(packets.back().payload[b], 0);
  EXPECT_TRUE(Packetize(SampleBuffer::Silence(0, 2, 15625), 0).empty());
  EXPECT_THROW(Packetize(SampleBuffer::Silence(10, 1, 15625), 0), ConfigError);
}

TEST(PacketizeTest, ByteLayoutIsLittleEndian) {
  const auto frames = SampleBuffer({1.0, -2.0, 258.0, -32768.0}, 2, 15625);
  const auto packets = Packetize(frames, 0x01020304u);
  const auto bytes = EncodePacket(packets[0]);
  ASSERT_EQ(bytes.size(), kPacketBytes);
  EXPECT_EQ(bytes[0], 0x04);
  EXPECT_EQ(bytes[1], 0x03);
  EXPECT_EQ(bytes[2], 0x02);
  EXPECT_EQ(bytes[3], 0x01);
  const std::vector<std::uint8_t> samples = {0x01, 0x00, 0xFE, 0xFF, 0x02, 0x01, 0x00, 0x80};
  for (std::size_t i = 0; i < samples.size(); ++i) EXPECT_EQ(bytes[4 + i], samples[i]) << i;
  const auto back = DecodePacket(bytes);
  EXPECT_EQ(back.seq, 0x01020304u);
  EXPECT_EQ(back.payload, packets[0].payload);
  EXPECT_THROW(DecodePacket(std::span(bytes).first(100)), IoError);
  EXPECT_DOUBLE_EQ(15625.0 * 2 * 2, 62500.0);
  EXPECT_NEAR(15625.0 / kFramesPerPacket, 260.4, 0.05);
}

TEST(ReassembleTest, LosslessRoundTripIsBitExact) {
  for (std::size_t frames : {1u, 59u, 60u, 61u, 312u, 15625u}) {
    const auto in = Ramp(frames);
    const auto out = Reassemble(Packetize(in, 77));
    EXPECT_EQ(out.frames, in) << frames;
    EXPECT_EQ(out.report.packets_lost, 0u);
    EXPECT_EQ(out.report.frames_delivered, frames);
  }
}

TEST(ReassembleTest, SimulatorAudioRoundTrip) {
  PulseConfig pc;
  pc.count = 50;
  const auto stim = GeneratePulseTrain(pc);
  auto mic = SimulateEar(Preset("normal_adult"), {}, stim, 1);
  std::vector<double> q(mic.samples().begin(), mic.samples().end());
  for (double& v : q) v = std::round(v);
  const auto stereo = SampleBuffer::Interleave(SampleBuffer::Mono(q, 15625), stim.Slice(0, q.size()));
  std::vector<double> sq(stereo.samples().begin(), stereo.samples().end());
  for (double& v : sq) v = std::round(v);
  const SampleBuffer quantized(sq, 2, 15625);
  EXPECT_EQ(Reassemble(Packetize(quantized, 0)).frames, quantized);
}

TEST(ChannelTest, IdentityAllLostAndDeterministic) {
  const auto packets = Packetize(Ramp(6000), 0);
  const auto same = SimulateChannel(packets, {});
  EXPECT_EQ(same, packets);
  EXPECT_TRUE(SimulateChannel(packets, {.loss_rate = 1.0}).empty());
  const ChannelConfig lossy{.loss_rate = 0.01, .reorder_window = 3, .seed = 5};
  EXPECT_EQ(SimulateChannel(packets, lossy), SimulateChannel(packets, lossy));
  const auto other = SimulateChannel(packets, {.loss_rate = 0.01, .reorder_window = 3, .seed = 6});
  EXPECT_NE(SimulateChannel(packets, lossy), other);
  EXPECT_THROW(SimulateChannel(packets, {.loss_rate = 1.5}), ConfigError);
}

TEST(ChannelTest, ReorderingStaysBoundedAndRecoverable) {
  const auto packets = Packetize(Ramp(60 * 500), 0);
  const auto shuffled = SimulateChannel(packets, {.reorder_window = 4, .seed = 2});
  ASSERT_EQ(shuffled.size(), packets.size());
  bool moved = false;
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    moved = moved || shuffled[i].seq != i;
    EXPECT_LE(std::abs(static_cast<long>(shuffled[i].seq) - static_cast<long>(i)), 4);
  }
  EXPECT_TRUE(moved);
  EXPECT_EQ(Reassemble(shuffled).frames, Ramp(60 * 500));
}

TEST(ReassembleTest, DroppedPacketBecomesGap) {
  auto packets = Packetize(Ramp(600), 0);
  packets.erase(packets.begin() + 5);
  const auto out = Reassemble(packets);
  EXPECT_EQ(out.report.packets_lost, 1u);
  ASSERT_EQ(out.report.gap_spans.size(), 1u);
  EXPECT_EQ(out.report.gap_spans[0], (GapSpan{300, 60}));
  EXPECT_EQ(out.frames.frame_count(), 600u);
  for (std::size_t i = 600; i < 720; ++i) EXPECT_EQ(out.frames.samples()[i], 0.0);
  // delivered + 60 * lost covers every sequence number seen.
  EXPECT_EQ(out.report.frames_delivered + 60 * out.report.packets_lost, 60u * 9 + 60);
}

TEST(ReassembleTest, AdjacentLossesMerge) {
  auto packets = Packetize(Ramp(600), 0);
  packets.erase(packets.begin() + 3, packets.begin() + 6);
  const auto out = Reassemble(packets);
  ASSERT_EQ(out.report.gap_spans.size(), 1u);
  EXPECT_EQ(out.report.gap_spans[0], (GapSpan{180, 180}));
  auto head = Packetize(Ramp(600), 10);
  head.erase(head.begin());
  const auto known = Reassemble(head, 15625, 10u);
  EXPECT_EQ(known.report.gap_spans[0], (GapSpan{0, 60}));
}

TEST(ReassembleTest, SequenceWrap) {
  const auto in = Ramp(60 * 10);
  auto packets = Packetize(in, 0xFFFFFFFBu);
  EXPECT_EQ(packets[5].seq, 0u);
  std::reverse(packets.begin(), packets.end());
  EXPECT_EQ(Reassemble(packets).frames, in);
  packets.erase(packets.begin() + 4);  // seq 0
  const auto out = Reassemble(packets);
  EXPECT_EQ(out.report.gap_spans[0], (GapSpan{300, 60}));
}

TEST(ReassembleTest, DuplicatesCounted) {
  auto packets = Packetize(Ramp(300), 0);
  packets.push_back(packets[2]);
  const auto out = Reassemble(packets);
  EXPECT_EQ(out.report.duplicates, 1u);
  EXPECT_EQ(out.frames, Ramp(300));
}

TEST(PacketStreamTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "oaescreen_stream_test.bin";
  const auto packets = Packetize(Ramp(240), 3);
  WritePacketStream(path, packets);
  EXPECT_EQ(std::filesystem::file_size(path), packets.size() * (4 + kPacketBytes));
  EXPECT_EQ(ReadPacketStream(path), packets);
  std::filesystem::resize_file(path, 100);
  EXPECT_THROW(ReadPacketStream(path), IoError);
  std::filesystem::remove(path);
  EXPECT_THROW(ReadPacketStream(path), IoError);
}

// Noiseless ear: the halves are identical, so any zero-filled click that
// slipped into the averages would show up as noise.
TEST(StreamEndToEndTest, LostPacketsStayOutOfTheAverages) {
  PulseConfig pc;
  pc.count = 3300;
  const auto stim = GeneratePulseTrain(pc);
  auto ear = Preset("normal_adult");
  ear.noise_level_db_spl = -std::numeric_limits<double>::infinity();
  const auto mic = SimulateEar(ear, {}, stim, 31);
  const auto packets = Packetize(SampleBuffer::Interleave(mic, stim), 0);
  const auto lossy = SimulateChannel(packets, {.loss_rate = 0.01, .seed = 8});
  EXPECT_GT(packets.size() - lossy.size(), 20u);

  ExtractConfig cfg;
  cfg.reflection_delay_s = 0.0055;
  const auto pulse = GenerateStimulusPulse({});
  auto run = [&](std::span<const AudioPacket> ps, bool mark_gaps) {
    const auto rx = Reassemble(ps, 15625, 0u);
    OaeExtractor ex(cfg, std::vector<double>(pulse.samples().begin(), pulse.samples().end()));
    if (mark_gaps) {
      for (const auto& gap : rx.report.gap_spans) ex.ExcludeRange(gap.start_frame, gap.length);
    }
    ex.Push(rx.frames.Channel(0).samples());
    ex.Finish();
    return ex.Report();
  };
  const auto clean = run(packets, true);
  const auto hit = run(lossy, true);
  const auto unmarked = run(lossy, false);
  EXPECT_LT(hit.pulses_used, clean.pulses_used);
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    EXPECT_EQ(clean.bands[b].snr_db, 60.0);
    EXPECT_LT(std::abs(hit.bands[b].snr_db - clean.bands[b].snr_db), 1.0) << kBands[b].key;
    EXPECT_NEAR(hit.bands[b].signal_db_spl, clean.bands[b].signal_db_spl, 0.01);
  }
  // Without the gap map the zeros leak into one half.
  double worst = 60.0;
  for (const auto& b : unmarked.bands) worst = std::min(worst, b.snr_db);
  EXPECT_LT(worst, 59.0);
}

}  // namespace
}  // namespace oae
