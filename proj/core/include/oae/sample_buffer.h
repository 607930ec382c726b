#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace oae {

// Timestamp-free PCM audio: interleaved samples held as doubles in the
// signed 16-bit range. Quantization to int16 happens only on export.
class SampleBuffer {
 public:
  SampleBuffer() = default;
  // Throws ConfigError on a bad channel count or rate, odd stereo length, or
  // any sample outside [-32768, 32767].
  SampleBuffer(std::vector<double> samples, int channels, int sample_rate_hz);

  static SampleBuffer Mono(std::vector<double> samples, int sample_rate_hz) {
    return SampleBuffer(std::move(samples), 1, sample_rate_hz);
  }
  static SampleBuffer Silence(std::size_t frames, int channels, int sample_rate_hz);
  static SampleBuffer Interleave(const SampleBuffer& left, const SampleBuffer& right);

  std::span<const double> samples() const { return samples_; }
  int channels() const { return channels_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  std::size_t frame_count() const {
    return channels_ == 0 ? 0 : samples_.size() / static_cast<std::size_t>(channels_);
  }
  double duration_s() const {
    return sample_rate_hz_ == 0 ? 0.0
                                : static_cast<double>(frame_count()) / sample_rate_hz_;
  }
  bool empty() const { return samples_.empty(); }

  // De-interleaves one channel into a mono buffer.
  SampleBuffer Channel(int index) const;
  // Frames [first, first + count) as a new buffer of the same layout.
  SampleBuffer Slice(std::size_t first_frame, std::size_t frame_count) const;
  // Appends `other`, which must share the channel count and rate.
  void Append(const SampleBuffer& other);

  std::vector<double> TakeSamples() && { return std::move(samples_); }

  friend bool operator==(const SampleBuffer&, const SampleBuffer&) = default;

 private:
  std::vector<double> samples_;
  int channels_ = 1;
  int sample_rate_hz_ = 15625;
};

// True if `rate` is one of the two rates the hardware path supports.
bool IsSupportedRate(int rate);

}  // namespace oae
