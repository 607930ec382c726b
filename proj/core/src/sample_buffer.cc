#include "oae/sample_buffer.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "oae/calibration.h"
#include "oae/errors.h"

namespace oae {

bool IsSupportedRate(int rate) { return rate == 15625 || rate == 31250; }

SampleBuffer::SampleBuffer(std::vector<double> samples, int channels, int sample_rate_hz)
    : samples_(std::move(samples)), channels_(channels), sample_rate_hz_(sample_rate_hz) {
  if (channels_ != 1 && channels_ != 2) {
    throw ConfigError("SampleBuffer: channels must be 1 or 2, got " + std::to_string(channels_));
  }
  if (sample_rate_hz_ <= 0) {
    throw ConfigError("SampleBuffer: sample rate must be positive");
  }
  if (samples_.size() % static_cast<std::size_t>(channels_) != 0) {
    throw ConfigError("SampleBuffer: interleaved length is not a multiple of channels");
  }
  for (double v : samples_) {
    if (!(v >= kMinSample && v <= kMaxSample)) {
      throw ConfigError("SampleBuffer: sample " + std::to_string(v) +
                        " outside the 16-bit range");
    }
  }
}

SampleBuffer SampleBuffer::Silence(std::size_t frames, int channels, int sample_rate_hz) {
  return SampleBuffer(std::vector<double>(frames * static_cast<std::size_t>(channels), 0.0),
                      channels, sample_rate_hz);
}

SampleBuffer SampleBuffer::Interleave(const SampleBuffer& left, const SampleBuffer& right) {
  if (left.channels() != 1 || right.channels() != 1) {
    throw ConfigError("Interleave expects two mono buffers");
  }
  if (left.sample_rate_hz() != right.sample_rate_hz() ||
      left.frame_count() != right.frame_count()) {
    throw ConfigError("Interleave: buffers differ in rate or length");
  }
  std::vector<double> out(left.frame_count() * 2);
  for (std::size_t i = 0; i < left.frame_count(); ++i) {
    out[2 * i] = left.samples_[i];
    out[2 * i + 1] = right.samples_[i];
  }
  return SampleBuffer(std::move(out), 2, left.sample_rate_hz());
}

SampleBuffer SampleBuffer::Channel(int index) const {
  if (index < 0 || index >= channels_) throw ConfigError("Channel index out of range");
  if (channels_ == 1) return *this;
  std::vector<double> out(frame_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = samples_[i * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(index)];
  }
  SampleBuffer mono;
  mono.samples_ = std::move(out);
  mono.channels_ = 1;
  mono.sample_rate_hz_ = sample_rate_hz_;
  return mono;
}

SampleBuffer SampleBuffer::Slice(std::size_t first_frame, std::size_t count) const {
  const std::size_t frames = frame_count();
  first_frame = std::min(first_frame, frames);
  count = std::min(count, frames - first_frame);
  const auto ch = static_cast<std::size_t>(channels_);
  SampleBuffer out;
  out.samples_.assign(samples_.begin() + static_cast<std::ptrdiff_t>(first_frame * ch),
                      samples_.begin() + static_cast<std::ptrdiff_t>((first_frame + count) * ch));
  out.channels_ = channels_;
  out.sample_rate_hz_ = sample_rate_hz_;
  return out;
}

void SampleBuffer::Append(const SampleBuffer& other) {
  if (other.channels_ != channels_ || other.sample_rate_hz_ != sample_rate_hz_) {
    throw ConfigError("Append: layout mismatch");
  }
  samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
}

}  // namespace oae
