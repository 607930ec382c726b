#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "oae/sample_buffer.h"

namespace oae {

// RIFF/WAVE, PCM 16-bit little-endian, mono or stereo. Samples are rounded to
// the nearest integer on encode.
std::vector<std::uint8_t> EncodeWav(const SampleBuffer& buffer);
SampleBuffer DecodeWav(std::span<const std::uint8_t> bytes);

void WriteWav(const std::filesystem::path& path, const SampleBuffer& buffer);
SampleBuffer ReadWav(const std::filesystem::path& path);

// Rounds every sample to the int16 grid, as a round trip through WAV would.
SampleBuffer Quantize(const SampleBuffer& buffer);

}  // namespace oae
