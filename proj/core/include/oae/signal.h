#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "oae/calibration.h"
#include "oae/sample_buffer.h"

namespace oae {

// Click level used for every stimulus unless configured otherwise.
inline constexpr double kDefaultStimulusPeSpl = 84.0;

// Peak sample value of a stimulus at `pe_spl` dB peSPL under `cal`.
double StimulusAmplitude(double pe_spl = kDefaultStimulusPeSpl, const Calibration& cal = {});

// Linear FMCW chirp sweeping f0 -> f1 over duration_s.
struct ChirpConfig {
  double f0_hz = 5000.0;
  double f1_hz = 15000.0;
  double duration_s = 0.2;
  double amplitude = StimulusAmplitude();
  int sample_rate_hz = 31250;

  void Validate() const;
  double bandwidth_hz() const { return f1_hz - f0_hz; }
  std::size_t sample_count() const;
};

// Wideband click and the trains built from it.
struct PulseConfig {
  double pulse_duration_s = 500e-6;
  double band_lo_hz = 0.0;
  double band_hi_hz = 5000.0;
  double gap_s = 0.020;  // pulse period t_P
  int count = 1;
  double amplitude = StimulusAmplitude();
  int sample_rate_hz = 15625;

  void Validate() const;
  std::size_t pulse_samples() const;
  // Sample index of pulse k: round(k * gap_s * fs). Periods alternate between
  // floor and ceil when gap_s * fs is fractional, keeping the mean exact.
  std::size_t OnsetOf(int k) const;
  std::vector<std::size_t> Onsets() const;
};

struct ProbeChirpConfig {
  double f0_hz = 100.0;
  double f1_hz = 5500.0;
  double chirp_duration_s = 0.020;
  double amplitude = StimulusAmplitude();
  int sample_rate_hz = 15625;
};

inline constexpr std::array<double, 4> kTeoaePattern = {1.0, 1.0, 1.0, -3.0};

// phi(t) = 2*pi*(f0*t + B*t^2/(2T)).
double FmcwPhase(const ChirpConfig& cfg, double t);

SampleBuffer GenerateFmcwChirp(const ChirpConfig& cfg);

// Zeroes every DFT bin outside [lo_hz, hi_hz] of `input` zero-padded to
// `n_fft` points and returns the full n_fft-point result.
std::vector<double> BrickWallFilter(std::span<const double> input, double lo_hz, double hi_hz,
                                    int sample_rate_hz, std::size_t n_fft);

// The raw band-limited pulse before the Hamming window, scaled to unit peak.
std::vector<double> UnwindowedPulseShape(const PulseConfig& cfg);

// One band-limited, Hamming-windowed click of round(duration * fs) samples
// with peak |value| == amplitude.
SampleBuffer GenerateStimulusPulse(const PulseConfig& cfg);

// `count` clicks, each at the head of a gap_s period; total length
// round(count * gap_s * fs) samples.
SampleBuffer GeneratePulseTrain(const PulseConfig& cfg);

// Conventional {1,1,1,-3} click train. count must be a multiple of 4 and the
// -3x pulse must stay inside the 16-bit range.
SampleBuffer GenerateTeoaeTrain(const PulseConfig& cfg);

// Sum of two tones with levels in dB SPL (peak-equivalent); -inf drops a tone.
SampleBuffer GenerateDualTone(double f1_hz, double f2_hz, double level1_db_spl,
                              double level2_db_spl, double duration_s, int sample_rate_hz,
                              const Calibration& cal = {});

// `count` back-to-back linear chirps, each restarting at f0.
SampleBuffer GenerateProbeChirpSequence(int count, const ProbeChirpConfig& cfg = {});

// Sample index where probe chirp k starts.
std::size_t ProbeChirpStart(int k, const ProbeChirpConfig& cfg = {});

}  // namespace oae
