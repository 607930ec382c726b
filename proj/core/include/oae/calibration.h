#pragma once

namespace oae {

inline constexpr double kFullScale = 32767.0;
inline constexpr double kMinSample = -32768.0;
inline constexpr double kMaxSample = 32767.0;

// Maps sample amplitudes to dB SPL. A full-scale sine (peak 32767) at the
// microphone or speaker corresponds to `full_scale_db_spl`. All levels in the
// project are peak-equivalent: a level names the peak of a sine with that SPL.
struct Calibration {
  double full_scale_db_spl = 94.0;

  void Validate() const;

  // Peak amplitude (sample units) of a sinusoid at `db_spl`. -inf -> 0.
  double PeakAmplitude(double db_spl) const;
  // Inverse of PeakAmplitude; amplitude <= 0 maps to -inf.
  double LevelFromPeak(double amplitude) const;
  // Per-sample RMS of broadband noise at `db_spl` (same reference as a sine).
  double NoiseRms(double db_spl) const;
};

}  // namespace oae
