#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "oae/sample_buffer.h"
#include "oae/signal.h"

namespace oae {

inline constexpr double kReflectionThresholdDb = 55.0;
inline constexpr double kDefaultReflectionDelayS = 0.012;
inline constexpr double kMaxReflectionDelayS = 0.020;
inline constexpr int kRangingChirps = 3;
inline constexpr double kRangingGapS = 0.050;

// Dechirped power against echo delay. Bin k sits at delay k * fs / n_fft * T / B.
struct DelaySpectrum {
  std::vector<double> bin_delays_s;
  // Relative to bin 0 of the loopback (rx == tx) spectrum of the same chirp.
  std::vector<double> bin_power_db;
  double resolution_s = 0.0;  // 1 / (2B)

  std::size_t size() const { return bin_delays_s.size(); }
  std::string ToCsv() const;
};

struct ReflectionEstimate {
  double t_d_s = kDefaultReflectionDelayS;
  bool used_default = true;  // every chirp fell back to the default
  std::array<double, kRangingChirps> per_chirp_estimates{};
  std::array<bool, kRangingChirps> per_chirp_default{};
};

struct DelayEstimatorConfig {
  double threshold_db = kReflectionThresholdDb;
  double default_delay_s = kDefaultReflectionDelayS;
  // Centered moving average over this many bins (linear power); 1 = raw bins.
  int smoothing_bins = 1;

  void Validate() const;
};

// Multiplies tx by rx, low-passes the product, windows it and maps the FFT
// bins up to kMaxReflectionDelayS onto delays. tx and rx must be mono, the
// same length and at cfg.sample_rate_hz.
DelaySpectrum Dechirp(const SampleBuffer& tx, const SampleBuffer& rx, const ChirpConfig& cfg);

// Per chirp: the first bin k >= 1 from which every later bin stays at least
// threshold_db under bin 0; chirps without such a bin use the default delay.
// The result is the mean over the chirps. Requires exactly three spectra.
ReflectionEstimate EstimateReflectionDelay(std::span<const DelaySpectrum> spectra,
                                           const DelayEstimatorConfig& cfg = {});
double EstimateChirpDelay(const DelaySpectrum& spectrum, const DelayEstimatorConfig& cfg,
                          bool* used_default = nullptr);

// Delay of the strongest bin at or beyond min_delay_s.
double StrongestEchoDelay(const DelaySpectrum& spectrum, double min_delay_s);

// kRangingChirps chirps, each followed by kRangingGapS of silence.
SampleBuffer GenerateRangingSequence(const ChirpConfig& cfg);
// Cuts the chirp-length segment aligned with each transmitted chirp.
std::vector<SampleBuffer> SplitRangingResponse(const SampleBuffer& rx, const ChirpConfig& cfg);
// Dechirps every segment of a ranging response and estimates t_D.
ReflectionEstimate EstimateFromRanging(const SampleBuffer& rx, const ChirpConfig& cfg,
                                       const DelayEstimatorConfig& est = {},
                                       std::vector<DelaySpectrum>* spectra = nullptr);

// Zero-phase windowed-sinc low-pass, same length as the input.
std::vector<double> ZeroPhaseLowPass(std::span<const double> input, double cutoff_hz,
                                     int sample_rate_hz, int taps = 101);

}  // namespace oae
