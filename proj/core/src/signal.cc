#include "oae/signal.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "oae/errors.h"
#include "oae/fft.h"

namespace oae {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void CheckAmplitude(double amplitude, const char* what) {
  if (!(amplitude >= 0.0) || amplitude > kMaxSample) {
    throw ConfigError(std::string(what) + ": amplitude must lie in [0, 32767]");
  }
}

std::vector<double> Hamming(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

}  // namespace

double StimulusAmplitude(double pe_spl, const Calibration& cal) {
  return cal.PeakAmplitude(pe_spl);
}

void ChirpConfig::Validate() const {
  if (!(f0_hz > 0.0) || !(f1_hz > f0_hz)) {
    throw ConfigError("chirp requires 0 < f0 < f1");
  }
  if (sample_rate_hz <= 0 || f1_hz > sample_rate_hz / 2.0) {
    throw ConfigError("chirp f1 exceeds Nyquist");
  }
  if (!(duration_s > 0.0)) throw ConfigError("chirp duration must be positive");
  CheckAmplitude(amplitude, "chirp");
}

std::size_t ChirpConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

void PulseConfig::Validate() const {
  if (sample_rate_hz <= 0) throw ConfigError("pulse sample rate must be positive");
  if (!(pulse_duration_s > 0.0) || pulse_samples() < 2) {
    throw ConfigError("pulse must span at least 2 samples");
  }
  if (!(gap_s > pulse_duration_s)) throw ConfigError("pulse gap must exceed the pulse duration");
  if (band_lo_hz < 0.0 || !(band_hi_hz > band_lo_hz)) {
    throw ConfigError("pulse band must satisfy 0 <= lo < hi");
  }
  if (band_hi_hz > sample_rate_hz / 2.0) throw ConfigError("pulse band exceeds Nyquist");
  if (count < 0) throw ConfigError("pulse count must be non-negative");
  CheckAmplitude(amplitude, "pulse");
}

std::size_t PulseConfig::pulse_samples() const {
  const double n = pulse_duration_s * sample_rate_hz;
  return n > 0 ? static_cast<std::size_t>(std::llround(n)) : 0;
}

std::size_t PulseConfig::OnsetOf(int k) const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(k) * gap_s * sample_rate_hz));
}

std::vector<std::size_t> PulseConfig::Onsets() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = OnsetOf(k);
  return out;
}

double FmcwPhase(const ChirpConfig& cfg, double t) {
  return kTwoPi * (cfg.f0_hz * t + cfg.bandwidth_hz() * t * t / (2.0 * cfg.duration_s));
}

SampleBuffer GenerateFmcwChirp(const ChirpConfig& cfg) {
  cfg.Validate();
  const std::size_t n = cfg.sample_count();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.sample_rate_hz;
    out[i] = cfg.amplitude * std::cos(FmcwPhase(cfg, t));
  }
  return SampleBuffer::Mono(std::move(out), cfg.sample_rate_hz);
}

std::vector<double> BrickWallFilter(std::span<const double> input, double lo_hz, double hi_hz,
                                    int sample_rate_hz, std::size_t n_fft) {
  auto spectrum = RealDft(input, n_fft);
  const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(n_fft);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f < lo_hz || f > hi_hz) spectrum[k] = 0.0;
  }
  return InverseRealDft(spectrum, n_fft);
}

std::vector<double> UnwindowedPulseShape(const PulseConfig& cfg) {
  cfg.Validate();
  const std::size_t n = cfg.pulse_samples();
  const std::vector<double> rect(n, 1.0);
  const std::size_t n_fft = NextPowerOfTwo(std::max<std::size_t>(1024, 16 * n));
  auto filtered = BrickWallFilter(rect, cfg.band_lo_hz, cfg.band_hi_hz, cfg.sample_rate_hz, n_fft);
  filtered.resize(n);
  const double peak = std::abs(*std::max_element(
      filtered.begin(), filtered.end(),
      [](double a, double b) { return std::abs(a) < std::abs(b); }));
  if (peak <= 0.0) throw ConfigError("pulse band removes all energy");
  for (double& v : filtered) v /= peak;
  return filtered;
}

SampleBuffer GenerateStimulusPulse(const PulseConfig& cfg) {
  auto shape = UnwindowedPulseShape(cfg);
  const auto window = Hamming(shape.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    shape[i] *= window[i];
    peak = std::max(peak, std::abs(shape[i]));
  }
  for (double& v : shape) v = v / peak * cfg.amplitude;
  return SampleBuffer::Mono(std::move(shape), cfg.sample_rate_hz);
}

namespace {

SampleBuffer BuildTrain(const PulseConfig& cfg, std::span<const double> pattern) {
  const SampleBuffer pulse = GenerateStimulusPulse(cfg);
  const auto total =
      static_cast<std::size_t>(std::llround(static_cast<double>(cfg.count) * cfg.gap_s *
                                            cfg.sample_rate_hz));
  std::vector<double> out(total, 0.0);
  const auto p = pulse.samples();
  for (int k = 0; k < cfg.count; ++k) {
    const double gain = pattern[static_cast<std::size_t>(k) % pattern.size()];
    const std::size_t at = cfg.OnsetOf(k);
    for (std::size_t i = 0; i < p.size() && at + i < total; ++i) out[at + i] = gain * p[i];
  }
  return SampleBuffer::Mono(std::move(out), cfg.sample_rate_hz);
}

}  // namespace

SampleBuffer GeneratePulseTrain(const PulseConfig& cfg) {
  const double unit[] = {1.0};
  return BuildTrain(cfg, unit);
}

SampleBuffer GenerateTeoaeTrain(const PulseConfig& cfg) {
  if (cfg.count % 4 != 0) throw ConfigError("TEOAE train count must be a multiple of 4");
  if (3.0 * cfg.amplitude > kMaxSample) {
    throw ConfigError("TEOAE -3x pulse would clip the 16-bit range");
  }
  return BuildTrain(cfg, kTeoaePattern);
}

SampleBuffer GenerateDualTone(double f1_hz, double f2_hz, double level1_db_spl,
                              double level2_db_spl, double duration_s, int sample_rate_hz,
                              const Calibration& cal) {
  if (sample_rate_hz <= 0 || !(duration_s >= 0.0)) throw ConfigError("dual tone: bad rate or duration");
  if (f1_hz <= 0 || f2_hz <= 0 || f1_hz >= sample_rate_hz / 2.0 || f2_hz >= sample_rate_hz / 2.0) {
    throw ConfigError("dual tone: frequencies must lie in (0, fs/2)");
  }
  const double a1 = cal.PeakAmplitude(level1_db_spl);
  const double a2 = cal.PeakAmplitude(level2_db_spl);
  if (a1 + a2 > kMaxSample) throw ConfigError("dual tone levels exceed the 16-bit range");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    out[i] = a1 * std::cos(kTwoPi * f1_hz * t) + a2 * std::cos(kTwoPi * f2_hz * t);
  }
  return SampleBuffer::Mono(std::move(out), sample_rate_hz);
}

std::size_t ProbeChirpStart(int k, const ProbeChirpConfig& cfg) {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(k) * cfg.chirp_duration_s * cfg.sample_rate_hz));
}

SampleBuffer GenerateProbeChirpSequence(int count, const ProbeChirpConfig& cfg) {
  if (count < 0) throw ConfigError("probe chirp count must be non-negative");
  ChirpConfig chirp{cfg.f0_hz, cfg.f1_hz, cfg.chirp_duration_s, cfg.amplitude, cfg.sample_rate_hz};
  chirp.Validate();
  const std::size_t total = ProbeChirpStart(count, cfg);
  std::vector<double> out(total);
  for (int k = 0; k < count; ++k) {
    const std::size_t begin = ProbeChirpStart(k, cfg);
    const std::size_t end = ProbeChirpStart(k + 1, cfg);
    for (std::size_t i = begin; i < end; ++i) {
      const double t = static_cast<double>(i - begin) / cfg.sample_rate_hz;
      out[i] = cfg.amplitude * std::cos(FmcwPhase(chirp, t));
    }
  }
  return SampleBuffer::Mono(std::move(out), cfg.sample_rate_hz);
}

}  // namespace oae
