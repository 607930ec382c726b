#include "oae/fmcw.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "oae/errors.h"
#include "oae/fft.h"
#include "oae/kv_config.h"

namespace oae {
namespace {

std::vector<double> BlackmanHarris(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  constexpr double a0 = 0.35875, a1 = 0.48829, a2 = 0.14128, a3 = 0.01168;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * std::numbers::pi * i / (n - 1);
    w[i] = a0 - a1 * std::cos(x) + a2 * std::cos(2 * x) - a3 * std::cos(3 * x);
  }
  return w;
}

// Beat frequencies of interest stay below B * max_delay / T; keep a 2x margin.
double BeatCutoffHz(const ChirpConfig& cfg) {
  return 2.0 * cfg.bandwidth_hz() * kMaxReflectionDelayS / cfg.duration_s;
}

std::vector<double> RawDelayPower(std::span<const double> tx, std::span<const double> rx,
                                  const ChirpConfig& cfg, std::size_t n_fft, std::size_t bins) {
  std::vector<double> mixed(tx.size());
  for (std::size_t i = 0; i < tx.size(); ++i) mixed[i] = tx[i] * rx[i];
  auto beat = ZeroPhaseLowPass(mixed, BeatCutoffHz(cfg), cfg.sample_rate_hz);
  const auto window = BlackmanHarris(beat.size());
  for (std::size_t i = 0; i < beat.size(); ++i) beat[i] *= window[i];
  const auto spectrum = RealDft(beat, n_fft);
  std::vector<double> power(bins);
  for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spectrum[k]);
  return power;
}

}  // namespace

std::vector<double> ZeroPhaseLowPass(std::span<const double> input, double cutoff_hz,
                                     int sample_rate_hz, int taps) {
  if (taps < 1 || taps % 2 == 0) throw ConfigError("low-pass tap count must be odd");
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0)) {
    throw ConfigError("low-pass cutoff must lie in (0, fs/2)");
  }
  const int half = taps / 2;
  const double fc = cutoff_hz / sample_rate_hz;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    const int m = i - half;
    const double sinc = m == 0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double x = 2.0 * std::numbers::pi * i / (taps - 1);
    const double blackman = taps == 1 ? 1.0 : 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2 * x);
    h[i] = sinc * blackman;
    sum += h[i];
  }
  for (double& v : h) v /= sum;

  const auto n = static_cast<std::ptrdiff_t>(input.size());
  std::vector<double> out(input.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-half, -i);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(half, n - 1 - i);
    for (std::ptrdiff_t m = lo; m <= hi; ++m) acc += h[m + half] * input[i + m];
    out[i] = acc;
  }
  return out;
}

std::string DelaySpectrum::ToCsv() const {
  std::ostringstream os;
  os << "delay_s,power_db\n";
  for (std::size_t k = 0; k < size(); ++k) {
    os << FormatDouble(bin_delays_s[k]) << ',' << FormatDouble(bin_power_db[k]) << '\n';
  }
  return os.str();
}

void DelayEstimatorConfig::Validate() const {
  if (!(threshold_db > 0.0) || !std::isfinite(threshold_db)) {
    throw ConfigError("reflection threshold must be a positive dB value");
  }
  if (!(default_delay_s >= 0.0 && default_delay_s <= kMaxReflectionDelayS)) {
    throw ConfigError("default reflection delay must lie in [0, 20 ms]");
  }
  if (smoothing_bins < 1) throw ConfigError("smoothing_bins must be >= 1");
}

DelaySpectrum Dechirp(const SampleBuffer& tx, const SampleBuffer& rx, const ChirpConfig& cfg) {
  cfg.Validate();
  if (tx.channels() != 1 || rx.channels() != 1) throw ConfigError("dechirp expects mono buffers");
  if (tx.sample_rate_hz() != cfg.sample_rate_hz || rx.sample_rate_hz() != cfg.sample_rate_hz) {
    throw ConfigError("dechirp buffers must match the chirp sample rate");
  }
  if (tx.frame_count() != rx.frame_count()) throw ConfigError("dechirp tx/rx length mismatch");
  if (tx.empty()) throw ConfigError("dechirp needs a non-empty chirp");

  const std::size_t n_fft = NextPowerOfTwo(tx.frame_count());
  const double delay_per_bin =
      static_cast<double>(cfg.sample_rate_hz) / n_fft * cfg.duration_s / cfg.bandwidth_hz();
  const std::size_t bins = std::min<std::size_t>(
      n_fft / 2 + 1, static_cast<std::size_t>(std::floor(kMaxReflectionDelayS / delay_per_bin + 1e-9)) + 1);

  const auto reference = RawDelayPower(tx.samples(), tx.samples(), cfg, n_fft, 1)[0];
  if (!(reference > 0.0)) throw ConfigError("dechirp reference chirp is silent");
  const auto power = RawDelayPower(tx.samples(), rx.samples(), cfg, n_fft, bins);

  DelaySpectrum out;
  out.resolution_s = 1.0 / (2.0 * cfg.bandwidth_hz());
  out.bin_delays_s.resize(bins);
  out.bin_power_db.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.bin_delays_s[k] = k * delay_per_bin;
    out.bin_power_db[k] = 10.0 * std::log10(std::max(power[k], 1e-300) / reference);
  }
  return out;
}

double EstimateChirpDelay(const DelaySpectrum& spectrum, const DelayEstimatorConfig& cfg,
                          bool* used_default) {
  cfg.Validate();
  const std::size_t n = spectrum.size();
  std::vector<double> level = spectrum.bin_power_db;
  if (cfg.smoothing_bins > 1) {
    const int half = cfg.smoothing_bins / 2;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = k >= static_cast<std::size_t>(half) ? k - half : 0;
      const std::size_t hi = std::min(n - 1, k + half);
      double acc = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) acc += std::pow(10.0, spectrum.bin_power_db[j] / 10.0);
      level[k] = 10.0 * std::log10(acc / (hi - lo + 1));
    }
  }
  std::size_t first_quiet = 0;
  if (n >= 2) {
    first_quiet = n;
    for (std::size_t k = n; k-- > 1;) {
      if (level[k] - level[0] > -cfg.threshold_db) break;
      first_quiet = k;
    }
  }
  const bool fallback = first_quiet == 0 || first_quiet >= n;
  if (used_default) *used_default = fallback;
  return fallback ? cfg.default_delay_s : spectrum.bin_delays_s[first_quiet];
}

ReflectionEstimate EstimateReflectionDelay(std::span<const DelaySpectrum> spectra,
                                           const DelayEstimatorConfig& cfg) {
  if (spectra.size() != kRangingChirps) {
    throw ConfigError("reflection estimate needs exactly three chirp spectra");
  }
  ReflectionEstimate est;
  double sum = 0.0;
  bool all_default = true;
  for (int i = 0; i < kRangingChirps; ++i) {
    bool fallback = false;
    est.per_chirp_estimates[i] = EstimateChirpDelay(spectra[i], cfg, &fallback);
    est.per_chirp_default[i] = fallback;
    all_default = all_default && fallback;
    sum += est.per_chirp_estimates[i];
  }
  est.used_default = all_default;
  est.t_d_s = all_default ? cfg.default_delay_s : sum / kRangingChirps;
  return est;
}

double StrongestEchoDelay(const DelaySpectrum& spectrum, double min_delay_s) {
  double best_delay = 0.0;
  double best_power = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    if (spectrum.bin_delays_s[k] < min_delay_s) continue;
    if (spectrum.bin_power_db[k] > best_power) {
      best_power = spectrum.bin_power_db[k];
      best_delay = spectrum.bin_delays_s[k];
    }
  }
  return best_delay;
}

SampleBuffer GenerateRangingSequence(const ChirpConfig& cfg) {
  const SampleBuffer chirp = GenerateFmcwChirp(cfg);
  const auto gap = static_cast<std::size_t>(std::llround(kRangingGapS * cfg.sample_rate_hz));
  SampleBuffer out = SampleBuffer::Silence(0, 1, cfg.sample_rate_hz);
  for (int i = 0; i < kRangingChirps; ++i) {
    out.Append(chirp);
    out.Append(SampleBuffer::Silence(gap, 1, cfg.sample_rate_hz));
  }
  return out;
}

std::vector<SampleBuffer> SplitRangingResponse(const SampleBuffer& rx, const ChirpConfig& cfg) {
  const std::size_t len = cfg.sample_count();
  const auto gap = static_cast<std::size_t>(std::llround(kRangingGapS * cfg.sample_rate_hz));
  if (rx.channels() != 1 || rx.sample_rate_hz() != cfg.sample_rate_hz) {
    throw ConfigError("ranging response must be mono at the chirp rate");
  }
  if (rx.frame_count() < kRangingChirps * (len + gap) - gap) {
    throw InsufficientDataError("ranging response shorter than three chirps");
  }
  std::vector<SampleBuffer> out;
  for (int i = 0; i < kRangingChirps; ++i) out.push_back(rx.Slice(i * (len + gap), len));
  return out;
}

ReflectionEstimate EstimateFromRanging(const SampleBuffer& rx, const ChirpConfig& cfg,
                                       const DelayEstimatorConfig& est,
                                       std::vector<DelaySpectrum>* spectra) {
  const SampleBuffer tx = GenerateFmcwChirp(cfg);
  std::vector<DelaySpectrum> local;
  for (const auto& segment : SplitRangingResponse(rx, cfg)) local.push_back(Dechirp(tx, segment, cfg));
  auto result = EstimateReflectionDelay(local, est);
  if (spectra) *spectra = std::move(local);
  return result;
}

}  // namespace oae
