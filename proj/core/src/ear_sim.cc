#include "oae/ear_sim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "oae/errors.h"
#include "oae/signal.h"

namespace oae {
namespace {

constexpr double kSilence = 1e-9;
constexpr double kLeakCornerHz = 300.0;

void AddBurst(std::vector<double>& out, std::size_t start, double amplitude, double freq_hz,
              std::size_t length, int fs) {
  if (length < 2) return;
  for (std::size_t n = 0; n < length && start + n < out.size(); ++n) {
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
    out[start + n] += amplitude * window * std::cos(2.0 * std::numbers::pi * freq_hz * n / fs);
  }
}

}  // namespace

std::vector<StimulusEvent> DetectStimulusEvents(const std::vector<double>& driven,
                                                int sample_rate_hz, double min_gap_s) {
  const auto min_gap = static_cast<std::size_t>(std::max<long long>(1, std::llround(min_gap_s * sample_rate_hz)));
  std::vector<StimulusEvent> events;
  std::size_t quiet_run = min_gap;
  for (std::size_t i = 0; i < driven.size(); ++i) {
    const double v = driven[i];
    if (std::abs(v) < kSilence) {
      ++quiet_run;
      continue;
    }
    if (quiet_run >= min_gap) events.push_back({i, v});
    quiet_run = 0;
    if (std::abs(v) > std::abs(events.back().peak)) events.back().peak = v;
  }
  return events;
}

std::vector<double> ButterworthLowPass(const std::vector<double>& input, double cutoff_hz,
                                       int sample_rate_hz) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / sample_rate_hz;
  const double alpha = std::sin(w0) / std::numbers::sqrt2;  // Q = 1/sqrt(2)
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 - cw) / 2.0 / a0;
  const double b1 = (1.0 - cw) / a0;
  const double b2 = b0;
  const double a1 = -2.0 * cw / a0;
  const double a2 = (1.0 - alpha) / a0;
  std::vector<double> out(input.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double x0 = input[i];
    const double y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    out[i] = y0;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
  }
  return out;
}

SampleBuffer SimulateEar(const EarModel& model, const SpeakerModel& speaker,
                         const SampleBuffer& stimulus, std::uint64_t seed,
                         const Calibration& cal) {
  model.Validate();
  cal.Validate();
  const int fs = stimulus.sample_rate_hz();
  if (!IsSupportedRate(fs)) throw ConfigError("simulator supports 15625 or 31250 Hz only");
  if (stimulus.channels() != 1) throw ConfigError("simulator expects a mono stimulus");

  const auto x = stimulus.samples();
  std::vector<double> driven(x.size());
  std::transform(x.begin(), x.end(), driven.begin(), [&](double v) { return speaker.Apply(v); });

  std::vector<double> out(x.size(), 0.0);
  for (const auto& tap : model.reflection_taps) {
    const auto shift = static_cast<std::size_t>(std::llround(tap.delay_s * fs));
    for (std::size_t i = shift; i < out.size(); ++i) out[i] += tap.gain * driven[i - shift];
  }

  if (model.low_freq_leak_db > 0.0) {
    const double loss = 1.0 - std::pow(10.0, -model.low_freq_leak_db / 20.0);
    const auto low = ButterworthLowPass(out, kLeakCornerHz, fs);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= loss * low[i];
  }

  if (model.HasEmission()) {
    const double reference = StimulusAmplitude(kDefaultStimulusPeSpl, cal);
    const auto burst_len = static_cast<std::size_t>(std::llround(model.oae_burst_s * fs));
    for (const auto& ev : DetectStimulusEvents(driven, fs)) {
      const double drive = std::pow(std::abs(ev.peak) / reference, model.oae_compression_exponent);
      const double sign = ev.peak < 0 ? -1.0 : 1.0;
      for (const auto& band : model.oae_bands) {
        if (!std::isfinite(band.level_db_spl)) continue;
        const double amplitude = cal.PeakAmplitude(band.level_db_spl) * sign * drive;
        const auto start = ev.onset + static_cast<std::size_t>(std::llround(band.latency_s * fs));
        AddBurst(out, start, amplitude, band.center_hz, burst_len, fs);
      }
    }
  }

  if (std::isfinite(model.noise_level_db_spl)) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, cal.NoiseRms(model.noise_level_db_spl));
    for (double& v : out) v += noise(rng);
  }

  for (double& v : out) v = std::clamp(v, kMinSample, kMaxSample);
  return SampleBuffer::Mono(std::move(out), fs);
}

SampleBuffer SimulateClosedTube(double volume_cc, const SampleBuffer& stimulus) {
  const EarModel tube = ClosedTubeModel(volume_cc, -std::numeric_limits<double>::infinity());
  return SimulateEar(tube, SpeakerModel::Identity(), stimulus, 0);
}

}  // namespace oae
