#include "oae/screening.h"

#include <cmath>
#include <numbers>

#include "oae/errors.h"

namespace oae {

std::string_view ToString(Outcome outcome) {
  switch (outcome) {
    case Outcome::kPass: return "pass";
    case Outcome::kRefer: return "refer";
    case Outcome::kNoisy: return "noisy";
  }
  return "refer";
}

void Thresholds::Validate() const {
  if (min_bands < 1 || min_bands > static_cast<int>(kBands.size())) {
    throw ConfigError("min_bands must lie in [1, 5]");
  }
  if (std::isnan(snr_db) || std::isnan(floor_db_spl) || std::isnan(noise_flag_db_spl)) {
    throw ConfigError("decision thresholds must not be NaN");
  }
}

bool BandPasses(const BandResult& band, const Thresholds& thresholds) {
  return band.snr_db >= thresholds.snr_db && band.signal_db_spl > thresholds.floor_db_spl;
}

ScreeningVerdict Decide(const BandSnrReport& report, const Thresholds& thresholds) {
  thresholds.Validate();
  for (const auto& band : report.bands) {
    if (std::isnan(band.snr_db) || std::isnan(band.signal_db_spl) || std::isnan(band.noise_db_spl)) {
      throw ConfigError("band report is incomplete");
    }
  }
  ScreeningVerdict verdict;
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    if (BandPasses(report.bands[b], thresholds)) verdict.bands_passed.emplace_back(kBands[b].key);
  }
  const bool noisy = report.MeanNoiseDbSpl() > thresholds.noise_flag_db_spl;
  if (noisy) {
    verdict.outcome = Outcome::kNoisy;
  } else if (static_cast<int>(verdict.bands_passed.size()) >= thresholds.min_bands) {
    verdict.outcome = Outcome::kPass;
  } else {
    verdict.outcome = Outcome::kRefer;
  }
  verdict.report = report;
  verdict.batches_used = report.batches_used;
  verdict.batches_discarded = report.batches_discarded;
  return verdict;
}

double GoertzelAmplitude(std::span<const double> samples, double freq_hz, int sample_rate_hz) {
  if (samples.empty()) return 0.0;
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const double coeff = 2.0 * std::cos(w);
  double s1 = 0.0, s2 = 0.0;
  for (double x : samples) {
    const double s0 = x + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
  return 2.0 * std::sqrt(std::max(power, 0.0)) / samples.size();
}

void ProbeFitConfig::Validate() const {
  if (required_chirps < 1) throw ConfigError("fit check needs at least one chirp");
  if (!(timeout_s > 0.0)) throw ConfigError("fit check timeout must be > 0");
  if (std::isnan(threshold_db_spl)) throw ConfigError("fit threshold must not be NaN");
  calibration.Validate();
}

ProbeFitDetector::ProbeFitDetector(ProbeFitConfig cfg) : cfg_(std::move(cfg)) { cfg_.Validate(); }

bool ProbeFitDetector::Push(std::span<const double> mic) {
  pending_.insert(pending_.end(), mic.begin(), mic.end());
  const std::size_t available = pending_start_ + pending_.size();
  while (!in_ear()) {
    const std::size_t begin = ProbeChirpStart(next_chirp_, cfg_.chirp);
    const std::size_t end = ProbeChirpStart(next_chirp_ + 1, cfg_.chirp);
    if (end > available) break;
    const auto segment = std::span<const double>(pending_).subspan(begin - pending_start_, end - begin);
    const double level = cfg_.calibration.LevelFromPeak(
        GoertzelAmplitude(segment, kProbeFitFrequencyHz, cfg_.chirp.sample_rate_hz));
    levels_.push_back(level);
    consecutive_ = level > cfg_.threshold_db_spl ? consecutive_ + 1 : 0;
    if (consecutive_ >= cfg_.required_chirps) detected_chirp_ = next_chirp_;
    ++next_chirp_;
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(end - pending_start_));
    pending_start_ = end;
  }
  return in_ear();
}

std::optional<double> ProbeFitDetector::detected_at_s() const {
  if (!detected_chirp_) return std::nullopt;
  return static_cast<double>(ProbeChirpStart(*detected_chirp_ + 1, cfg_.chirp)) /
         cfg_.chirp.sample_rate_hz;
}

ProbeFitResult ProbeFitCheck(const SampleBuffer& mic, const ProbeFitConfig& cfg) {
  if (mic.channels() != 1) throw ConfigError("fit check expects a mono microphone stream");
  ProbeFitDetector detector(cfg);
  detector.Push(mic.samples());
  return {detector.in_ear(), detector.chirps_examined(), detector.detected_at_s()};
}

}  // namespace oae
