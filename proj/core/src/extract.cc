#include "oae/extract.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

#include "oae/errors.h"
#include "oae/fft.h"

namespace oae {
namespace {

constexpr double kPowerFloor = 1e-30;

std::size_t Samples(double seconds, int fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

double Dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Correlation of `samples` with `pulse` at lag i (no magnitude).
double SignedCorrelation(std::span<const double> samples, std::span<const double> pulse,
                         std::size_t i) {
  return Dot(samples.subspan(i, pulse.size()), pulse);
}

}  // namespace

void ExtractConfig::Validate() const {
  if (!IsSupportedRate(sample_rate_hz)) throw ConfigError("extractor sample rate unsupported");
  if (!(period_s > 0.0)) throw ConfigError("pulse period must be > 0");
  if (!(sync_offset_s > refine_s && refine_s >= 0.0)) {
    throw ConfigError("sync offset must exceed the refinement span");
  }
  if (!(search_window_s > 0.0)) throw ConfigError("search window must be > 0");
  if (!(prominence > 0.0)) throw ConfigError("peak prominence must be > 0");
  if (!(reflection_delay_s >= 0.0) || !(lead_guard_s >= 0.0) || !(tail_guard_s >= 0.0)) {
    throw ConfigError("delays and guards must be >= 0");
  }
  if (!(reflection_delay_s + lead_guard_s < period_s - tail_guard_s)) {
    throw ConfigError("analysis window is empty: t_D + guards must stay below t_P");
  }
  if (!(quality_threshold > -1.0 && quality_threshold < 1.0)) {
    throw ConfigError("quality threshold must lie in (-1, 1)");
  }
  if (!(snr_cap_db > 0.0) || !std::isfinite(snr_cap_db)) {
    throw ConfigError("SNR cap must be a finite positive dB value");
  }
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0) {
    throw ConfigError("FFT size must be a power of two");
  }
  if (response_end() > fft_size) throw ConfigError("FFT size shorter than the analysis window");
  calibration.Validate();
}

std::size_t ExtractConfig::period_samples() const {
  return static_cast<std::size_t>(std::floor(period_s * sample_rate_hz + 1e-9));
}
std::size_t ExtractConfig::response_begin() const {
  return Samples(reflection_delay_s + lead_guard_s, sample_rate_hz);
}
std::size_t ExtractConfig::response_end() const {
  return Samples(period_s - tail_guard_s, sample_rate_hz);
}
std::size_t ExtractConfig::sync_offset_samples() const {
  return Samples(sync_offset_s, sample_rate_hz);
}
std::size_t ExtractConfig::refine_samples() const { return Samples(refine_s, sample_rate_hz); }

double BandSnrReport::MeanNoiseDbSpl() const {
  double sum = 0.0;
  for (const auto& b : bands) sum += b.noise_db_spl;
  return sum / bands.size();
}

std::vector<double> CorrelateTemplate(std::span<const double> samples,
                                      std::span<const double> pulse) {
  if (pulse.empty() || samples.size() < pulse.size()) return {};
  std::vector<double> out(samples.size() - pulse.size() + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::abs(SignedCorrelation(samples, pulse, i));
  }
  return out;
}

double PeakProminence(std::span<const double> values, std::size_t peak) {
  const double height = values[peak];
  double left_min = height;
  for (std::size_t j = peak; j-- > 0;) {
    if (values[j] > height) break;
    left_min = std::min(left_min, values[j]);
  }
  double right_min = height;
  for (std::size_t j = peak + 1; j < values.size(); ++j) {
    if (values[j] > height) break;
    right_min = std::min(right_min, values[j]);
  }
  return height - std::max(left_min, right_min);
}

std::vector<PulseOnset> FindPulseStarts(const SampleBuffer& window, const SampleBuffer& pulse,
                                        const ExtractConfig& cfg) {
  if (window.channels() != 1 || pulse.channels() != 1) {
    throw ConfigError("pulse search expects mono buffers");
  }
  ExtractConfig local = cfg;
  local.sample_rate_hz = window.sample_rate_hz();
  OaeExtractor extractor(local, std::vector<double>(pulse.samples().begin(), pulse.samples().end()));
  extractor.Push(window.samples());
  extractor.Finish();
  return extractor.onsets();
}

double BatchQuality(const std::array<std::vector<double>, 4>& windows) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < windows.size(); ++i) {
    const double energy = Dot(windows[i], windows[i]) * Dot(windows[i + 1], windows[i + 1]);
    if (energy > 0.0) sum += Dot(windows[i], windows[i + 1]) / std::sqrt(energy);
  }
  return sum / 3.0;
}

namespace {

PulseBatch MakeBatch(const std::array<PulseOnset, 4>& group,
                     const std::function<std::span<const double>(std::size_t, std::size_t)>& range,
                     const ExtractConfig& cfg) {
  PulseBatch batch;
  std::array<std::vector<double>, 4> full;
  const std::size_t full_len = cfg.period_samples();
  for (std::size_t i = 0; i < 4; ++i) {
    batch.onsets[i] = group[i].index;
    batch.polarities[i] = group[i].polarity;
    const auto gap = range(group[i].index, full_len);
    full[i].assign(gap.begin(), gap.end());
    // Polarity-corrected so alternating-sign trains compare like with like.
    if (group[i].polarity < 0) {
      for (double& v : full[i]) v = -v;
    }
    const auto resp = range(group[i].index + cfg.response_begin(), cfg.response_length());
    batch.responses[i].assign(resp.begin(), resp.end());
  }
  batch.quality = BatchQuality(full);
  batch.usable = batch.quality > cfg.quality_threshold;
  return batch;
}

bool ConsecutiveSpacing(std::size_t prev, std::size_t next, const ExtractConfig& cfg) {
  const double spacing = static_cast<double>(next) - static_cast<double>(prev);
  return std::abs(spacing - cfg.period_s * cfg.sample_rate_hz) <= 1.0;
}

}  // namespace

std::vector<PulseBatch> GateNoiseBatches(std::span<const PulseOnset> onsets,
                                         const SampleBuffer& recording, const ExtractConfig& cfg) {
  cfg.Validate();
  if (recording.channels() != 1) throw ConfigError("batch gating expects a mono recording");
  const auto samples = recording.samples();
  auto range = [&](std::size_t first, std::size_t count) {
    if (first + count > samples.size()) throw InsufficientDataError("pulse window runs past the recording");
    return samples.subspan(first, count);
  };
  std::vector<PulseBatch> out;
  for (std::size_t b = 0; b + 4 <= onsets.size(); b += 4) {
    std::array<PulseOnset, 4> group{onsets[b], onsets[b + 1], onsets[b + 2], onsets[b + 3]};
    out.push_back(MakeBatch(group, range, cfg));
  }
  return out;
}

CombinedWaves CombineOddEven(std::span<const PulseBatch> batches, ExtractMode mode) {
  CombinedWaves out;
  std::vector<double> odd, even;
  auto add = [&](const std::vector<double>& wave) {
    const bool is_odd = (out.odd_count + out.even_count) % 2 == 0;
    auto& sum = is_odd ? odd : even;
    if (sum.empty()) sum.assign(wave.size(), 0.0);
    if (sum.size() != wave.size()) throw ConfigError("response windows differ in length");
    for (std::size_t i = 0; i < wave.size(); ++i) sum[i] += wave[i];
    ++(is_odd ? out.odd_count : out.even_count);
  };
  for (const auto& batch : batches) {
    if (!batch.usable) continue;
    if (mode == ExtractMode::kTeoae) {
      std::vector<double> group(batch.responses[0].size(), 0.0);
      for (const auto& r : batch.responses) {
        for (std::size_t i = 0; i < group.size(); ++i) group[i] += r[i];
      }
      add(group);
    } else {
      for (const auto& r : batch.responses) add(r);
    }
  }
  if (out.odd_count == 0) throw InsufficientDataError("no usable pulse batches");
  if (even.empty()) even.assign(odd.size(), 0.0);
  out.signal.resize(odd.size());
  out.noise.resize(odd.size());
  for (std::size_t i = 0; i < odd.size(); ++i) {
    const double w_odd = odd[i] / out.odd_count;
    const double w_even = out.even_count > 0 ? even[i] / out.even_count : 0.0;
    out.signal[i] = 0.5 * (w_odd + w_even);
    out.noise[i] = 0.5 * (w_odd - w_even);
  }
  return out;
}

BandSnrReport BandSnr(std::span<const double> signal_wave, std::span<const double> noise_wave,
                      const ExtractConfig& cfg) {
  if (!(cfg.snr_cap_db > 0.0) || !std::isfinite(cfg.snr_cap_db)) {
    throw ConfigError("SNR cap must be a finite positive dB value");
  }
  if (signal_wave.size() != noise_wave.size() || signal_wave.empty()) {
    throw ConfigError("signal and noise waves must share a non-zero length");
  }
  const std::size_t n_fft = std::max(cfg.fft_size, NextPowerOfTwo(signal_wave.size()));
  const auto sig = RealDft(signal_wave, n_fft);
  const auto noi = RealDft(noise_wave, n_fft);
  const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / n_fft;
  const double length = static_cast<double>(signal_wave.size());
  // Band power -> peak amplitude of the equivalent sinusoid -> dB SPL.
  auto level = [&](double mean_power) {
    return cfg.calibration.LevelFromPeak(2.0 * std::sqrt(std::max(mean_power, kPowerFloor)) / length);
  };
  BandSnrReport report;
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    double sp = 0.0, np = 0.0;
    int bins = 0;
    for (std::size_t k = 0; k < sig.size(); ++k) {
      const double f = k * bin_hz;
      if (f < kBands[b].lo_hz || f >= kBands[b].hi_hz) continue;
      sp += std::norm(sig[k]);
      np += std::norm(noi[k]);
      ++bins;
    }
    auto& r = report.bands[b];
    r.signal_db_spl = level(bins ? sp / bins : 0.0);
    r.noise_db_spl = level(bins ? np / bins : 0.0);
    r.snr_db = std::clamp(r.signal_db_spl - r.noise_db_spl, -cfg.snr_cap_db, cfg.snr_cap_db);
  }
  return report;
}

OaeExtractor::OaeExtractor(ExtractConfig cfg, std::vector<double> pulse)
    : cfg_(std::move(cfg)), pulse_(std::move(pulse)) {
  cfg_.Validate();
  if (pulse_.empty()) throw ConfigError("pulse template is empty");
}

std::span<const double> OaeExtractor::Range(std::size_t first, std::size_t count) const {
  return std::span<const double>(buffer_).subspan(first - buffer_start_, count);
}

void OaeExtractor::Push(std::span<const double> chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  total_ += chunk.size();
  ++window_count_;
  Process(false);
}

void OaeExtractor::Finish() { Process(true); }

void OaeExtractor::ExcludeRange(std::size_t first, std::size_t count) {
  if (count > 0) excluded_.emplace_back(first, first + count);
}

void OaeExtractor::Process(bool at_end) {
  for (;;) {
    const bool progressed = locked_ ? Track() : Search(at_end);
    EvaluatePending();
    if (!progressed) break;
  }
  Trim();
}

bool OaeExtractor::Search(bool at_end) {
  const std::size_t block_len = Samples(cfg_.search_window_s, cfg_.sample_rate_hz);
  const std::size_t m = pulse_.size();
  const std::size_t r = cfg_.refine_samples();
  const std::size_t block_start = search_block_ * block_len;
  const std::size_t begin = std::max(block_start, search_from_);
  std::size_t end = block_start + block_len;  // lags [begin, end)
  if (total_ < end + r + m) {
    if (!at_end || total_ < m + r + 1) return false;
    end = std::min(end, total_ - m - r);
  }
  if (end <= begin) return false;

  // Lags are searched inside the block with one neighbour on each side;
  // anything before the recording counts as silence.
  const std::size_t left = begin > 0 ? 1 : 0;
  std::vector<double> corr(1 - left, 0.0);
  const auto inner = CorrelateTemplate(Range(begin - left, end - begin + left + m), pulse_);
  corr.insert(corr.end(), inner.begin(), inner.end());
  std::optional<std::size_t> found;
  for (std::size_t i = 1; i + 1 < corr.size(); ++i) {
    if (corr[i] < cfg_.prominence) continue;
    if (!(corr[i] > corr[i - 1] && corr[i] >= corr[i + 1])) continue;
    if (PeakProminence(corr, i) >= cfg_.prominence) {
      found = begin + i - 1;
      break;
    }
  }
  if (!found) {
    ++search_block_;
    search_from_ = search_block_ * block_len;
    return true;
  }
  // Settle on the strongest lag near the first qualifying peak.
  const std::size_t lo = *found >= r ? *found - r : 0;
  const std::size_t hi = std::min(*found + r, total_ - m);
  std::size_t best = *found;
  double best_value = 0.0;
  for (std::size_t i = std::max(lo, buffer_start_); i <= hi; ++i) {
    const double c = Dot(Range(i, m), pulse_);
    if (std::abs(c) > std::abs(best_value)) {
      best_value = c;
      best = i;
    }
  }
  locked_ = true;
  AddOnset({best, best_value < 0 ? -1 : 1});
  return true;
}

bool OaeExtractor::Track() {
  const std::size_t m = pulse_.size();
  const std::size_t r = cfg_.refine_samples();
  const std::size_t predicted = last_onset_ + cfg_.sync_offset_samples();
  if (total_ < predicted + r + m) return false;
  std::size_t best = predicted;
  double best_value = 0.0;
  for (std::size_t i = predicted - r; i <= predicted + r; ++i) {
    const double c = Dot(Range(i, m), pulse_);
    if (std::abs(c) > std::abs(best_value)) {
      best_value = c;
      best = i;
    }
  }
  if (std::abs(best_value) < cfg_.prominence) {
    // Lost the train (probe moved or signal gone): resume the block search.
    const std::size_t block_len = Samples(cfg_.search_window_s, cfg_.sample_rate_hz);
    locked_ = false;
    search_from_ = predicted - r;
    search_block_ = search_from_ / block_len;
    return true;
  }
  AddOnset({best, best_value < 0 ? -1 : 1});
  return true;
}

void OaeExtractor::AddOnset(PulseOnset onset) {
  if (!train_origin_) train_origin_ = onset.index;
  onsets_.push_back(onset);
  if (!pending_.empty() && !ConsecutiveSpacing(pending_.back().index, onset.index, cfg_)) {
    pending_.clear();
    awaiting_group_start_ = true;
  } else if (pending_.empty() && onsets_.size() >= 2 &&
             !ConsecutiveSpacing(last_onset_, onset.index, cfg_)) {
    awaiting_group_start_ = true;
  }
  last_onset_ = onset.index;
  if (cfg_.mode == ExtractMode::kTeoae && awaiting_group_start_) {
    // Groups open on the pulse after a -3 click.
    if (onset.polarity < 0) awaiting_group_start_ = false;
    return;
  }
  pending_.push_back(onset);
}

void OaeExtractor::EvaluatePending() {
  if (pending_.size() < 4) return;
  const std::size_t need = pending_[3].index + std::max(cfg_.period_samples(), cfg_.response_end());
  if (total_ < need) return;
  std::array<PulseOnset, 4> group{pending_[0], pending_[1], pending_[2], pending_[3]};
  pending_.erase(pending_.begin(), pending_.begin() + 4);
  PulseBatch batch = MakeBatch(
      group, [this](std::size_t first, std::size_t count) { return Range(first, count); }, cfg_);
  if (cfg_.mode == ExtractMode::kTeoae) {
    const bool pattern = group[0].polarity > 0 && group[1].polarity > 0 &&
                         group[2].polarity > 0 && group[3].polarity < 0;
    if (!pattern) {
      batch.usable = false;
      pending_.clear();
      awaiting_group_start_ = group[3].polarity >= 0;
    }
  }
  const std::size_t span = std::max(cfg_.period_samples(), cfg_.response_end());
  std::array<bool, 4> missing{};
  bool any_missing = false;
  for (std::size_t i = 0; i < 4; ++i) {
    missing[i] = Excluded(group[i].index, group[i].index + span);
    any_missing = any_missing || missing[i];
  }
  if (any_missing && batch.usable != false) {
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i + 1 < 4; ++i) {
      if (missing[i] || missing[i + 1]) continue;
      std::array<std::vector<double>, 4> pair;
      for (std::size_t j = 0; j < 2; ++j) {
        const auto w = Range(group[i + j].index, cfg_.period_samples());
        pair[j].assign(w.begin(), w.end());
        if (group[i + j].polarity < 0) {
          for (double& v : pair[j]) v = -v;
        }
      }
      pair[2] = pair[0];
      pair[3] = pair[1];
      // Pairs (0,1), (1,2), (2,3) of {a, b, a, b} all score corr(a, b).
      sum += BatchQuality(pair);
      ++pairs;
    }
    batch.quality = pairs > 0 ? sum / pairs : 0.0;
    batch.usable = pairs > 0 && batch.quality > cfg_.quality_threshold;
  }
  if (batch.usable) {
    Accumulate(batch, missing);
    ++batches_used_;
  } else {
    ++batches_discarded_;
  }
}

bool OaeExtractor::Excluded(std::size_t first, std::size_t end) const {
  return std::any_of(excluded_.begin(), excluded_.end(),
                     [&](const auto& r) { return r.first < end && first < r.second; });
}

void OaeExtractor::Accumulate(const PulseBatch& batch, const std::array<bool, 4>& missing) {
  // Odd/even follows the click's position in the train, so clicks lost to
  // gaps or resynchronization do not swap the halves of later clicks.
  auto train_index = [&](std::size_t onset) {
    const double period = cfg_.period_s * cfg_.sample_rate_hz;
    return std::llround(static_cast<double>(onset - *train_origin_) / period);
  };
  auto add = [&](long long slot, const std::vector<double>* wave) {
    const bool is_odd = slot % 2 == 0;
    if (wave == nullptr) return;
    auto& sum = is_odd ? odd_sum_ : even_sum_;
    if (sum.empty()) sum.assign(wave->size(), 0.0);
    for (std::size_t i = 0; i < wave->size(); ++i) sum[i] += (*wave)[i];
    ++(is_odd ? odd_count_ : even_count_);
  };
  if (cfg_.mode == ExtractMode::kTeoae) {
    // The polarity sum only cancels with all four clicks present.
    std::vector<double> group(batch.responses[0].size(), 0.0);
    for (const auto& r : batch.responses) {
      for (std::size_t i = 0; i < group.size(); ++i) group[i] += r[i];
    }
    const bool complete = !(missing[0] || missing[1] || missing[2] || missing[3]);
    add(train_index(batch.onsets[0]) / 4, complete ? &group : nullptr);
  } else {
    for (std::size_t i = 0; i < 4; ++i) {
      add(train_index(batch.onsets[i]), missing[i] ? nullptr : &batch.responses[i]);
    }
  }
}

void OaeExtractor::Trim() {
  const std::size_t margin = cfg_.refine_samples() + 1;
  std::size_t keep = locked_ ? last_onset_
                             : std::min(search_from_ > margin ? search_from_ - margin : 0, total_);
  if (!pending_.empty()) keep = std::min(keep, pending_.front().index);
  if (keep <= buffer_start_) return;
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(keep - buffer_start_));
  buffer_start_ = keep;
}

CombinedWaves OaeExtractor::Waves() const {
  if (odd_count_ == 0) throw InsufficientDataError("no usable pulse batches");
  CombinedWaves out;
  out.odd_count = odd_count_;
  out.even_count = even_count_;
  out.signal.resize(odd_sum_.size());
  out.noise.resize(odd_sum_.size());
  for (std::size_t i = 0; i < odd_sum_.size(); ++i) {
    const double w_odd = odd_sum_[i] / odd_count_;
    const double w_even = even_count_ > 0 ? even_sum_[i] / even_count_ : 0.0;
    out.signal[i] = 0.5 * (w_odd + w_even);
    out.noise[i] = 0.5 * (w_odd - w_even);
  }
  return out;
}

BandSnrReport OaeExtractor::Report() const {
  const CombinedWaves waves = Waves();
  BandSnrReport report = BandSnr(waves.signal, waves.noise, cfg_);
  report.batches_used = batches_used_;
  report.batches_discarded = batches_discarded_;
  report.window_count = window_count_;
  report.pulses_used = odd_count_ + even_count_;
  return report;
}

BandSnrReport TeoaeExtract(const SampleBuffer& recording, const SampleBuffer& pulse,
                           double delay_s, ExtractConfig cfg) {
  if (recording.channels() != 1 || pulse.channels() != 1) {
    throw ConfigError("TEOAE extraction expects mono buffers");
  }
  cfg.mode = ExtractMode::kTeoae;
  cfg.reflection_delay_s = delay_s;
  cfg.lead_guard_s = 0.0;
  cfg.sample_rate_hz = recording.sample_rate_hz();
  OaeExtractor extractor(cfg, std::vector<double>(pulse.samples().begin(), pulse.samples().end()));
  extractor.Push(recording.samples());
  extractor.Finish();
  return extractor.Report();
}

}  // namespace oae
