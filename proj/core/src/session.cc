#include "oae/session.h"

#include <algorithm>
#include <cmath>

#include "oae/ear_sim.h"
#include "oae/errors.h"

namespace oae {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kMinAnalysisWindowS = 0.002;

double ClampDelay(double t_d, const ExtractConfig& extract) {
  const double latest =
      extract.period_s - extract.tail_guard_s - extract.lead_guard_s - kMinAnalysisWindowS;
  return std::clamp(t_d, 0.0, std::max(0.0, latest));
}

}  // namespace

std::string_view ToString(Protocol protocol) {
  switch (protocol) {
    case Protocol::kOaebuds: return "oaebuds";
    case Protocol::kOaebudsFixed2p5: return "oaebuds_fixed2p5";
    case Protocol::kTeoae2p5: return "teoae2p5";
    case Protocol::kTeoae12: return "teoae12";
  }
  return "oaebuds";
}

Protocol ParseProtocol(std::string_view text) {
  for (Protocol p : {Protocol::kOaebuds, Protocol::kOaebudsFixed2p5, Protocol::kTeoae2p5,
                     Protocol::kTeoae12}) {
    if (ToString(p) == text) return p;
  }
  throw ConfigError("unknown protocol '" + std::string(text) + "'");
}

std::optional<double> FixedDelayS(Protocol protocol) {
  switch (protocol) {
    case Protocol::kOaebuds: return std::nullopt;
    case Protocol::kOaebudsFixed2p5:
    case Protocol::kTeoae2p5: return 0.0025;
    case Protocol::kTeoae12: return 0.012;
  }
  return std::nullopt;
}

bool IsTeoae(Protocol protocol) {
  return protocol == Protocol::kTeoae2p5 || protocol == Protocol::kTeoae12;
}

std::string_view ToString(SessionStage stage) {
  switch (stage) {
    case SessionStage::kIdle: return "idle";
    case SessionStage::kFitCheck: return "fit_check";
    case SessionStage::kRanging: return "ranging";
    case SessionStage::kMeasuring: return "measuring";
    case SessionStage::kDone: return "done";
    case SessionStage::kAborted: return "aborted";
  }
  return "idle";
}

void SessionConfig::Finalize() {
  calibration.Validate();
  const double amplitude = StimulusAmplitude(stimulus_pe_spl, calibration);
  if (!(amplitude > 0.0 && amplitude <= kFullScale)) {
    throw ConfigError("stimulus level outside the converter range");
  }
  chirp.amplitude = amplitude;
  pulse.amplitude = amplitude;
  fit.chirp.amplitude = amplitude;
  fit.calibration = calibration;
  extract.calibration = calibration;
  extract.period_s = pulse.gap_s;
  extract.sample_rate_hz = pulse.sample_rate_hz;
  if (!(window_s > 0.0)) throw ConfigError("session window must be > 0");
  chirp.Validate();
  pulse.Validate();
  delay.Validate();
  thresholds.Validate();
  fit.Validate();
  extract.Validate();
  if (IsTeoae(protocol) && pulse.count % 4 != 0) {
    throw ConfigError("TEOAE protocols need a pulse count that is a multiple of 4");
  }
}

SessionConfig SessionConfig::FromKeyValue(const KeyValueDoc& doc) {
  static const char* const kKnown[] = {
      "calibration.full_scale_db_spl", "stimulus.pe_spl", "fmcw.f0_hz", "fmcw.f1_hz",
      "fmcw.duration_s", "fmcw.threshold_db", "fmcw.default_delay_s", "fmcw.smoothing_bins",
      "pulse.duration_s", "pulse.band_lo_hz", "pulse.band_hi_hz", "pulse.gap_s", "pulse.count",
      "extract.sync_offset_s", "extract.refine_s", "extract.prominence", "extract.lead_guard_s",
      "extract.tail_guard_s", "extract.quality_threshold", "extract.snr_cap_db",
      "extract.fft_size", "decide.min_bands", "decide.snr_db", "decide.floor_db_spl",
      "decide.noise_flag_db_spl", "fit.threshold_db_spl", "fit.required_chirps",
      "fit.timeout_s", "fit.skip", "session.protocol", "session.window_s",
      "session.forced_t_d_s"};
  for (const auto& [key, value] : doc.entries()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  SessionConfig c;
  c.calibration.full_scale_db_spl = doc.GetDouble("calibration.full_scale_db_spl", c.calibration.full_scale_db_spl);
  c.stimulus_pe_spl = doc.GetDouble("stimulus.pe_spl", c.stimulus_pe_spl);
  c.chirp.f0_hz = doc.GetDouble("fmcw.f0_hz", c.chirp.f0_hz);
  c.chirp.f1_hz = doc.GetDouble("fmcw.f1_hz", c.chirp.f1_hz);
  c.chirp.duration_s = doc.GetDouble("fmcw.duration_s", c.chirp.duration_s);
  c.delay.threshold_db = doc.GetDouble("fmcw.threshold_db", c.delay.threshold_db);
  c.delay.default_delay_s = doc.GetDouble("fmcw.default_delay_s", c.delay.default_delay_s);
  c.delay.smoothing_bins = doc.GetInt("fmcw.smoothing_bins", c.delay.smoothing_bins);
  c.pulse.pulse_duration_s = doc.GetDouble("pulse.duration_s", c.pulse.pulse_duration_s);
  c.pulse.band_lo_hz = doc.GetDouble("pulse.band_lo_hz", c.pulse.band_lo_hz);
  c.pulse.band_hi_hz = doc.GetDouble("pulse.band_hi_hz", c.pulse.band_hi_hz);
  c.pulse.gap_s = doc.GetDouble("pulse.gap_s", c.pulse.gap_s);
  c.pulse.count = doc.GetInt("pulse.count", c.pulse.count);
  c.extract.sync_offset_s = doc.GetDouble("extract.sync_offset_s", c.extract.sync_offset_s);
  c.extract.refine_s = doc.GetDouble("extract.refine_s", c.extract.refine_s);
  c.extract.prominence = doc.GetDouble("extract.prominence", c.extract.prominence);
  c.extract.lead_guard_s = doc.GetDouble("extract.lead_guard_s", c.extract.lead_guard_s);
  c.extract.tail_guard_s = doc.GetDouble("extract.tail_guard_s", c.extract.tail_guard_s);
  c.extract.quality_threshold = doc.GetDouble("extract.quality_threshold", c.extract.quality_threshold);
  c.extract.snr_cap_db = doc.GetDouble("extract.snr_cap_db", c.extract.snr_cap_db);
  c.extract.fft_size = static_cast<std::size_t>(doc.GetInt("extract.fft_size", static_cast<int>(c.extract.fft_size)));
  c.thresholds.min_bands = doc.GetInt("decide.min_bands", c.thresholds.min_bands);
  c.thresholds.snr_db = doc.GetDouble("decide.snr_db", c.thresholds.snr_db);
  c.thresholds.floor_db_spl = doc.GetDouble("decide.floor_db_spl", c.thresholds.floor_db_spl);
  c.thresholds.noise_flag_db_spl = doc.GetDouble("decide.noise_flag_db_spl", c.thresholds.noise_flag_db_spl);
  c.fit.threshold_db_spl = doc.GetDouble("fit.threshold_db_spl", c.fit.threshold_db_spl);
  c.fit.required_chirps = doc.GetInt("fit.required_chirps", c.fit.required_chirps);
  c.fit.timeout_s = doc.GetDouble("fit.timeout_s", c.fit.timeout_s);
  c.skip_fit_check = doc.GetBool("fit.skip", c.skip_fit_check);
  c.protocol = ParseProtocol(doc.GetString("session.protocol", std::string(ToString(c.protocol))));
  c.window_s = doc.GetDouble("session.window_s", c.window_s);
  if (doc.Has("session.forced_t_d_s")) c.forced_t_d_s = doc.GetDouble("session.forced_t_d_s", 0.0);
  c.Finalize();
  return c;
}

KeyValueDoc SessionConfig::ToKeyValue() const {
  KeyValueDoc d;
  auto num = [&](const char* key, double v) { d.Add(key, FormatDouble(v)); };
  num("calibration.full_scale_db_spl", calibration.full_scale_db_spl);
  num("stimulus.pe_spl", stimulus_pe_spl);
  num("fmcw.f0_hz", chirp.f0_hz);
  num("fmcw.f1_hz", chirp.f1_hz);
  num("fmcw.duration_s", chirp.duration_s);
  num("fmcw.threshold_db", delay.threshold_db);
  num("fmcw.default_delay_s", delay.default_delay_s);
  d.Add("fmcw.smoothing_bins", std::to_string(delay.smoothing_bins));
  num("pulse.duration_s", pulse.pulse_duration_s);
  num("pulse.band_lo_hz", pulse.band_lo_hz);
  num("pulse.band_hi_hz", pulse.band_hi_hz);
  num("pulse.gap_s", pulse.gap_s);
  d.Add("pulse.count", std::to_string(pulse.count));
  num("extract.sync_offset_s", extract.sync_offset_s);
  num("extract.refine_s", extract.refine_s);
  num("extract.prominence", extract.prominence);
  num("extract.lead_guard_s", extract.lead_guard_s);
  num("extract.tail_guard_s", extract.tail_guard_s);
  num("extract.quality_threshold", extract.quality_threshold);
  num("extract.snr_cap_db", extract.snr_cap_db);
  d.Add("extract.fft_size", std::to_string(extract.fft_size));
  d.Add("decide.min_bands", std::to_string(thresholds.min_bands));
  num("decide.snr_db", thresholds.snr_db);
  num("decide.floor_db_spl", thresholds.floor_db_spl);
  num("decide.noise_flag_db_spl", thresholds.noise_flag_db_spl);
  num("fit.threshold_db_spl", fit.threshold_db_spl);
  d.Add("fit.required_chirps", std::to_string(fit.required_chirps));
  num("fit.timeout_s", fit.timeout_s);
  d.Add("fit.skip", skip_fit_check ? "true" : "false");
  d.Add("session.protocol", std::string(ToString(protocol)));
  num("session.window_s", window_s);
  if (forced_t_d_s) num("session.forced_t_d_s", *forced_t_d_s);
  return d;
}

SimulatedEarSource::SimulatedEarSource(EarModel model, SpeakerModel speaker, std::uint64_t seed,
                                       Calibration cal)
    : model_(std::move(model)), speaker_(std::move(speaker)), seed_(seed), cal_(cal) {
  model_.Validate();
}

SampleBuffer SimulatedEarSource::Respond(SessionStage, const SampleBuffer& stimulus) {
  const std::uint64_t call_seed = SplitMix64(seed_ ^ SplitMix64(calls_++));
  return SimulateEar(model_, speaker_, stimulus, call_seed, cal_);
}

void RecordedEarSource::Set(SessionStage stage, SampleBuffer recording) {
  if (recording.channels() != 1) recording = recording.Channel(0);
  recordings_[stage] = std::move(recording);
  if (stage == SessionStage::kFitCheck) fit_cursor_ = 0;
}

SampleBuffer RecordedEarSource::Respond(SessionStage stage, const SampleBuffer& stimulus) {
  const auto it = recordings_.find(stage);
  if (it == recordings_.end()) {
    throw IoError("no recording for stage " + std::string(ToString(stage)));
  }
  const SampleBuffer& rec = it->second;
  if (rec.sample_rate_hz() != stimulus.sample_rate_hz()) {
    throw IoError("recording rate does not match the " + std::string(ToString(stage)) + " stimulus");
  }
  if (stage != SessionStage::kFitCheck) return rec;
  // Silence once the capture runs out, so the fit check can time out.
  const std::size_t n = stimulus.frame_count();
  const std::size_t take = fit_cursor_ < rec.frame_count() ? std::min(n, rec.frame_count() - fit_cursor_) : 0;
  SampleBuffer out = rec.Slice(fit_cursor_, take);
  out.Append(SampleBuffer::Silence(n - take, 1, rec.sample_rate_hz()));
  fit_cursor_ += n;
  return out;
}

SampleBuffer CapturingEarSource::Respond(SessionStage stage, const SampleBuffer& stimulus) {
  SampleBuffer response = inner_.Respond(stage, stimulus);
  auto append = [&](std::map<SessionStage, SampleBuffer>& into, const SampleBuffer& b) {
    auto [it, inserted] = into.try_emplace(stage, b);
    if (!inserted) it->second.Append(b);
  };
  append(responses_, response);
  append(stimuli_, stimulus);
  return response;
}

ScreeningVerdict RunSession(EarSource& source, const SessionConfig& input,
                            const EventSink& on_event) {
  SessionConfig cfg = input;
  cfg.Finalize();
  int sequence = 0;
  double elapsed = 0.0;
  auto emit = [&](SessionEvent e) {
    e.sequence = sequence++;
    e.elapsed_s = elapsed;
    if (on_event) on_event(e);
  };
  emit({.stage = SessionStage::kIdle});

  ScreeningVerdict verdict;
  if (!cfg.skip_fit_check) {
    ProbeFitDetector detector(cfg.fit);
    const int block = cfg.fit.required_chirps;
    while (true) {
      const SampleBuffer stim = GenerateProbeChirpSequence(block, cfg.fit.chirp);
      const SampleBuffer mic = source.Respond(SessionStage::kFitCheck, stim);
      if (mic.channels() != 1 || mic.frame_count() < stim.frame_count()) {
        throw IoError("fit-check response shorter than its stimulus");
      }
      const bool in_ear = detector.Push(mic.samples().first(stim.frame_count()));
      elapsed = in_ear ? *detector.detected_at_s() : elapsed + stim.duration_s();
      emit({.stage = SessionStage::kFitCheck, .in_ear = in_ear});
      if (in_ear) break;
      if (elapsed >= cfg.fit.timeout_s) {
        emit({.stage = SessionStage::kAborted, .in_ear = false});
        throw SessionAbortedError("probe not seated within the fit-check timeout");
      }
    }
    verdict.probe_fit = true;
  }

  double t_d = 0.0;
  if (cfg.forced_t_d_s) {
    t_d = *cfg.forced_t_d_s;
  } else if (const auto fixed = FixedDelayS(cfg.protocol)) {
    t_d = *fixed;
  } else {
    const SampleBuffer stim = GenerateRangingSequence(cfg.chirp);
    const SampleBuffer mic = source.Respond(SessionStage::kRanging, stim);
    const ReflectionEstimate est = EstimateFromRanging(mic, cfg.chirp, cfg.delay);
    elapsed += stim.duration_s();
    t_d = est.t_d_s;
    verdict.used_default_delay = est.used_default;
  }
  ExtractConfig extract = cfg.extract;
  if (IsTeoae(cfg.protocol)) {
    extract.mode = ExtractMode::kTeoae;
    extract.lead_guard_s = 0.0;
  }
  t_d = ClampDelay(t_d, extract);
  extract.reflection_delay_s = t_d;
  verdict.t_d_used_s = t_d;
  emit({.stage = SessionStage::kRanging, .t_d_s = t_d});

  const SampleBuffer stim =
      IsTeoae(cfg.protocol) ? GenerateTeoaeTrain(cfg.pulse) : GeneratePulseTrain(cfg.pulse);
  const SampleBuffer mic = source.Respond(SessionStage::kMeasuring, stim);
  if (mic.channels() != 1 || mic.sample_rate_hz() != cfg.pulse.sample_rate_hz) {
    throw IoError("measurement recording must be mono at the pulse rate");
  }
  const SampleBuffer pulse = GenerateStimulusPulse(cfg.pulse);
  OaeExtractor extractor(extract, std::vector<double>(pulse.samples().begin(), pulse.samples().end()));
  const auto window = static_cast<std::size_t>(std::llround(cfg.window_s * mic.sample_rate_hz()));
  const double measure_start = elapsed;
  const auto samples = mic.samples();
  int window_index = 0;
  for (std::size_t first = 0; first < samples.size(); first += window, ++window_index) {
    const std::size_t count = std::min(window, samples.size() - first);
    extractor.Push(samples.subspan(first, count));
    if (first + count == samples.size()) extractor.Finish();
    elapsed = measure_start + static_cast<double>(first + count) / mic.sample_rate_hz();
    SessionEvent e{.stage = SessionStage::kMeasuring,
                   .window_index = window_index,
                   .batches_used = extractor.batches_used(),
                   .batches_discarded = extractor.batches_discarded()};
    if (extractor.HasResult()) e.report = extractor.Report();
    emit(std::move(e));
  }
  if (samples.empty()) extractor.Finish();

  const double t_d_used = verdict.t_d_used_s;
  const bool probe_fit = verdict.probe_fit;
  const bool used_default = verdict.used_default_delay;
  if (extractor.HasResult()) {
    verdict = Decide(extractor.Report(), cfg.thresholds);
  } else {
    verdict = ScreeningVerdict{.outcome = Outcome::kNoisy};
    verdict.batches_used = extractor.batches_used();
    verdict.batches_discarded = extractor.batches_discarded();
  }
  verdict.t_d_used_s = t_d_used;
  verdict.probe_fit = probe_fit;
  verdict.used_default_delay = used_default;
  verdict.duration_s = elapsed;
  emit({.stage = SessionStage::kDone});
  return verdict;
}

IntegrityResult ProbeIntegrityCheck(SessionConfig config, std::uint64_t seed, int repetitions) {
  if (repetitions < 1) throw ConfigError("integrity check needs at least one repetition");
  config.skip_fit_check = true;
  config.Finalize();
  IntegrityResult result;
  result.passed = true;
  const EarModel tube = Preset("closed_tube_1cc");
  for (int r = 0; r < repetitions; ++r) {
    SimulatedEarSource source(tube, SpeakerModel::Identity(), SplitMix64(seed + r), config.calibration);
    ScreeningVerdict verdict = RunSession(source, config);
    bool ok = verdict.outcome == Outcome::kRefer && verdict.report.has_value();
    if (verdict.report) {
      for (const auto& band : verdict.report->bands) ok = ok && band.snr_db < config.thresholds.snr_db;
    }
    result.passed = result.passed && ok;
    result.runs.push_back(std::move(verdict));
  }
  return result;
}

}  // namespace oae
