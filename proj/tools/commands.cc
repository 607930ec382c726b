#include "commands.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>

#include "oae/cohort.h"
#include "oae/ear_sim.h"
#include "oae/errors.h"
#include "oae/report_json.h"
#include "oae/wav.h"

namespace oae::cli {
namespace {

namespace fs = std::filesystem;

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Writes to stdout for "-", otherwise to a file.
class Output {
 public:
  Output(const std::string& target, std::ostream& stdout_stream) {
    if (target == "-") {
      os_ = &stdout_stream;
    } else {
      file_.open(target, std::ios::binary);
      if (!file_) throw IoError("cannot open " + target + " for writing");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_ = nullptr;
};

SampleBuffer MonoOf(const SampleBuffer& b) { return b.channels() == 1 ? b : b.Channel(0); }

}  // namespace

int ExitCodeFor(Outcome outcome) {
  switch (outcome) {
    case Outcome::kPass: return kExitPass;
    case Outcome::kRefer: return kExitRefer;
    case Outcome::kNoisy: return kExitNoisy;
  }
  return kExitInternal;
}

SessionConfig LoadSessionConfig(const std::optional<fs::path>& path) {
  if (path) return SessionConfig::FromKeyValue(KeyValueDoc::Load(*path));
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    return SessionConfig::FromKeyValue(KeyValueDoc::Load(env));
  }
  SessionConfig cfg;
  cfg.Finalize();
  return cfg;
}

SpeakerModel ParseSpeaker(const std::string& name) {
  if (name == "identity") return SpeakerModel::Identity();
  if (name == "nonlinear") return SpeakerModel::Nonlinear();
  if (name == "cubic") return SpeakerModel::StrongCubic();
  throw ConfigError("unknown speaker '" + name + "' (identity, nonlinear, cubic)");
}

int RunSimulate(const SimulateOptions& opts, std::ostream& out) {
  const SessionConfig cfg = LoadSessionConfig(opts.config);
  const EarModel model = Preset(opts.preset);
  SimulatedEarSource sim(model, ParseSpeaker(opts.speaker), opts.seed, cfg.calibration);
  CapturingEarSource capture(sim);
  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create " + opts.out_dir.string() + ": " + ec.message());

  int code = kExitPass;
  std::optional<ScreeningVerdict> verdict;
  try {
    verdict = RunSession(capture, cfg);
  } catch (const SessionAbortedError& e) {
    out << "session aborted: " << e.what() << '\n';
    code = kExitAborted;
  }
  const auto& rx = capture.responses();
  const auto& tx = capture.stimuli();
  if (auto it = rx.find(SessionStage::kFitCheck); it != rx.end()) {
    WriteWav(opts.out_dir / "fit_mic.wav", it->second);
  }
  if (auto it = rx.find(SessionStage::kRanging); it != rx.end()) {
    WriteWav(opts.out_dir / "ranging_mic.wav", it->second);
  }
  if (auto it = rx.find(SessionStage::kMeasuring); it != rx.end()) {
    const SampleBuffer& stim = tx.at(SessionStage::kMeasuring);
    WriteWav(opts.out_dir / "stimulus.wav", stim);
    WriteWav(opts.out_dir / "mic.wav", SampleBuffer::Interleave(it->second, stim));
  }
  WriteText(opts.out_dir / "ear_model.cfg", SerializeEarModel(model));
  WriteText(opts.out_dir / "session.cfg", cfg.ToKeyValue().Serialize());
  if (verdict) {
    out << "simulated " << opts.preset << " (seed " << opts.seed << "): "
        << ToString(verdict->outcome) << ", t_d " << verdict->t_d_used_s * 1e3 << " ms, "
        << verdict->duration_s << " s -> " << opts.out_dir.string() << '\n';
  }
  return code;
}

int RunScreen(const ScreenOptions& opts, std::ostream& out) {
  if (opts.input.has_value() == opts.preset.has_value()) {
    throw ConfigError("screen needs exactly one of --in or --preset");
  }
  SessionConfig cfg = LoadSessionConfig(opts.config);
  if (opts.protocol) cfg.protocol = ParseProtocol(*opts.protocol);

  std::unique_ptr<EarSource> source;
  if (opts.preset) {
    source = std::make_unique<SimulatedEarSource>(Preset(*opts.preset), ParseSpeaker(opts.speaker),
                                                  opts.seed, cfg.calibration);
  } else {
    auto recorded = std::make_unique<RecordedEarSource>();
    fs::path dir = *opts.input;
    fs::path mic = dir / "mic.wav";
    if (!fs::is_directory(dir)) {
      mic = dir;
      dir = dir.parent_path();
      if (dir.empty()) dir = ".";
    }
    if (!fs::exists(mic)) throw IoError("missing recording " + mic.string());
    recorded->Set(SessionStage::kMeasuring, MonoOf(ReadWav(mic)));
    if (fs::exists(dir / "fit_mic.wav")) {
      recorded->Set(SessionStage::kFitCheck, MonoOf(ReadWav(dir / "fit_mic.wav")));
    } else {
      cfg.skip_fit_check = true;
    }
    if (fs::exists(dir / "ranging_mic.wav")) {
      recorded->Set(SessionStage::kRanging, MonoOf(ReadWav(dir / "ranging_mic.wav")));
    } else if (!FixedDelayS(cfg.protocol) && !cfg.forced_t_d_s) {
      cfg.forced_t_d_s = cfg.delay.default_delay_s;
    }
    source = std::move(recorded);
  }

  std::optional<Output> progress;
  if (opts.progress_path) progress.emplace(*opts.progress_path, out);
  EventSink sink;
  if (progress) {
    sink = [&](const SessionEvent& e) {
      if (e.stage == SessionStage::kMeasuring) progress->stream() << ProgressToJson(e).dump() << '\n';
    };
  }
  const ScreeningVerdict verdict = RunSession(*source, cfg, sink);
  if (opts.json_path) {
    Output json(*opts.json_path, out);
    json.stream() << VerdictToJson(verdict).dump(2) << '\n';
  }
  if (opts.json_path != "-" && opts.progress_path != "-") {
    out << ToString(verdict.outcome) << ": bands passed " << verdict.bands_passed.size()
        << "/5, t_d " << verdict.t_d_used_s * 1e3 << " ms, " << verdict.duration_s << " s\n";
  }
  return ExitCodeFor(verdict.outcome);
}

int RunRoc(const RocOptions& opts, std::ostream& out) {
  if (opts.bands != 2 && opts.bands != 3) throw ConfigError("--bands must be 2 or 3");
  const SessionConfig cfg = LoadSessionConfig(opts.config);
  const CohortSpec cohort = opts.cohort ? CohortSpec::Parse(ReadText(*opts.cohort)) : CohortSpec::Default();
  const Protocol protocol = ParseProtocol(opts.protocol);
  const auto ears = EvaluateCohort(cohort, protocol, cfg, ParseSpeaker(opts.speaker), opts.threads);
  Thresholds th = cfg.thresholds;
  th.min_bands = opts.bands;
  const RocResult roc = ComputeRoc(ears, th);
  if (opts.csv_path) {
    Output csv(*opts.csv_path, out);
    csv.stream() << roc.ToCsv();
  }
  if (opts.json_path) {
    Output json(*opts.json_path, out);
    json.stream() << RocToJson(roc).dump(2) << '\n';
  }
  if (opts.csv_path != "-" && opts.json_path != "-") {
    out << "protocol " << opts.protocol << ", " << opts.bands << " bands, " << ears.size()
        << " ears: auc " << roc.auc << ", optimal threshold " << roc.optimal_threshold << " dB\n";
  }
  return kExitPass;
}

int RunIntegrity(const IntegrityOptions& opts, std::ostream& out) {
  const SessionConfig cfg = LoadSessionConfig(opts.config);
  const IntegrityResult result = ProbeIntegrityCheck(cfg, opts.seed, opts.repetitions);
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    const auto& run = result.runs[i];
    out << "run " << i + 1 << ": " << ToString(run.outcome) << ", snr";
    if (run.report) {
      for (const auto& band : run.report->bands) out << ' ' << band.snr_db;
    } else {
      out << " n/a";
    }
    out << '\n';
  }
  out << "integrity " << (result.passed ? "pass" : "FAIL") << '\n';
  return result.passed ? kExitPass : kExitRefer;
}

BenchStats BenchmarkWindows(int windows, std::uint64_t seed) {
  if (windows < 0) throw ConfigError("window count must be >= 0");
  BenchStats stats;
  stats.windows = windows;
  if (windows == 0) return stats;

  SessionConfig cfg;
  cfg.pulse.count = static_cast<int>(std::llround(windows / cfg.pulse.gap_s));
  cfg.Finalize();
  const SampleBuffer stim = GeneratePulseTrain(cfg.pulse);
  const SampleBuffer mic = SimulateEar(Preset("normal_adult"), SpeakerModel::Identity(), stim, seed);
  const SampleBuffer pulse = GenerateStimulusPulse(cfg.pulse);
  ExtractConfig extract = cfg.extract;
  extract.reflection_delay_s = 0.0055;
  OaeExtractor extractor(extract, std::vector<double>(pulse.samples().begin(), pulse.samples().end()));

  const auto window = static_cast<std::size_t>(std::llround(cfg.window_s * cfg.pulse.sample_rate_hz));
  std::vector<double> per_window;
  const auto samples = mic.samples();
  for (int w = 0; w < windows; ++w) {
    const auto t0 = std::chrono::steady_clock::now();
    extractor.Push(samples.subspan(w * window, window));
    if (extractor.HasResult()) (void)extractor.Report();
    const auto t1 = std::chrono::steady_clock::now();
    per_window.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  std::vector<double> sorted = per_window;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const std::size_t idx = std::min(sorted.size() - 1, static_cast<std::size_t>(std::ceil(q * sorted.size())) - 1);
    return sorted[idx];
  };
  stats.p50_ms = quantile(0.50);
  stats.p99_ms = quantile(0.99);
  stats.mean_ms = std::accumulate(per_window.begin(), per_window.end(), 0.0) / windows;

  if (windows >= 2) {
    std::vector<double> cumulative(per_window.size());
    std::partial_sum(per_window.begin(), per_window.end(), cumulative.begin());
    const double n = windows;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < windows; ++i) {
      const double x = i + 1, y = cumulative[i];
      sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (int i = 0; i < windows; ++i) {
      const double e = cumulative[i] - (intercept + slope * (i + 1));
      ss_res += e * e;
    }
    stats.slope_ms_per_window = slope;
    stats.intercept_ms = intercept;
    stats.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  }
  return stats;
}

int RunBench(const BenchOptions& opts, std::ostream& out) {
  const BenchStats s = BenchmarkWindows(opts.windows, opts.seed);
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  const nlohmann::json j = {{"windows", s.windows},
                            {"p50_ms", opt(s.p50_ms)},
                            {"p99_ms", opt(s.p99_ms)},
                            {"mean_ms", opt(s.mean_ms)},
                            {"slope_ms_per_window", opt(s.slope_ms_per_window)},
                            {"intercept_ms", opt(s.intercept_ms)},
                            {"r_squared", opt(s.r_squared)}};
  out << j.dump(2) << '\n';
  return kExitPass;
}

}  // namespace oae::cli
