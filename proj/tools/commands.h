#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "oae/ear_model.h"
#include "oae/session.h"

namespace oae::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitRefer = 1,
  kExitNoisy = 2,
  kExitConfig = 3,
  kExitAborted = 4,
  kExitIo = 5,
  kExitInternal = 6,
};

inline constexpr const char* kConfigEnvVar = "OAESCREEN_CONFIG";

int ExitCodeFor(Outcome outcome);

// Session config from `path`, else from $OAESCREEN_CONFIG, else defaults.
SessionConfig LoadSessionConfig(const std::optional<std::filesystem::path>& path);

SpeakerModel ParseSpeaker(const std::string& name);

struct SimulateOptions {
  std::string preset = "normal_adult";
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  std::string speaker = "identity";
  std::optional<std::filesystem::path> config;
};
// Runs one simulated session and writes stimulus.wav, mic.wav (stereo:
// microphone, stimulus), fit_mic.wav, ranging_mic.wav, ear_model.cfg and
// session.cfg into out_dir.
int RunSimulate(const SimulateOptions& opts, std::ostream& out);

struct ScreenOptions {
  std::optional<std::filesystem::path> input;  // directory from simulate, or a mic WAV
  std::optional<std::string> preset;
  std::uint64_t seed = 1;
  std::string speaker = "identity";
  std::optional<std::string> protocol;
  std::optional<std::filesystem::path> config;
  std::optional<std::string> json_path;      // "-" = stdout
  std::optional<std::string> progress_path;  // "-" = stdout
};
int RunScreen(const ScreenOptions& opts, std::ostream& out);

struct RocOptions {
  std::optional<std::filesystem::path> cohort;  // default synthetic cohort when empty
  std::string protocol = "oaebuds";
  int bands = 2;
  std::string speaker = "nonlinear";
  std::optional<std::string> csv_path;
  std::optional<std::string> json_path;
  std::optional<std::filesystem::path> config;
  unsigned threads = 0;
};
int RunRoc(const RocOptions& opts, std::ostream& out);

struct IntegrityOptions {
  std::uint64_t seed = 1;
  int repetitions = 3;
  std::optional<std::filesystem::path> config;
};
int RunIntegrity(const IntegrityOptions& opts, std::ostream& out);

struct BenchStats {
  int windows = 0;
  std::optional<double> p50_ms;
  std::optional<double> p99_ms;
  std::optional<double> mean_ms;
  // Least-squares slope/intercept of cumulative time against window count.
  std::optional<double> slope_ms_per_window;
  std::optional<double> intercept_ms;
  std::optional<double> r_squared;
};
// Times OaeExtractor::Push on consecutive 1 s windows of a simulated recording.
BenchStats BenchmarkWindows(int windows, std::uint64_t seed = 1);

struct BenchOptions {
  int windows = 200;
  std::uint64_t seed = 1;
};
int RunBench(const BenchOptions& opts, std::ostream& out);

}  // namespace oae::cli
