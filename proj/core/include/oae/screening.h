#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oae/calibration.h"
#include "oae/extract.h"
#include "oae/signal.h"

namespace oae {

enum class Outcome { kPass, kRefer, kNoisy };

std::string_view ToString(Outcome outcome);

struct Thresholds {
  int min_bands = 2;
  double snr_db = 8.0;
  double floor_db_spl = -10.0;
  double noise_flag_db_spl = 6.0;

  void Validate() const;
};

struct ScreeningVerdict {
  Outcome outcome = Outcome::kRefer;
  std::vector<std::string> bands_passed;  // band keys, low to high
  std::optional<BandSnrReport> report;    // empty when nothing was usable
  double t_d_used_s = 0.0;
  bool used_default_delay = false;
  double duration_s = 0.0;
  bool probe_fit = false;
  int batches_used = 0;
  int batches_discarded = 0;
};

bool BandPasses(const BandResult& band, const Thresholds& thresholds);

// pass: at least min_bands bands with snr >= snr_db and signal above the
// floor, and mean noise <= noise_flag_db_spl. noisy: mean noise above the flag.
ScreeningVerdict Decide(const BandSnrReport& report, const Thresholds& thresholds = {});

// Peak amplitude of the `freq_hz` component of `samples` (Goertzel).
double GoertzelAmplitude(std::span<const double> samples, double freq_hz, int sample_rate_hz);

inline constexpr double kProbeFitFrequencyHz = 200.0;
// Midway between the simulated sealed-canal and open-air 200 Hz levels.
inline constexpr double kProbeFitThresholdDbSpl = 47.0;
inline constexpr int kProbeFitRequiredChirps = 50;

struct ProbeFitConfig {
  double threshold_db_spl = kProbeFitThresholdDbSpl;
  int required_chirps = kProbeFitRequiredChirps;
  double timeout_s = 30.0;
  ProbeChirpConfig chirp;
  Calibration calibration;

  void Validate() const;
};

// Consumes the microphone stream of a back-to-back probe chirp sequence and
// declares the probe in the ear after `required_chirps` consecutive chirps
// whose 200 Hz level exceeds the threshold.
class ProbeFitDetector {
 public:
  explicit ProbeFitDetector(ProbeFitConfig cfg);

  // Returns true once the probe is in the ear.
  bool Push(std::span<const double> mic);

  bool in_ear() const { return detected_chirp_.has_value(); }
  int chirps_examined() const { return next_chirp_; }
  int consecutive() const { return consecutive_; }
  // Stream time at which the last chirp of the qualifying run ended.
  std::optional<double> detected_at_s() const;
  const std::vector<double>& levels_db_spl() const { return levels_; }

 private:
  ProbeFitConfig cfg_;
  std::vector<double> pending_;
  std::size_t pending_start_ = 0;
  int next_chirp_ = 0;
  int consecutive_ = 0;
  std::optional<int> detected_chirp_;
  std::vector<double> levels_;
};

struct ProbeFitResult {
  bool in_ear = false;
  int chirps_examined = 0;
  std::optional<double> detected_at_s;
};

ProbeFitResult ProbeFitCheck(const SampleBuffer& mic, const ProbeFitConfig& cfg = {});

}  // namespace oae
