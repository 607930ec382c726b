#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "oae/calibration.h"
#include "oae/sample_buffer.h"

namespace oae {

enum class ExtractMode {
  kOddEven,  // every pulse identical; pulses split by odd/even index
  kTeoae,    // {1,1,1,-3} groups summed into one response before the split
};

struct ExtractConfig {
  int sample_rate_hz = 15625;
  double period_s = 0.020;           // t_P
  double sync_offset_s = 0.0205;     // prediction step between onsets
  double refine_s = 0.001;           // +- search around each prediction
  double search_window_s = 1.0;      // aligned blocks scanned for the first onset
  double prominence = 0.3e8;         // int16^2 correlation units
  double reflection_delay_s = 0.012; // t_D, or the fixed delay of a TEOAE protocol
  double lead_guard_s = 0.001;       // after t_D
  double tail_guard_s = 0.001;       // before the next pulse
  double quality_threshold = 0.95;
  double snr_cap_db = 60.0;
  std::size_t fft_size = 1024;
  ExtractMode mode = ExtractMode::kOddEven;
  Calibration calibration;

  void Validate() const;
  std::size_t period_samples() const;  // floor(t_P * fs): the full-gap window
  std::size_t response_begin() const;  // offset of the analysis window from the onset
  std::size_t response_end() const;
  std::size_t response_length() const { return response_end() - response_begin(); }
  std::size_t sync_offset_samples() const;
  std::size_t refine_samples() const;
};

struct PulseOnset {
  std::size_t index = 0;
  int polarity = 1;  // sign of the template correlation
  friend bool operator==(const PulseOnset&, const PulseOnset&) = default;
};

struct PulseBatch {
  std::array<std::size_t, 4> onsets{};
  std::array<int, 4> polarities{1, 1, 1, 1};
  std::array<std::vector<double>, 4> responses;  // analysis windows
  double quality = 0.0;
  bool usable = false;
};

struct BandDefinition {
  std::string_view key;
  double center_hz;
  double lo_hz;
  double hi_hz;
};

inline constexpr std::array<BandDefinition, 5> kBands = {{
    {"1000", 1000.0, 750.0, 1250.0},
    {"1500", 1500.0, 1250.0, 1750.0},
    {"2000", 2000.0, 1750.0, 2500.0},
    {"3000", 3000.0, 2500.0, 3500.0},
    {"4000", 4000.0, 3500.0, 4500.0},
}};

struct BandResult {
  double signal_db_spl = 0.0;
  double noise_db_spl = 0.0;
  double snr_db = 0.0;
};

struct BandSnrReport {
  std::array<BandResult, kBands.size()> bands{};
  int batches_used = 0;
  int batches_discarded = 0;
  int window_count = 0;
  int pulses_used = 0;  // responses (or TEOAE groups) in the average

  double MeanNoiseDbSpl() const;
};

struct CombinedWaves {
  std::vector<double> signal;  // (W_odd + W_even) / 2
  std::vector<double> noise;   // (W_odd - W_even) / 2
  int odd_count = 0;
  int even_count = 0;
};

// |cross-correlation| of `samples` with `pulse` at every full-overlap lag.
std::vector<double> CorrelateTemplate(std::span<const double> samples,
                                      std::span<const double> pulse);

// Prominence of the local maximum at `peak`, measured inside `values`.
double PeakProminence(std::span<const double> values, std::size_t peak);

// Onsets in one window: the first correlation peak with enough prominence,
// then predictions every sync_offset_s refined to the local maximum.
std::vector<PulseOnset> FindPulseStarts(const SampleBuffer& window, const SampleBuffer& pulse,
                                        const ExtractConfig& cfg = {});

// Energy-normalized zero-lag correlation averaged over the 3 adjacent pairs.
double BatchQuality(const std::array<std::vector<double>, 4>& windows);

// Consecutive groups of 4 onsets; partial trailing groups are dropped.
std::vector<PulseBatch> GateNoiseBatches(std::span<const PulseOnset> onsets,
                                         const SampleBuffer& recording, const ExtractConfig& cfg);

// Coherent odd/even averages over the usable batches (global pulse index).
// Throws InsufficientDataError when no batch is usable.
CombinedWaves CombineOddEven(std::span<const PulseBatch> batches,
                             ExtractMode mode = ExtractMode::kOddEven);

// Band levels of the two waves; the SNR is clamped to +-cfg.snr_cap_db.
BandSnrReport BandSnr(std::span<const double> signal_wave, std::span<const double> noise_wave,
                      const ExtractConfig& cfg = {});

// Streaming accumulator. Feed consecutive chunks of one recording; results
// depend only on the samples, not on how they were chunked.
class OaeExtractor {
 public:
  OaeExtractor(ExtractConfig cfg, std::vector<double> pulse);

  void Push(std::span<const double> chunk);
  // Processes whatever the end of the recording allows.
  void Finish();
  // Marks samples [first, first + count) as missing (zero-filled transport
  // gaps). Pulses whose full-gap window touches them are left out of the
  // averages but keep their odd/even slot; the batch quality uses the
  // remaining adjacent pairs.
  void ExcludeRange(std::size_t first, std::size_t count);

  bool HasResult() const { return odd_count_ > 0; }
  // Throws InsufficientDataError before the first usable batch.
  BandSnrReport Report() const;
  CombinedWaves Waves() const;

  int batches_used() const { return batches_used_; }
  int batches_discarded() const { return batches_discarded_; }
  int window_count() const { return window_count_; }
  const std::vector<PulseOnset>& onsets() const { return onsets_; }
  const ExtractConfig& config() const { return cfg_; }

 private:
  void Process(bool at_end);
  bool Search(bool at_end);
  bool Track();
  void AddOnset(PulseOnset onset);
  void EvaluatePending();
  bool Excluded(std::size_t first, std::size_t end) const;
  void Accumulate(const PulseBatch& batch, const std::array<bool, 4>& missing);
  void Trim();
  double At(std::size_t absolute) const { return buffer_[absolute - buffer_start_]; }
  std::span<const double> Range(std::size_t first, std::size_t count) const;

  ExtractConfig cfg_;
  std::vector<double> pulse_;
  std::vector<double> buffer_;
  std::size_t buffer_start_ = 0;
  std::size_t total_ = 0;

  bool locked_ = false;
  std::size_t search_block_ = 0;
  std::size_t search_from_ = 0;
  std::size_t last_onset_ = 0;
  bool awaiting_group_start_ = true;
  std::vector<PulseOnset> pending_;
  std::vector<PulseOnset> onsets_;
  std::vector<std::pair<std::size_t, std::size_t>> excluded_;  // [first, end)

  std::vector<double> odd_sum_;
  std::vector<double> even_sum_;
  int odd_count_ = 0;
  int even_count_ = 0;
  std::optional<std::size_t> train_origin_;  // first onset ever seen
  int batches_used_ = 0;
  int batches_discarded_ = 0;
  int window_count_ = 0;
};

// Conventional baseline: sync to a {1,1,1,-3} train, sum each group from
// delay_s on and run the odd/even band pipeline on the group sums.
BandSnrReport TeoaeExtract(const SampleBuffer& recording, const SampleBuffer& pulse,
                           double delay_s, ExtractConfig cfg = {});

}  // namespace oae
