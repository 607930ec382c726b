#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oae/ear_sim.h"
#include "oae/errors.h"
#include "oae/extract.h"
#include "oae/signal.h"
#include "support/oracles.h"

namespace oae {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> Pulse() {
  const auto p = GenerateStimulusPulse({});
  return {p.samples().begin(), p.samples().end()};
}

PulseConfig Pulses(int count) {
  PulseConfig cfg;
  cfg.count = count;
  return cfg;
}

EarModel Noiseless(EarModel m) {
  m.noise_level_db_spl = kNegInf;
  return m;
}

EarModel TapsOnly() {
  auto m = WithHearingStatus(Preset("normal_adult"), HearingStatus::kLoss);
  return Noiseless(m);
}

BandSnrReport Extract(const SampleBuffer& rec, const ExtractConfig& cfg, std::size_t chunk = 0) {
  OaeExtractor ex(cfg, Pulse());
  const auto s = rec.samples();
  if (chunk == 0) chunk = s.size();
  for (std::size_t i = 0; i < s.size(); i += chunk) ex.Push(s.subspan(i, std::min(chunk, s.size() - i)));
  ex.Finish();
  return ex.Report();
}

ExtractConfig WithDelay(double t_d) {
  ExtractConfig cfg;
  cfg.reflection_delay_s = t_d;
  return cfg;
}

TEST(FindPulseStartsTest, SilenceHasNoOnsets) {
  const auto silence = SampleBuffer::Silence(15625, 1, 15625);
  EXPECT_TRUE(FindPulseStarts(silence, GenerateStimulusPulse({})).empty());
}

TEST(FindPulseStartsTest, FortyEightClicksInOneSecond) {
  const auto cfg = Pulses(48);
  auto stim = GeneratePulseTrain(cfg);
  stim.Append(SampleBuffer::Silence(15625 - stim.frame_count(), 1, 15625));
  const auto mic = SimulateEar(Preset("normal_adult"), {}, stim, 5);
  const auto onsets = FindPulseStarts(mic, GenerateStimulusPulse({}));
  ASSERT_EQ(onsets.size(), 48u);
  for (int k = 0; k < 48; ++k) {
    EXPECT_EQ(onsets[k].index, cfg.OnsetOf(k));
    EXPECT_EQ(onsets[k].polarity, 1);
    if (k > 0) EXPECT_NEAR(static_cast<double>(onsets[k].index - onsets[k - 1].index), 312.5, 1.0);
  }
}

TEST(FindPulseStartsTest, DetectsOnlyOnceTheProbeIsSealed) {
  const auto cfg = Pulses(100);
  const auto stim = GeneratePulseTrain(cfg);
  const auto outside = SimulateEar(Preset("out_of_ear"), {}, stim, 1);
  const auto inside = SimulateEar(Preset("normal_adult"), {}, stim, 2);
  const std::size_t splice = 7800;  // just under 0.5 s
  std::vector<double> mic(outside.samples().begin(), outside.samples().begin() + splice);
  mic.insert(mic.end(), inside.samples().begin() + splice, inside.samples().end());
  const auto onsets = FindPulseStarts(SampleBuffer::Mono(mic, 15625), GenerateStimulusPulse({}));
  ASSERT_FALSE(onsets.empty());
  EXPECT_EQ(onsets.front().index, cfg.OnsetOf(25));
  EXPECT_EQ(onsets.size(), 75u);
  // The open-air clicks alone never reach the prominence.
  const auto open_only = FindPulseStarts(outside, GenerateStimulusPulse({}));
  EXPECT_TRUE(open_only.empty());
}

TEST(FindPulseStartsTest, ProminenceMatchesDefinition) {
  const std::vector<double> v = {0, 5, 1, 3, 2, 9, 0};
  EXPECT_DOUBLE_EQ(PeakProminence(v, 1), 4.0);
  EXPECT_DOUBLE_EQ(PeakProminence(v, 3), 1.0);
  EXPECT_DOUBLE_EQ(PeakProminence(v, 5), 9.0);
  const std::vector<double> x = {0, 0, 1, 2, 0, 0};
  const std::vector<double> t = {1, 1};
  EXPECT_EQ(CorrelateTemplate(x, t), (std::vector<double>{0, 1, 3, 2, 0}));
}

class BatchTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_ = Pulses(8);
    mic_ = SimulateEar(Noiseless(Preset("normal_adult")), {}, GeneratePulseTrain(cfg_), 1);
    for (int k = 0; k < 8; ++k) onsets_.push_back({cfg_.OnsetOf(k), 1});
    // Room for the last full-gap window.
    mic_.Append(SampleBuffer::Silence(400, 1, 15625));
  }
  PulseConfig cfg_;
  SampleBuffer mic_;
  std::vector<PulseOnset> onsets_;
};

TEST_F(BatchTest, IdenticalResponsesScoreOne) {
  const auto batches = GateNoiseBatches(onsets_, mic_, WithDelay(0.006));
  ASSERT_EQ(batches.size(), 2u);
  for (const auto& b : batches) {
    EXPECT_NEAR(b.quality, 1.0, 1e-12);
    EXPECT_TRUE(b.usable);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(static_cast<double>(b.onsets[i] - b.onsets[i - 1]), 312.5, 1.0);
  }
}

TEST_F(BatchTest, NoiseBurstDiscardsBatch) {
  std::vector<double> noisy(mic_.samples().begin(), mic_.samples().end());
  std::mt19937_64 rng(9);
  std::normal_distribution<double> burst(0.0, 8000.0);
  for (std::size_t i = onsets_[6].index + 20; i < onsets_[6].index + 300; ++i) noisy[i] += burst(rng);
  const auto batches = GateNoiseBatches(onsets_, SampleBuffer::Mono(noisy, 15625), WithDelay(0.006));
  ASSERT_EQ(batches.size(), 2u);
  EXPECT_TRUE(batches[0].usable);
  EXPECT_LT(batches[1].quality, 0.95);
  EXPECT_FALSE(batches[1].usable);
}

TEST_F(BatchTest, PartialTrailingGroupDropped) {
  const std::span<const PulseOnset> seven(onsets_.data(), 7);
  EXPECT_EQ(GateNoiseBatches(seven, mic_, {}).size(), 1u);
  const std::span<const PulseOnset> three(onsets_.data(), 3);
  EXPECT_TRUE(GateNoiseBatches(three, mic_, {}).empty());
}

TEST_F(BatchTest, QualityIsScaleInvariant) {
  const auto batches = GateNoiseBatches(onsets_, mic_, WithDelay(0.006));
  std::array<std::vector<double>, 4> windows;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& w : windows) {
    w.resize(312);
    for (double& v : w) v = n(rng);
  }
  for (std::size_t i = 0; i < 312; ++i) windows[1][i] += windows[0][i];
  const double q = BatchQuality(windows);
  for (double a : {1e-3, 0.5, 7.0, 1e4}) {
    auto scaled = windows;
    for (auto& w : scaled) for (double& v : w) v *= a;
    EXPECT_NEAR(BatchQuality(scaled), q, 1e-12);
  }
  EXPECT_EQ(batches[0].responses[0].size(), WithDelay(0.006).response_length());
}

TEST_F(BatchTest, OddEvenOfIdenticalHalvesHasNoNoise) {
  const auto batches = GateNoiseBatches(onsets_, mic_, WithDelay(0.006));
  const auto waves = CombineOddEven(batches);
  EXPECT_EQ(waves.odd_count, 4);
  EXPECT_EQ(waves.even_count, 4);
  for (double v : waves.noise) EXPECT_EQ(v, 0.0);
  const auto report = BandSnr(waves.signal, waves.noise);
  for (const auto& b : report.bands) EXPECT_EQ(b.snr_db, 60.0);
}

TEST_F(BatchTest, MatchesBruteForceOracle) {
  std::vector<double> noisy(mic_.samples().begin(), mic_.samples().end());
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 30.0);
  for (double& v : noisy) v += n(rng);
  const auto rec = SampleBuffer::Mono(noisy, 15625);
  for (std::size_t count : {4u, 8u}) {
    const std::span<const PulseOnset> some(onsets_.data(), count);
    const auto batches = GateNoiseBatches(some, rec, WithDelay(0.006));
    std::vector<std::vector<double>> flat;
    for (const auto& b : batches) {
      ASSERT_TRUE(b.usable);
      for (const auto& r : b.responses) flat.push_back(r);
    }
    const auto expected = testing::BruteForceOddEven(flat);
    const auto waves = CombineOddEven(batches);
    EXPECT_EQ(waves.signal, expected.signal);
    EXPECT_EQ(waves.noise, expected.noise);
  }
}

TEST(CombineOddEvenTest, NoUsableBatchIsInsufficientData) {
  std::vector<PulseBatch> none(2);
  EXPECT_THROW(CombineOddEven(none), InsufficientDataError);
  EXPECT_THROW(CombineOddEven({}), InsufficientDataError);
}

TEST(CombineOddEvenTest, SilentEvenHalfGivesZeroSnr) {
  PulseBatch b;
  b.usable = true;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 100.0);
  std::vector<double> w(250);
  for (double& v : w) v = n(rng);
  b.responses = {w, std::vector<double>(250, 0.0), w, std::vector<double>(250, 0.0)};
  const auto waves = CombineOddEven(std::span(&b, 1));
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_DOUBLE_EQ(waves.signal[i], w[i] / 2);
    EXPECT_DOUBLE_EQ(waves.noise[i], w[i] / 2);
  }
  for (const auto& band : BandSnr(waves.signal, waves.noise).bands) EXPECT_NEAR(band.snr_db, 0.0, 1e-9);
}

TEST(BandSnrTest, CapAndEqualWaves) {
  std::vector<double> w(250);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 50.0 * std::sin(0.3 * i) + 20.0 * std::cos(1.7 * i);
  const std::vector<double> zero(w.size(), 0.0);
  const auto capped = BandSnr(w, zero);
  for (const auto& b : capped.bands) EXPECT_EQ(b.snr_db, 60.0);
  for (const auto& b : BandSnr(w, w).bands) EXPECT_EQ(b.snr_db, 0.0);
  const auto floor = BandSnr(zero, w);
  for (const auto& b : floor.bands) EXPECT_EQ(b.snr_db, -60.0);
  for (const auto& b : capped.bands) {
    EXPECT_NEAR(b.snr_db, std::min(60.0, b.signal_db_spl - b.noise_db_spl), 1e-12);
  }
}

TEST(BandSnrTest, ToneLevelIsCalibrated) {
  // A 2 kHz sine of amplitude A on an exact bin reads back as A.
  const std::size_t n = 1024;
  const double f = 2000.0 * 1024 / 15625;  // not integral; use the nearest bin
  const double bin = std::round(f) * 15625.0 / n;
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 300.0 * std::cos(2 * std::numbers::pi * bin * i / 15625.0);
  const auto r = BandSnr(w, std::vector<double>(n, 1.0));
  const Calibration cal;
  // Mean over the band's bins dilutes the single tone bin.
  int bins = 0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double fk = k * 15625.0 / n;
    if (fk >= 1750.0 && fk < 2500.0) ++bins;
  }
  EXPECT_NEAR(r.bands[2].signal_db_spl, cal.LevelFromPeak(300.0) - 10 * std::log10(bins), 1e-6);
}

TEST(BandSnrTest, RejectsBadInputs) {
  std::vector<double> w(10, 1.0), v(11, 1.0);
  EXPECT_THROW(BandSnr(w, v), ConfigError);
  ExtractConfig cfg;
  cfg.snr_cap_db = std::numeric_limits<double>::infinity();
  EXPECT_THROW(BandSnr(w, w, cfg), ConfigError);
  cfg.snr_cap_db = -5;
  EXPECT_THROW(BandSnr(w, w, cfg), ConfigError);
}

TEST(ExtractConfigTest, WindowGeometry) {
  const ExtractConfig cfg = WithDelay(0.012);
  EXPECT_EQ(cfg.period_samples(), 312u);
  EXPECT_EQ(cfg.response_begin(), 203u);  // round(13 ms * fs)
  EXPECT_EQ(cfg.response_end(), 297u);
  EXPECT_EQ(cfg.sync_offset_samples(), 320u);
  EXPECT_EQ(cfg.refine_samples(), 16u);
  auto bad = WithDelay(0.019);
  EXPECT_THROW(bad.Validate(), ConfigError);
}

TEST(ExtractorTest, SingleBandEmissionShowsUpOnlyInItsBand) {
  EarModel m;
  m.name = "one_band";
  m.reflection_taps = {{0.0, 0.8}};
  m.oae_bands = {{2125.0, 20.0, 0.008}};
  const auto mic = SimulateEar(m, {}, GeneratePulseTrain(Pulses(3300)), 21);
  const auto r = Extract(mic, WithDelay(0.002));
  EXPECT_GT(r.bands[2].snr_db, 15.0);
  for (std::size_t b : {0u, 1u, 3u, 4u}) EXPECT_LT(std::abs(r.bands[b].snr_db), 6.0) << kBands[b].key;
}

TEST(ExtractorTest, NormalAdultPassesFourBands) {
  const auto mic = SimulateEar(Preset("normal_adult"), {}, GeneratePulseTrain(Pulses(3300)), 8);
  const auto r = Extract(mic, WithDelay(0.0055));
  int strong = 0;
  for (const auto& b : r.bands) strong += b.snr_db >= 8.0;
  EXPECT_GE(strong, 4);
  EXPECT_EQ(r.batches_used + r.batches_discarded, 825);
}

TEST(ExtractorTest, ChunkingDoesNotChangeTheResult) {
  const auto mic = SimulateEar(Preset("normal_adult"), {}, GeneratePulseTrain(Pulses(260)), 4);
  const auto whole = Extract(mic, WithDelay(0.0055));
  for (std::size_t chunk : {1u, 7u, 313u, 1000u, 15625u}) {
    const auto part = Extract(mic, WithDelay(0.0055), chunk);
    EXPECT_EQ(part.batches_used, whole.batches_used) << chunk;
    for (std::size_t b = 0; b < kBands.size(); ++b) {
      EXPECT_NEAR(part.bands[b].signal_db_spl, whole.bands[b].signal_db_spl, 1e-9);
      EXPECT_NEAR(part.bands[b].noise_db_spl, whole.bands[b].noise_db_spl, 1e-9);
      EXPECT_NEAR(part.bands[b].snr_db, whole.bands[b].snr_db, 1e-9);
    }
  }
}

TEST(ExtractorTest, ReportBeforeDataThrows) {
  OaeExtractor ex({}, Pulse());
  EXPECT_FALSE(ex.HasResult());
  EXPECT_THROW(ex.Report(), InsufficientDataError);
  EXPECT_THROW(OaeExtractor({}, {}), ConfigError);
}

TEST(TeoaeTest, LinearEarCancelsCompletely) {
  const auto mic = SimulateEar(TapsOnly(), {}, GenerateTeoaeTrain(Pulses(400)), 1);
  const auto r = TeoaeExtract(mic, GenerateStimulusPulse({}), 0.0025);
  EXPECT_GT(r.batches_used, 90);
  for (const auto& b : r.bands) EXPECT_LT(b.signal_db_spl, -60.0);
}

TEST(TeoaeTest, CompressiveEmissionLeavesResidue) {
  const auto mic = SimulateEar(Noiseless(Preset("normal_adult")), {}, GenerateTeoaeTrain(Pulses(400)), 1);
  const auto r = TeoaeExtract(mic, GenerateStimulusPulse({}), 0.0025);
  for (const auto& b : r.bands) EXPECT_GT(b.signal_db_spl, 0.0);
}

TEST(TeoaeTest, OddGroupCountBarelyMoves) {
  // Groups open after the first -3 click, so 3304 clicks give 825 groups.
  const auto full = SimulateEar(Preset("normal_adult"), {}, GenerateTeoaeTrain(Pulses(3304)), 6);
  const auto r825 = TeoaeExtract(full, GenerateStimulusPulse({}), 0.0025);
  // Cut the recording just before the last group.
  const auto cut = full.Slice(0, Pulses(3304).OnsetOf(3300));
  const auto r824 = TeoaeExtract(cut, GenerateStimulusPulse({}), 0.0025);
  EXPECT_EQ(r825.pulses_used, 825);
  EXPECT_EQ(r824.pulses_used, 824);
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    EXPECT_LT(std::abs(r825.bands[b].snr_db - r824.bands[b].snr_db), 0.5) << kBands[b].key;
  }
}

double MeanSnr(const BandSnrReport& r) {
  double s = 0;
  for (const auto& b : r.bands) s += b.snr_db;
  return s / r.bands.size();
}

double MeanSignal(const BandSnrReport& r) {
  double s = 0;
  for (const auto& b : r.bands) s += b.signal_db_spl;
  return s / r.bands.size();
}

// A nonlinear driver breaks the {1,1,1,-3} cancellation, so residual
// reflections blur the normal/loss contrast that odd/even keeps.
TEST(TeoaeTest, NonlinearSpeakerDegradesSeparation) {
  const auto speaker = SpeakerModel::Nonlinear();
  const auto pulse = GenerateStimulusPulse({});
  auto run = [&](const char* preset, bool teoae) {
    const auto stim = teoae ? GenerateTeoaeTrain(Pulses(3300)) : GeneratePulseTrain(Pulses(3300));
    const auto mic = SimulateEar(Preset(preset), speaker, stim, 17);
    return teoae ? TeoaeExtract(mic, pulse, 0.0025) : Extract(mic, WithDelay(0.0055));
  };
  const double odd_even = MeanSnr(run("normal_adult", false)) - MeanSnr(run("hearing_loss", false));
  const double teoae = MeanSnr(run("normal_adult", true)) - MeanSnr(run("hearing_loss", true));
  EXPECT_GT(odd_even, teoae + 3.0);
  // Uncancelled reflections raise the TEOAE reading of an ear with no emission.
  EXPECT_GT(MeanSignal(run("hearing_loss", true)), MeanSignal(run("hearing_loss", false)) + 3.0);
}

}  // namespace
}  // namespace oae
