#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "oae/ear_sim.h"
#include "oae/errors.h"
#include "oae/fmcw.h"
#include "oae/signal.h"
#include "support/oracles.h"

namespace oae {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

SampleBuffer Sum(const SampleBuffer& a, const SampleBuffer& b) {
  std::vector<double> out(a.samples().begin(), a.samples().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.samples()[i];
  return SampleBuffer::Mono(std::move(out), a.sample_rate_hz());
}

std::size_t ArgMaxFrom(const DelaySpectrum& s, double min_delay_s) {
  std::size_t best = 0;
  double best_db = kNegInf;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.bin_delays_s[k] < min_delay_s) continue;
    if (s.bin_power_db[k] > best_db) {
      best_db = s.bin_power_db[k];
      best = k;
    }
  }
  return best;
}

DelaySpectrum Flat(double db) {
  DelaySpectrum s;
  s.resolution_s = 5e-5;
  for (int k = 0; k < 262; ++k) {
    s.bin_delays_s.push_back(k * 31250.0 / 8192.0 * 0.2 / 10000.0);
    s.bin_power_db.push_back(k == 0 ? 0.0 : db);
  }
  return s;
}

EarModel TapsOnly(std::vector<ReflectionTap> taps) {
  EarModel m;
  m.name = "taps";
  m.reflection_taps = std::move(taps);
  m.hearing_status = HearingStatus::kLoss;
  m.noise_level_db_spl = kNegInf;
  return m;
}

TEST(DechirpTest, BinGeometry) {
  const ChirpConfig cfg;
  const auto tx = GenerateFmcwChirp(cfg);
  const auto s = Dechirp(tx, tx, cfg);
  EXPECT_DOUBLE_EQ(s.resolution_s, 1.0 / (2.0 * 10000.0));
  ASSERT_GT(s.size(), 2u);
  EXPECT_EQ(s.bin_delays_s[0], 0.0);
  // fs / n_fft * T / B with n_fft = 8192.
  EXPECT_NEAR(s.bin_delays_s[1], 31250.0 / 8192.0 * 0.2 / 10000.0, 1e-15);
  EXPECT_LE(s.bin_delays_s.back(), kMaxReflectionDelayS + 1e-12);
  EXPECT_GT(s.bin_delays_s.back() + s.bin_delays_s[1], kMaxReflectionDelayS);
  EXPECT_TRUE(std::is_sorted(s.bin_delays_s.begin(), s.bin_delays_s.end()));
}

TEST(DechirpTest, LoopbackPeaksAtBinZero) {
  const ChirpConfig cfg;
  const auto tx = GenerateFmcwChirp(cfg);
  const auto s = Dechirp(tx, tx, cfg);
  EXPECT_NEAR(s.bin_power_db[0], 0.0, 1e-9);
  EXPECT_EQ(ArgMaxFrom(s, 0.0), 0u);
  // Outside the window main lobe every bin is far down.
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.bin_delays_s[k] > 0.0005) ASSERT_LT(s.bin_power_db[k], -40.0) << k;
  }
}

TEST(DechirpTest, RejectsMismatchedInputs) {
  const ChirpConfig cfg;
  const auto tx = GenerateFmcwChirp(cfg);
  EXPECT_THROW(Dechirp(tx, tx.Slice(0, 6000), cfg), ConfigError);
  const auto slow = SampleBuffer::Mono(std::vector<double>(6250, 0.0), 15625);
  EXPECT_THROW(Dechirp(tx, slow, cfg), ConfigError);
}

TEST(DechirpTest, HalfGainEchoAtTenMilliseconds) {
  const ChirpConfig cfg;
  const auto tx = GenerateFmcwChirp(cfg);
  const auto rx = testing::DelayedChirp(cfg, 0.010, 0.5);
  const auto s = Dechirp(tx, rx, cfg);
  const double bin_hz = 0.010 * 10000.0 / 0.2;  // beat frequency
  EXPECT_DOUBLE_EQ(bin_hz, 500.0);
  const std::size_t peak = ArgMaxFrom(s, 0.0);
  EXPECT_NEAR(s.bin_delays_s[peak], 0.010, s.bin_delays_s[1] / 2 + 1e-12);
}

class EchoDelayTest : public ::testing::TestWithParam<double> {};

TEST_P(EchoDelayTest, ArgMaxMapsBackToDelay) {
  const ChirpConfig cfg;
  const double tau = GetParam();
  const auto tx = GenerateFmcwChirp(cfg);
  const auto s = Dechirp(tx, Sum(tx, testing::DelayedChirp(cfg, tau, 0.1)), cfg);
  EXPECT_NEAR(s.bin_delays_s[ArgMaxFrom(s, 0.0006)], tau, s.resolution_s + s.bin_delays_s[1] / 2);
  EXPECT_NEAR(StrongestEchoDelay(s, 0.0006), tau, s.resolution_s + s.bin_delays_s[1] / 2);
}

INSTANTIATE_TEST_SUITE_P(Delays, EchoDelayTest, ::testing::Values(0.001, 0.003, 0.005, 0.008, 0.012));

TEST(EstimateTest, SyntheticQuietSpectraGiveFirstBin) {
  const std::array<DelaySpectrum, 3> spectra = {Flat(-80), Flat(-80), Flat(-80)};
  const auto est = EstimateReflectionDelay(spectra);
  EXPECT_FALSE(est.used_default);
  EXPECT_DOUBLE_EQ(est.t_d_s, spectra[0].bin_delays_s[1]);
}

TEST(EstimateTest, LoudSpectraFallBackToDefault) {
  const std::array<DelaySpectrum, 3> spectra = {Flat(-30), Flat(-30), Flat(-30)};
  const auto est = EstimateReflectionDelay(spectra);
  EXPECT_TRUE(est.used_default);
  EXPECT_DOUBLE_EQ(est.t_d_s, 0.012);
}

TEST(EstimateTest, OneLoudChirpContributesDefault) {
  const std::array<DelaySpectrum, 3> spectra = {Flat(-80), Flat(-30), Flat(-80)};
  const auto est = EstimateReflectionDelay(spectra);
  EXPECT_FALSE(est.used_default);
  EXPECT_TRUE(est.per_chirp_default[1]);
  EXPECT_NEAR(est.t_d_s, (2 * spectra[0].bin_delays_s[1] + 0.012) / 3, 1e-15);
}

TEST(EstimateTest, IsolatedQuietBinDoesNotEndTheSearch) {
  auto s = Flat(-80);
  for (std::size_t k = 1; k < 50; ++k) s.bin_power_db[k] = -40;
  s.bin_power_db[10] = -90;
  EXPECT_DOUBLE_EQ(EstimateChirpDelay(s, {}), s.bin_delays_s[50]);
}

TEST(EstimateTest, RequiresExactlyThreeSpectra) {
  const std::array<DelaySpectrum, 2> two = {Flat(-80), Flat(-80)};
  EXPECT_THROW(EstimateReflectionDelay(two), ConfigError);
  const std::array<DelaySpectrum, 4> four = {Flat(-80), Flat(-80), Flat(-80), Flat(-80)};
  EXPECT_THROW(EstimateReflectionDelay(four), ConfigError);
}

TEST(EstimateTest, PermutationInvariant) {
  auto a = Flat(-80), b = Flat(-80), c = Flat(-30);
  for (std::size_t k = 1; k < 40; ++k) a.bin_power_db[k] = -45;
  std::array<DelaySpectrum, 3> order = {a, b, c};
  const double reference = EstimateReflectionDelay(order).t_d_s;
  std::array<int, 3> idx = {0, 1, 2};
  const std::array<DelaySpectrum, 3> base = {a, b, c};
  do {
    order = {base[idx[0]], base[idx[1]], base[idx[2]]};
    EXPECT_DOUBLE_EQ(EstimateReflectionDelay(order).t_d_s, reference);
  } while (std::next_permutation(idx.begin(), idx.end()));
}

// Last tap at 6 ms: the estimate lands at the tap plus the window's main-lobe tail.
TEST(EstimateTest, LastTapAtSixMilliseconds) {
  const ChirpConfig cfg;
  const auto model = TapsOnly({{0.0, 0.8}, {0.002, 0.1}, {0.006, 0.05}});
  const auto rx = SimulateEar(model, {}, GenerateRangingSequence(cfg), 1);
  const auto est = EstimateFromRanging(rx, cfg);
  EXPECT_FALSE(est.used_default);
  EXPECT_GE(est.t_d_s, 0.006);
  EXPECT_LE(est.t_d_s - 0.006, 0.00045);
}

TEST(EstimateTest, NormalAdultReflectionsReachFiveToTenMilliseconds) {
  const ChirpConfig cfg;
  const auto rx = SimulateEar(Preset("normal_adult"), {}, GenerateRangingSequence(cfg), 11);
  std::vector<DelaySpectrum> spectra;
  const auto est = EstimateFromRanging(rx, cfg, {}, &spectra);
  ASSERT_EQ(spectra.size(), 3u);
  EXPECT_GE(est.t_d_s, 0.005);
  EXPECT_LE(est.t_d_s, 0.010);
  for (const auto& s : spectra) EXPECT_EQ(ArgMaxFrom(s, 0.0), 0u);
}

TEST(EstimateTest, GainInvariance) {
  const ChirpConfig cfg;
  const auto tx = GenerateFmcwChirp(cfg);
  const auto rx = SimulateEar(TapsOnly({{0.0, 0.8}, {0.004, 0.05}}), {}, tx, 1);
  const auto base = Dechirp(tx, rx, cfg);
  for (double a : {0.01, 0.3, 1.0}) {
    std::vector<double> scaled(rx.samples().begin(), rx.samples().end());
    for (double& v : scaled) v *= a;
    const auto s = Dechirp(tx, SampleBuffer::Mono(scaled, cfg.sample_rate_hz), cfg);
    EXPECT_EQ(ArgMaxFrom(s, 0.001), ArgMaxFrom(base, 0.001));
    EXPECT_DOUBLE_EQ(EstimateChirpDelay(s, {}), EstimateChirpDelay(base, {}));
    EXPECT_NEAR(s.bin_power_db[0] - base.bin_power_db[0], 20 * std::log10(a), 1e-9);
  }
}

TEST(EstimateTest, LaterEchoNeverShortensDelay) {
  const ChirpConfig cfg;
  const auto seq = GenerateRangingSequence(cfg);
  std::vector<ReflectionTap> taps = {{0.0, 0.8}, {0.003, 0.05}};
  double previous = EstimateFromRanging(SimulateEar(TapsOnly(taps), {}, seq, 1), cfg).t_d_s;
  for (double extra : {0.005, 0.009, 0.014}) {
    taps.push_back({extra, 0.02});
    const double next = EstimateFromRanging(SimulateEar(TapsOnly(taps), {}, seq, 1), cfg).t_d_s;
    EXPECT_GE(next, previous) << extra;
    previous = next;
  }
}

TEST(RangingTest, SequenceLayout) {
  const ChirpConfig cfg;
  const auto seq = GenerateRangingSequence(cfg);
  EXPECT_EQ(seq.frame_count(), 3u * (6250u + 1563u));  // gap = round(1562.5)
  const auto chirp = GenerateFmcwChirp(cfg);
  const auto parts = SplitRangingResponse(seq, cfg);
  ASSERT_EQ(parts.size(), 3u);
  for (const auto& p : parts) EXPECT_EQ(p, chirp);
}

TEST(DelaySpectrumTest, CsvHasHeaderAndRows) {
  const auto s = Flat(-60);
  const auto csv = s.ToCsv();
  EXPECT_EQ(csv.rfind("delay_s,power_db\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), s.size() + 1);
}

TEST(EstimatorConfigTest, Validation) {
  DelayEstimatorConfig cfg;
  cfg.threshold_db = -1;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.default_delay_s = 0.03;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.smoothing_bins = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

}  // namespace
}  // namespace oae
