#include "oae/ear_model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oae/errors.h"
#include "oae/kv_config.h"

namespace oae {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSpeedOfSound = 343.0;
// Ear-tip bore of ~7.5 mm diameter.
constexpr double kProbeBoreAreaM2 = 4.42e-5;

// Exponentially decaying echo train: taps every `spacing_s` from `first_s`
// to `last_s`, gain moving linearly in dB from first_gain to last_gain.
void AddEchoTrain(std::vector<ReflectionTap>& taps, double first_s, double last_s,
                  double spacing_s, double first_gain, double last_gain) {
  const int n = static_cast<int>(std::floor((last_s - first_s) / spacing_s + 1e-9)) + 1;
  const double first_db = 20.0 * std::log10(first_gain);
  const double last_db = 20.0 * std::log10(last_gain);
  for (int i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    taps.push_back({first_s + i * spacing_s, std::pow(10.0, (first_db + frac * (last_db - first_db)) / 20.0)});
  }
}

EarModel NormalAdult() {
  EarModel m;
  m.name = "normal_adult";
  m.reflection_taps = {{0.0, 0.8}, {0.00013, 0.15}};
  AddEchoTrain(m.reflection_taps, 0.0003, 0.0055, 0.00025, 0.06, 0.004);
  m.oae_bands = DefaultOaeBands();
  return m;
}

EarModel NormalInfant() {
  EarModel m;
  m.name = "normal_infant";
  m.reflection_taps = {{0.0, 0.8}, {0.0001, 0.12}};
  AddEchoTrain(m.reflection_taps, 0.0002, 0.0035, 0.00015, 0.07, 0.004);
  m.oae_bands = DefaultOaeBands(4.0);
  return m;
}

EarModel OutOfEar() {
  EarModel m;
  m.name = "out_of_ear";
  m.reflection_taps = {{0.0, 0.05}, {0.0002, 0.01}};
  m.oae_bands = DefaultOaeBands();
  for (auto& b : m.oae_bands) b.level_db_spl = kNegInf;
  m.low_freq_leak_db = 20.0;
  return m;
}

std::map<std::string, EarModel> BuildPresets() {
  std::map<std::string, EarModel> out;
  auto add = [&](EarModel m) { out.emplace(m.name, std::move(m)); };
  add(NormalAdult());
  add(NormalInfant());
  {
    EarModel m = WithHearingStatus(NormalAdult(), HearingStatus::kLoss);
    m.name = "hearing_loss";
    add(std::move(m));
  }
  {
    EarModel m = WithHearingStatus(NormalAdult(), HearingStatus::kFluid);
    m.name = "middle_ear_fluid";
    add(std::move(m));
  }
  {
    EarModel m = ClosedTubeModel(1.0);
    m.name = "closed_tube_1cc";
    add(std::move(m));
  }
  add(OutOfEar());
  for (const auto& [name, model] : out) model.Validate();
  return out;
}

}  // namespace

std::string_view ToString(HearingStatus status) {
  switch (status) {
    case HearingStatus::kNormal: return "normal";
    case HearingStatus::kLoss: return "loss";
    case HearingStatus::kFluid: return "fluid";
    case HearingStatus::kClosedTube: return "closed_tube";
  }
  return "normal";
}

HearingStatus ParseHearingStatus(std::string_view text) {
  if (text == "normal") return HearingStatus::kNormal;
  if (text == "loss") return HearingStatus::kLoss;
  if (text == "fluid") return HearingStatus::kFluid;
  if (text == "closed_tube") return HearingStatus::kClosedTube;
  throw ConfigError("unknown hearing_status '" + std::string(text) + "'");
}

void EarModel::Validate() const {
  for (const auto& tap : reflection_taps) {
    if (!(tap.delay_s >= 0.0) || !std::isfinite(tap.delay_s)) {
      throw ConfigError(name + ": reflection delays must be >= 0");
    }
    if (!(tap.gain > 0.0 && tap.gain <= 1.0)) {
      throw ConfigError(name + ": reflection gains must lie in (0, 1]");
    }
  }
  for (const auto& band : oae_bands) {
    if (!(band.latency_s > 0.0)) throw ConfigError(name + ": OAE latencies must be > 0");
    if (!(band.center_hz > 0.0)) throw ConfigError(name + ": OAE band centers must be > 0");
    if (std::isnan(band.level_db_spl) || band.level_db_spl == std::numeric_limits<double>::infinity()) {
      throw ConfigError(name + ": OAE level must be finite or -inf");
    }
  }
  auto sorted = oae_bands;
  std::sort(sorted.begin(), sorted.end(),
            [](const OaeBand& a, const OaeBand& b) { return a.center_hz < b.center_hz; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (!(sorted[i].latency_s < sorted[i - 1].latency_s)) {
      throw ConfigError(name + ": OAE latency must decrease with band frequency");
    }
  }
  if (hearing_status == HearingStatus::kLoss || hearing_status == HearingStatus::kClosedTube) {
    for (const auto& band : oae_bands) {
      if (band.level_db_spl != kNegInf) {
        throw ConfigError(name + ": a " + std::string(ToString(hearing_status)) +
                          " ear cannot carry emissions");
      }
    }
  }
  if (!(oae_compression_exponent > 0.0 && oae_compression_exponent <= 1.0)) {
    throw ConfigError(name + ": compression exponent must lie in (0, 1]");
  }
  if (std::isnan(noise_level_db_spl) || noise_level_db_spl == std::numeric_limits<double>::infinity()) {
    throw ConfigError(name + ": noise level must be finite or -inf");
  }
  if (!(low_freq_leak_db >= 0.0) || !std::isfinite(low_freq_leak_db)) {
    throw ConfigError(name + ": low_freq_leak_db must be a finite value >= 0");
  }
  if (!(oae_burst_s > 0.0)) throw ConfigError(name + ": oae_burst_s must be > 0");
}

bool EarModel::HasEmission() const {
  return std::any_of(oae_bands.begin(), oae_bands.end(),
                     [](const OaeBand& b) { return std::isfinite(b.level_db_spl); });
}

bool SpeakerModel::IsIdentity() const {
  if (harmonic_coeffs.empty() || harmonic_coeffs[0] != 1.0) return false;
  return std::all_of(harmonic_coeffs.begin() + 1, harmonic_coeffs.end(),
                     [](double c) { return c == 0.0; });
}

double SpeakerModel::Apply(double sample) const {
  if (IsIdentity()) return sample;
  const double x = sample / 32767.0;
  double power = x;
  double y = 0.0;
  for (double c : harmonic_coeffs) {
    y += c * power;
    power *= x;
  }
  return 32767.0 * y;
}

std::vector<OaeBand> DefaultOaeBands(double level_offset_db) {
  return {
      {1000.0, 26.0 + level_offset_db, 0.012},
      {1500.0, 28.0 + level_offset_db, 0.010},
      {2000.0, 29.0 + level_offset_db, 0.008},
      {3000.0, 28.0 + level_offset_db, 0.006},
      {4000.0, 26.0 + level_offset_db, 0.005},
  };
}

EarModel WithHearingStatus(EarModel model, HearingStatus status) {
  model.hearing_status = status;
  for (auto& band : model.oae_bands) {
    switch (status) {
      case HearingStatus::kNormal: break;
      case HearingStatus::kLoss:
      case HearingStatus::kClosedTube: band.level_db_spl = kNegInf; break;
      case HearingStatus::kFluid: band.level_db_spl -= kFluidAttenuationDb; break;
    }
  }
  return model;
}

EarModel ClosedTubeModel(double volume_cc, double noise_level_db_spl) {
  if (!(volume_cc > 0.0) || !std::isfinite(volume_cc)) {
    throw ConfigError("closed tube volume must be positive");
  }
  const double length_m = volume_cc * 1e-6 / kProbeBoreAreaM2;
  const double round_trip_s = 2.0 * length_m / kSpeedOfSound;
  EarModel m;
  m.name = "closed_tube";
  m.hearing_status = HearingStatus::kClosedTube;
  m.noise_level_db_spl = noise_level_db_spl;
  m.oae_bands = WithHearingStatus(EarModel{.oae_bands = DefaultOaeBands()},
                                  HearingStatus::kClosedTube).oae_bands;
  // Hard walls: every round trip returns 60% of the pressure.
  double gain = 0.8;
  for (int k = 0; gain > 1e-7; ++k) {
    m.reflection_taps.push_back({k * round_trip_s, gain});
    gain *= 0.6;
  }
  return m;
}

const std::map<std::string, EarModel>& Presets() {
  static const std::map<std::string, EarModel> presets = BuildPresets();
  return presets;
}

EarModel Preset(std::string_view name) {
  const auto& presets = Presets();
  const auto it = presets.find(std::string(name));
  if (it == presets.end()) throw ConfigError("unknown ear preset '" + std::string(name) + "'");
  return it->second;
}

std::string SerializeEarModel(const EarModel& model) {
  KeyValueDoc doc;
  doc.Add("name", model.name);
  doc.Add("hearing_status", std::string(ToString(model.hearing_status)));
  doc.Add("noise_level_db_spl", FormatDouble(model.noise_level_db_spl));
  doc.Add("oae_compression_exponent", FormatDouble(model.oae_compression_exponent));
  doc.Add("oae_burst_s", FormatDouble(model.oae_burst_s));
  doc.Add("low_freq_leak_db", FormatDouble(model.low_freq_leak_db));
  for (const auto& tap : model.reflection_taps) {
    doc.Add("tap", FormatDouble(tap.delay_s) + " " + FormatDouble(tap.gain));
  }
  for (const auto& band : model.oae_bands) {
    doc.Add("band", FormatDouble(band.center_hz) + " " + FormatDouble(band.level_db_spl) + " " +
                        FormatDouble(band.latency_s));
  }
  return "# ear model: tap = <delay_s> <gain>; band = <center_hz> <level_db_spl> <latency_s>\n" +
         doc.Serialize();
}

EarModel ParseEarModel(std::string_view text) {
  const KeyValueDoc doc = KeyValueDoc::Parse(text);
  EarModel m;
  m.name = doc.GetString("name", "custom");
  m.hearing_status = ParseHearingStatus(doc.GetString("hearing_status", "normal"));
  m.noise_level_db_spl = doc.GetDouble("noise_level_db_spl", m.noise_level_db_spl);
  m.oae_compression_exponent = doc.GetDouble("oae_compression_exponent", m.oae_compression_exponent);
  m.oae_burst_s = doc.GetDouble("oae_burst_s", m.oae_burst_s);
  m.low_freq_leak_db = doc.GetDouble("low_freq_leak_db", m.low_freq_leak_db);
  for (const auto& line : doc.GetAll("tap")) {
    const auto v = ParseDoubleList(line, "tap");
    if (v.size() != 2) throw ConfigError("tap expects '<delay_s> <gain>'");
    m.reflection_taps.push_back({v[0], v[1]});
  }
  for (const auto& line : doc.GetAll("band")) {
    const auto v = ParseDoubleList(line, "band");
    if (v.size() != 3) throw ConfigError("band expects '<center_hz> <level_db_spl> <latency_s>'");
    m.oae_bands.push_back({v[0], v[1], v[2]});
  }
  m.Validate();
  return m;
}

}  // namespace oae
