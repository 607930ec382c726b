#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace oae {

enum class HearingStatus { kNormal, kLoss, kFluid, kClosedTube };

std::string_view ToString(HearingStatus status);
HearingStatus ParseHearingStatus(std::string_view text);

// One linear echo path: the driven stimulus delayed by delay_s and scaled.
struct ReflectionTap {
  double delay_s = 0.0;
  double gain = 1.0;
};

// Emission returned by the cochlea for one clinical band.
struct OaeBand {
  double center_hz = 1000.0;
  double level_db_spl = 20.0;  // peak-equivalent burst level at the default click level
  double latency_s = 0.012;
};

inline constexpr double kFluidAttenuationDb = 35.0;

struct EarModel {
  std::string name = "custom";
  std::vector<ReflectionTap> reflection_taps;
  std::vector<OaeBand> oae_bands;
  double oae_compression_exponent = 0.3;
  HearingStatus hearing_status = HearingStatus::kNormal;
  double noise_level_db_spl = 40.0;
  // Attenuation below ~300 Hz when the probe is not sealed in a canal.
  double low_freq_leak_db = 0.0;
  double oae_burst_s = 0.005;

  // Throws ConfigError when an invariant is violated.
  void Validate() const;
  bool HasEmission() const;
};

// Polynomial speaker nonlinearity on full-scale-normalized samples:
// y = 32767 * sum_k c_k * (x / 32767)^k, k = 1.. (coefficient i is order i+1).
struct SpeakerModel {
  std::vector<double> harmonic_coeffs{1.0};

  static SpeakerModel Identity() { return {}; }
  // Mild low-cost driver used for protocol comparisons.
  static SpeakerModel Nonlinear() { return {{1.0, 0.05, 0.1}}; }
  // Strong cubic term that reproduces the dual-tone intermodulation problem.
  static SpeakerModel StrongCubic() { return {{1.0, 0.0, 30.0}}; }

  bool IsIdentity() const;
  double Apply(double sample) const;
};

// Healthy-cochlea band set: 1/1.5/2/3/4 kHz with latencies 12/10/8/6/5 ms.
std::vector<OaeBand> DefaultOaeBands(double level_offset_db = 0.0);

// Returns a copy with emissions adjusted for `status` (loss/closed tube: none,
// fluid: attenuated by kFluidAttenuationDb).
EarModel WithHearingStatus(EarModel model, HearingStatus status);

// Closed cavity of `volume_cc`: dense decaying round-trip echoes, no emission.
EarModel ClosedTubeModel(double volume_cc, double noise_level_db_spl = 40.0);

// normal_adult, normal_infant, hearing_loss, middle_ear_fluid,
// closed_tube_1cc, out_of_ear.
const std::map<std::string, EarModel>& Presets();
EarModel Preset(std::string_view name);

std::string SerializeEarModel(const EarModel& model);
EarModel ParseEarModel(std::string_view text);

}  // namespace oae
