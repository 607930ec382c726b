#include "oae/calibration.h"

#include <cmath>
#include <limits>

#include "oae/errors.h"

namespace oae {

void Calibration::Validate() const {
  if (!std::isfinite(full_scale_db_spl)) {
    throw ConfigError("calibration full_scale_db_spl must be finite");
  }
}

double Calibration::PeakAmplitude(double db_spl) const {
  if (std::isinf(db_spl) && db_spl < 0) return 0.0;
  return kFullScale * std::pow(10.0, (db_spl - full_scale_db_spl) / 20.0);
}

double Calibration::LevelFromPeak(double amplitude) const {
  if (amplitude <= 0.0) return -std::numeric_limits<double>::infinity();
  return full_scale_db_spl + 20.0 * std::log10(amplitude / kFullScale);
}

double Calibration::NoiseRms(double db_spl) const {
  return PeakAmplitude(db_spl) / std::sqrt(2.0);
}

}  // namespace oae
