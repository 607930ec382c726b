#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oae/extract.h"
#include "oae/screening.h"

namespace oae {

struct LabeledReport {
  std::optional<BandSnrReport> report;  // empty when the session produced nothing usable
  bool normal = true;                   // ground truth: emissions present
};

struct RocPoint {
  double threshold_db = 0.0;
  double sensitivity = 0.0;  // pass rate among normal ears
  double specificity = 0.0;  // non-pass rate among loss ears
};

struct RocResult {
  std::vector<RocPoint> points;  // ascending threshold
  double auc = 0.0;
  double optimal_threshold = 0.0;

  std::string ToCsv() const;
};

// -20 .. 40 dB in 1 dB steps.
std::vector<double> DefaultRocThresholds();

// Sweeps the per-band SNR threshold; every other decision rule stays at
// `base`. Needs at least one ear of each class.
RocResult ComputeRoc(std::span<const LabeledReport> ears, const Thresholds& base = {},
                     std::span<const double> thresholds = {});

}  // namespace oae
