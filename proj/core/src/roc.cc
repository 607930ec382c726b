#include "oae/roc.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oae/errors.h"
#include "oae/kv_config.h"

namespace oae {

std::vector<double> DefaultRocThresholds() {
  std::vector<double> out;
  for (int t = -20; t <= 40; ++t) out.push_back(t);
  return out;
}

std::string RocResult::ToCsv() const {
  std::ostringstream os;
  os << "threshold_db,sensitivity,specificity\n";
  for (const auto& p : points) {
    os << FormatDouble(p.threshold_db) << ',' << FormatDouble(p.sensitivity) << ','
       << FormatDouble(p.specificity) << '\n';
  }
  return os.str();
}

RocResult ComputeRoc(std::span<const LabeledReport> ears, const Thresholds& base,
                     std::span<const double> thresholds) {
  const std::vector<double> defaults = DefaultRocThresholds();
  if (thresholds.empty()) thresholds = defaults;
  std::vector<double> sweep(thresholds.begin(), thresholds.end());
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());

  const auto normals = std::count_if(ears.begin(), ears.end(), [](const auto& e) { return e.normal; });
  const auto losses = static_cast<std::ptrdiff_t>(ears.size()) - normals;
  if (normals == 0 || losses == 0) throw ConfigError("ROC needs at least one ear of each class");

  RocResult result;
  for (double t : sweep) {
    Thresholds th = base;
    th.snr_db = t;
    int true_pass = 0, true_refer = 0;
    for (const auto& ear : ears) {
      const bool pass = ear.report && Decide(*ear.report, th).outcome == Outcome::kPass;
      if (ear.normal && pass) ++true_pass;
      if (!ear.normal && !pass) ++true_refer;
    }
    result.points.push_back({t, static_cast<double>(true_pass) / normals,
                             static_cast<double>(true_refer) / losses});
  }

  std::vector<std::pair<double, double>> curve{{0.0, 0.0}, {1.0, 1.0}};
  for (const auto& p : result.points) curve.emplace_back(1.0 - p.specificity, p.sensitivity);
  std::sort(curve.begin(), curve.end());
  for (std::size_t i = 1; i < curve.size(); ++i) {
    result.auc += (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second) / 2.0;
  }

  double best = -1.0;
  for (const auto& p : result.points) best = std::max(best, p.sensitivity + p.specificity);
  std::vector<double> best_thresholds;
  for (const auto& p : result.points) {
    if (p.sensitivity + p.specificity >= best - 1e-12) best_thresholds.push_back(p.threshold_db);
  }
  const std::size_t n = best_thresholds.size();
  result.optimal_threshold =
      n % 2 == 1 ? best_thresholds[n / 2] : 0.5 * (best_thresholds[n / 2 - 1] + best_thresholds[n / 2]);
  return result;
}

}  // namespace oae
