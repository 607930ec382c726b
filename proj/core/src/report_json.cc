#include "oae/report_json.h"

#include <algorithm>

namespace oae {
namespace {

nlohmann::json BandsToJson(const BandSnrReport& report, const ScreeningVerdict* verdict) {
  nlohmann::json bands = nlohmann::json::object();
  for (std::size_t b = 0; b < kBands.size(); ++b) {
    const auto& r = report.bands[b];
    nlohmann::json band = {
        {"signal_db_spl", r.signal_db_spl}, {"noise_db_spl", r.noise_db_spl}, {"snr_db", r.snr_db}};
    if (verdict) {
      const auto& passed = verdict->bands_passed;
      band["passed"] = std::find(passed.begin(), passed.end(), kBands[b].key) != passed.end();
    }
    bands[std::string(kBands[b].key)] = std::move(band);
  }
  return bands;
}

}  // namespace

nlohmann::json BandReportToJson(const BandSnrReport& report) {
  return {{"bands", BandsToJson(report, nullptr)},
          {"batches_used", report.batches_used},
          {"batches_discarded", report.batches_discarded},
          {"window_count", report.window_count}};
}

nlohmann::json VerdictToJson(const ScreeningVerdict& verdict) {
  nlohmann::json bands = nlohmann::json::object();
  if (verdict.report) {
    bands = BandsToJson(*verdict.report, &verdict);
  } else {
    for (const auto& def : kBands) {
      bands[std::string(def.key)] = {{"signal_db_spl", nullptr},
                                     {"noise_db_spl", nullptr},
                                     {"snr_db", nullptr},
                                     {"passed", false}};
    }
  }
  return {{"outcome", std::string(ToString(verdict.outcome))},
          {"bands", std::move(bands)},
          {"t_d_ms", verdict.t_d_used_s * 1e3},
          {"duration_s", verdict.duration_s},
          {"batches_used", verdict.batches_used},
          {"batches_discarded", verdict.batches_discarded},
          {"probe_fit", verdict.probe_fit}};
}

nlohmann::json ProgressToJson(const SessionEvent& event) {
  return {{"window", event.window_index},
          {"elapsed_s", event.elapsed_s},
          {"batches_used", event.batches_used},
          {"batches_discarded", event.batches_discarded},
          {"bands", event.report ? BandsToJson(*event.report, nullptr) : nlohmann::json(nullptr)}};
}

nlohmann::json RocToJson(const RocResult& roc) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : roc.points) {
    points.push_back({{"threshold_db", p.threshold_db},
                      {"sensitivity", p.sensitivity},
                      {"specificity", p.specificity}});
  }
  return {{"auc", roc.auc}, {"optimal_threshold_db", roc.optimal_threshold}, {"points", std::move(points)}};
}

}  // namespace oae
