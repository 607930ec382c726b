#pragma once

#include <nlohmann/json.hpp>

#include "oae/extract.h"
#include "oae/roc.h"
#include "oae/screening.h"
#include "oae/session.h"

namespace oae {

// {"bands": {"1000": {signal_db_spl, noise_db_spl, snr_db}, ...},
//  "batches_used", "batches_discarded", "window_count"}
nlohmann::json BandReportToJson(const BandSnrReport& report);

// {outcome, bands: {freq: {signal_db_spl, noise_db_spl, snr_db, passed}},
//  t_d_ms, duration_s, batches_used, batches_discarded, probe_fit}
// Band values are null when no batch was usable.
nlohmann::json VerdictToJson(const ScreeningVerdict& verdict);

// One progress line: {window, elapsed_s, batches_used, batches_discarded, bands}.
nlohmann::json ProgressToJson(const SessionEvent& event);

nlohmann::json RocToJson(const RocResult& roc);

}  // namespace oae
