#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oae/ear_model.h"
#include "oae/roc.h"
#include "oae/session.h"

namespace oae {

struct CohortEntry {
  std::string preset;  // ear model reference
  bool normal = true;  // ground truth
  std::uint64_t seed = 0;
  double noise_db_spl = 40.0;
  double duration_s = 66.0;  // length of the pulse train
  double oae_offset_db = 0.0;  // per-ear emission strength relative to the preset
};

struct CohortSpec {
  std::vector<CohortEntry> entries;

  void Validate() const;
  // One `ear = <preset> <normal|loss> <seed> <noise_db_spl> <duration_s> <oae_offset_db>` line per entry.
  std::string Serialize() const;
  static CohortSpec Parse(std::string_view text);

  // 50 synthetic ears: 44 with emissions, 6 without (hearing loss or fluid).
  static CohortSpec Default();
};

EarModel CohortEarModel(const CohortEntry& entry);

// Screens every ear with `protocol` (fit check bypassed). Sessions run on up
// to `threads` worker threads; 0 picks the hardware concurrency.
std::vector<LabeledReport> EvaluateCohort(const CohortSpec& cohort, Protocol protocol,
                                          const SessionConfig& base, const SpeakerModel& speaker,
                                          unsigned threads = 0);

}  // namespace oae
