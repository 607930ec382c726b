#include "oae/cohort.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "oae/errors.h"
#include "oae/kv_config.h"

namespace oae {
namespace {

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

}  // namespace

void CohortSpec::Validate() const {
  bool any_normal = false, any_loss = false;
  std::set<std::uint64_t> seeds;
  for (const auto& e : entries) {
    Preset(e.preset);
    if (!seeds.insert(e.seed).second) throw ConfigError("cohort seeds must be unique");
    if (!(e.duration_s > 0.0)) throw ConfigError("cohort durations must be > 0");
    if (std::isnan(e.noise_db_spl) || std::isnan(e.oae_offset_db)) {
      throw ConfigError("cohort levels must not be NaN");
    }
    (e.normal ? any_normal : any_loss) = true;
  }
  if (!any_normal || !any_loss) throw ConfigError("cohort needs normal and loss ears");
}

std::string CohortSpec::Serialize() const {
  KeyValueDoc doc;
  for (const auto& e : entries) {
    doc.Add("ear", e.preset + " " + (e.normal ? "normal" : "loss") + " " + std::to_string(e.seed) +
                       " " + FormatDouble(e.noise_db_spl) + " " + FormatDouble(e.duration_s) + " " +
                       FormatDouble(e.oae_offset_db));
  }
  return "# ear = <preset> <normal|loss> <seed> <noise_db_spl> <duration_s> <oae_offset_db>\n" +
         doc.Serialize();
}

CohortSpec CohortSpec::Parse(std::string_view text) {
  const KeyValueDoc doc = KeyValueDoc::Parse(text);
  CohortSpec spec;
  for (const auto& [key, value] : doc.entries()) {
    if (key != "ear") throw ConfigError("unknown cohort key '" + key + "'");
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos < value.size()) {
      const std::size_t start = value.find_first_not_of(" \t", pos);
      if (start == std::string::npos) break;
      const std::size_t end = value.find_first_of(" \t", start);
      fields.push_back(value.substr(start, end - start));
      pos = end == std::string::npos ? value.size() : end;
    }
    if (fields.size() != 6) throw ConfigError("cohort entry needs 6 fields: '" + value + "'");
    CohortEntry e;
    e.preset = fields[0];
    if (fields[1] != "normal" && fields[1] != "loss") throw ConfigError("ground truth must be normal or loss");
    e.normal = fields[1] == "normal";
    e.seed = static_cast<std::uint64_t>(ParseDouble(fields[2], "seed"));
    e.noise_db_spl = ParseDouble(fields[3], "noise_db_spl");
    e.duration_s = ParseDouble(fields[4], "duration_s");
    e.oae_offset_db = ParseDouble(fields[5], "oae_offset_db");
    spec.entries.push_back(std::move(e));
  }
  spec.Validate();
  return spec;
}

CohortSpec CohortSpec::Default() {
  std::mt19937_64 rng(20240611);
  CohortSpec spec;
  std::uint64_t seed = 1000;
  for (int i = 0; i < 44; ++i) {
    CohortEntry e;
    e.preset = i % 4 == 3 ? "normal_infant" : "normal_adult";
    e.normal = true;
    e.seed = seed++;
    e.noise_db_spl = Uniform(rng, 35.0, 50.0);
    e.oae_offset_db = Uniform(rng, -8.0, 4.0);
    spec.entries.push_back(e);
  }
  for (int i = 0; i < 6; ++i) {
    CohortEntry e;
    e.preset = i < 4 ? "hearing_loss" : "middle_ear_fluid";
    e.normal = false;
    e.seed = seed++;
    e.noise_db_spl = Uniform(rng, 35.0, 50.0);
    spec.entries.push_back(e);
  }
  return spec;
}

EarModel CohortEarModel(const CohortEntry& entry) {
  EarModel model = Preset(entry.preset);
  model.noise_level_db_spl = entry.noise_db_spl;
  for (auto& band : model.oae_bands) band.level_db_spl += entry.oae_offset_db;
  return model;
}

namespace {

void Evaluate(std::atomic<std::size_t>& next, const CohortSpec& cohort, Protocol protocol,
              const SessionConfig& base, const SpeakerModel& speaker,
              std::vector<LabeledReport>& out) {
  for (std::size_t i = next++; i < cohort.entries.size(); i = next++) {
    const CohortEntry& entry = cohort.entries[i];
    SessionConfig cfg = base;
    cfg.protocol = protocol;
    cfg.skip_fit_check = true;
    const double periods = std::floor(entry.duration_s / cfg.pulse.gap_s + 1e-9);
    cfg.pulse.count = std::max(4, static_cast<int>(periods) / 4 * 4);
    SimulatedEarSource source(CohortEarModel(entry), speaker, entry.seed, cfg.calibration);
    const ScreeningVerdict verdict = RunSession(source, cfg);
    out[i] = {verdict.report, entry.normal};
  }
}

}  // namespace

std::vector<LabeledReport> EvaluateCohort(const CohortSpec& cohort, Protocol protocol,
                                          const SessionConfig& base, const SpeakerModel& speaker,
                                          unsigned threads) {
  cohort.Validate();
  std::vector<LabeledReport> out(cohort.entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto worker = [&] {
    try {
      Evaluate(next, cohort, protocol, base, speaker, out);
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
      next = cohort.entries.size();  // stop handing out work
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, out.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace oae
