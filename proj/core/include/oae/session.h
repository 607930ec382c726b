#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oae/ear_model.h"
#include "oae/extract.h"
#include "oae/fmcw.h"
#include "oae/kv_config.h"
#include "oae/screening.h"
#include "oae/signal.h"

namespace oae {

enum class Protocol { kOaebuds, kOaebudsFixed2p5, kTeoae2p5, kTeoae12 };

std::string_view ToString(Protocol protocol);
Protocol ParseProtocol(std::string_view text);
// Fixed analysis delay of a protocol; empty for the ranged protocol.
std::optional<double> FixedDelayS(Protocol protocol);
bool IsTeoae(Protocol protocol);

enum class SessionStage { kIdle, kFitCheck, kRanging, kMeasuring, kDone, kAborted };

std::string_view ToString(SessionStage stage);

struct SessionConfig {
  Calibration calibration;
  double stimulus_pe_spl = kDefaultStimulusPeSpl;
  ChirpConfig chirp;
  DelayEstimatorConfig delay;
  PulseConfig pulse{.count = 3300};
  ExtractConfig extract;
  Thresholds thresholds;
  ProbeFitConfig fit;
  bool skip_fit_check = false;
  Protocol protocol = Protocol::kOaebuds;
  double window_s = 1.0;
  // Overrides both ranging and the protocol delay (diagnostics only).
  std::optional<double> forced_t_d_s;

  // Recomputes stimulus amplitudes from the calibration and checks ranges.
  void Finalize();
  static SessionConfig FromKeyValue(const KeyValueDoc& doc);
  KeyValueDoc ToKeyValue() const;
};

// Supplies the microphone response to each transmitted stimulus.
class EarSource {
 public:
  virtual ~EarSource() = default;
  virtual SampleBuffer Respond(SessionStage stage, const SampleBuffer& stimulus) = 0;
};

class SimulatedEarSource : public EarSource {
 public:
  SimulatedEarSource(EarModel model, SpeakerModel speaker, std::uint64_t seed, Calibration cal = {});
  SampleBuffer Respond(SessionStage stage, const SampleBuffer& stimulus) override;

 private:
  EarModel model_;
  SpeakerModel speaker_;
  std::uint64_t seed_;
  Calibration cal_;
  std::uint64_t calls_ = 0;
};

// Replays captured responses per stage. Fit-check audio is handed out in
// slices matching each stimulus; other stages return the whole capture.
class RecordedEarSource : public EarSource {
 public:
  RecordedEarSource() = default;
  void Set(SessionStage stage, SampleBuffer recording);
  bool Has(SessionStage stage) const { return recordings_.count(stage) > 0; }
  SampleBuffer Respond(SessionStage stage, const SampleBuffer& stimulus) override;

 private:
  std::map<SessionStage, SampleBuffer> recordings_;
  std::size_t fit_cursor_ = 0;
};

// Forwards to another source and keeps every response, concatenated per stage.
class CapturingEarSource : public EarSource {
 public:
  explicit CapturingEarSource(EarSource& inner) : inner_(inner) {}
  SampleBuffer Respond(SessionStage stage, const SampleBuffer& stimulus) override;
  const std::map<SessionStage, SampleBuffer>& responses() const { return responses_; }
  const std::map<SessionStage, SampleBuffer>& stimuli() const { return stimuli_; }

 private:
  EarSource& inner_;
  std::map<SessionStage, SampleBuffer> responses_;
  std::map<SessionStage, SampleBuffer> stimuli_;
};

struct SessionEvent {
  int sequence = 0;
  SessionStage stage = SessionStage::kIdle;
  double elapsed_s = 0.0;
  int window_index = -1;  // measurement window, from 0
  std::optional<bool> in_ear;
  std::optional<double> t_d_s;
  std::optional<BandSnrReport> report;
  int batches_used = 0;
  int batches_discarded = 0;
};

using EventSink = std::function<void(const SessionEvent&)>;

// Unbounded multi-producer queue; Pop blocks until an item arrives or the
// channel is closed and drained.
template <typename T>
class EventChannel {
 public:
  void Push(T item) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }
  void Close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }
  std::optional<T> Pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }
  EventSink Sink() {
    return [this](const SessionEvent& e) { Push(e); };
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

// Idle -> FitCheck -> Ranging -> Measuring -> Done. Throws SessionAbortedError
// when the fit check times out.
ScreeningVerdict RunSession(EarSource& source, const SessionConfig& config,
                            const EventSink& on_event = {});

struct IntegrityResult {
  bool passed = false;
  std::vector<ScreeningVerdict> runs;
};

// Screens a 1 cc closed tube `repetitions` times (fit check bypassed); passes
// iff every run refers with every band SNR under the threshold.
IntegrityResult ProbeIntegrityCheck(SessionConfig config, std::uint64_t seed = 1,
                                    int repetitions = 3);

}  // namespace oae
