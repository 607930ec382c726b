#pragma once

#include <cstdint>
#include <vector>

#include "oae/calibration.h"
#include "oae/ear_model.h"
#include "oae/sample_buffer.h"

namespace oae {

// A contiguous stretch of non-silent stimulus, as seen by the cochlea.
struct StimulusEvent {
  std::size_t onset = 0;
  double peak = 0.0;  // signed sample value of largest magnitude
};

// Runs separated by at least `min_gap_s` of exact silence count as distinct events.
std::vector<StimulusEvent> DetectStimulusEvents(const std::vector<double>& driven,
                                                int sample_rate_hz, double min_gap_s = 0.001);

// Microphone signal for `stimulus` (mono, 15625 or 31250 Hz) played into `model`:
// speaker distortion, reflection taps, optional low-frequency leak, per-band
// OAE bursts, seeded Gaussian noise, then the 16-bit converter range.
SampleBuffer SimulateEar(const EarModel& model, const SpeakerModel& speaker,
                         const SampleBuffer& stimulus, std::uint64_t seed,
                         const Calibration& cal = {});

// Noiseless closed cavity of `volume_cc` with an ideal speaker.
SampleBuffer SimulateClosedTube(double volume_cc, const SampleBuffer& stimulus);

// Second-order Butterworth low-pass (RBJ biquad), zero initial state.
std::vector<double> ButterworthLowPass(const std::vector<double>& input, double cutoff_hz,
                                       int sample_rate_hz);

}  // namespace oae
