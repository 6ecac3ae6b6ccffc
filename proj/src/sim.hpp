#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "types.hpp"

namespace echobeam {

using Point3 = std::array<double, 3>;

constexpr double kSpeedOfSound = 343.0;

// One randomized desk-scale acoustic scene: shoebox room, circular mic array,
// nearby loudspeaker, near-end talker, mixing levels and talker onset.
struct ScenarioSpec {
  Point3 room{5.0, 4.0, 3.0};  // length, width, height in meters
  double t60 = 0.4;
  Point3 array_center{2.5, 2.0, 1.5};
  double array_diameter = 0.1;
  std::vector<Point3> mic_positions;
  Point3 loudspeaker{2.8, 2.0, 1.5};
  Point3 talker{3.5, 2.0, 1.5};
  std::uint64_t seed = 0;
  double ser_db = 0.0;          // echo-to-near-end ratio
  double snr_db = 15.0;         // echo-to-noise ratio
  double nearend_onset_s = 2.0;
  double sample_rate = 16000.0;
};

// Deterministic draw from the scenario distribution; identical seeds yield
// identical specs. All positions keep at least 0.1 m wall clearance.
ScenarioSpec sample_scenario(std::uint64_t seed, std::size_t channels = 4,
                             double sample_rate = 16000.0);

// Required RIR length for a spec.
std::size_t rir_length(double t60, double sample_rate);

// Shoebox image-method impulse response with frequency-independent walls and
// windowed-sinc fractional delays. t60 <= 0 means fully absorbing walls
// (direct path only). Throws if the requested t60 is infeasible for the room.
Vec image_method_rir(const Point3& room, const Point3& source, const Point3& mic, double t60,
                     std::size_t length, double sample_rate);

// Spreads one noise channel over the array with the spatial coherence of a
// spherically isotropic field.
std::vector<Vec> diffuse_noise(std::span<const double> noise,
                               const std::vector<Point3>& mic_positions, double sample_rate);

struct SceneSignals {
  Vec loudspeaker;            // x
  std::vector<Vec> echo;      // d, per mic
  std::vector<Vec> speech;    // s, per mic
  std::vector<Vec> noise;     // n, per mic
  std::vector<Vec> mic;       // y = d + s + n
  Vec reference;              // delay-and-sum of the speech image
  std::vector<Vec> echo_rirs;
  std::vector<Vec> speech_rirs;
  std::size_t onset_sample = 0;
  double sample_rate = 16000.0;
};

// Convolves, gates the talker at the onset, scales speech/noise to the
// requested ratios (measured on the first microphone) and mixes. Empty dry
// speech or noise inputs stand for silent sources.
SceneSignals synthesize_scene(const ScenarioSpec& spec, std::span<const double> dry_speech,
                              std::span<const double> loudspeaker,
                              std::span<const double> noise);

// Scene from built-in deterministic sources (speech-like far end and talker,
// filtered noise bed).
SceneSignals render_scenario(const ScenarioSpec& spec, double duration_s);

// Bandlimited modulated noise with syllabic pauses; a stand-in for recorded
// speech material.
Vec synthetic_speech(std::size_t samples, double sample_rate, std::uint64_t seed,
                     double pause_fraction = 0.3);

// Low-passed noise bed with slow level wander.
Vec synthetic_noise(std::size_t samples, double sample_rate, std::uint64_t seed);

// The deterministic built-in sources render_scenario() feeds a scene with.
Vec builtin_far_end(const ScenarioSpec& spec, std::size_t samples);
Vec builtin_near_end(const ScenarioSpec& spec, std::size_t samples);
Vec builtin_noise_bed(const ScenarioSpec& spec, std::size_t samples);

// Signal resampled at n + shift (advance by `shift` samples, fractional
// allowed), windowed-sinc interpolation, zero outside the input.
Vec fractional_advance(std::span<const double> signal, double shift);

double distance(const Point3& a, const Point3& b);

}  // namespace echobeam
