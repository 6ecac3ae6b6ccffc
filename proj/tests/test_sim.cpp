#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "errors.hpp"
#include "fft.hpp"
#include "scenario_io.hpp"
#include "sim.hpp"
#include "test_oracles.hpp"

using namespace echobeam;
using namespace echobeam::testing;

namespace {

// Asymptotic Kolmogorov-Smirnov p-value for a uniform[lo,hi] hypothesis.
double ks_uniform_p(Vec samples, double lo, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = (samples[i] - lo) / (hi - lo);
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

bool within_margin(const Point3& p, const Point3& room) {
  for (int i = 0; i < 3; ++i)
    if (p[i] < 0.1 - 1e-12 || p[i] > room[i] - 0.1 + 1e-12) return false;
  return true;
}

}  // namespace

TEST_CASE("scenario sampling is reproducible and in range") {
  const ScenarioSpec a = sample_scenario(42);
  const ScenarioSpec b = sample_scenario(42);
  CHECK(a.room == b.room);
  CHECK(a.t60 == b.t60);
  CHECK(a.mic_positions == b.mic_positions);
  CHECK(a.loudspeaker == b.loudspeaker);
  CHECK(a.talker == b.talker);
  CHECK(a.ser_db == b.ser_db);
  CHECK(a.nearend_onset_s == b.nearend_onset_s);

  const ScenarioSpec c = sample_scenario(43);
  CHECK(a.t60 != c.t60);
}

TEST_CASE("a thousand draws respect every documented range") {
  Vec t60_samples;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const ScenarioSpec spec = sample_scenario(seed);
    CHECK(spec.room[0] >= 3.0);
    CHECK(spec.room[0] <= 8.0);
    CHECK(spec.room[1] >= 3.0);
    CHECK(spec.room[1] <= 8.0);
    CHECK(spec.room[2] >= 2.0);
    CHECK(spec.room[2] <= 3.5);
    CHECK(spec.t60 >= 0.2);
    CHECK(spec.t60 <= 0.6);
    CHECK(spec.array_diameter >= 0.07);
    CHECK(spec.array_diameter <= 0.15);
    CHECK(spec.ser_db >= -10.0);
    CHECK(spec.ser_db <= 10.0);
    CHECK(spec.snr_db >= 10.0);
    CHECK(spec.snr_db <= 25.0);
    CHECK(spec.nearend_onset_s >= 1.0);
    CHECK(spec.nearend_onset_s <= 4.0);

    const double ls_dist = distance(spec.loudspeaker, spec.array_center);
    CHECK(ls_dist >= 0.1 - 1e-9);
    CHECK(ls_dist <= 0.5 + 1e-9);
    const double talker_dist = distance(spec.talker, spec.array_center);
    CHECK(talker_dist >= 0.5 - 1e-9);
    CHECK(talker_dist <= 2.0 + 1e-9);

    CHECK(within_margin(spec.loudspeaker, spec.room));
    CHECK(within_margin(spec.talker, spec.room));
    REQUIRE(spec.mic_positions.size() == 4);
    for (const Point3& mic : spec.mic_positions) {
      CHECK(within_margin(mic, spec.room));
      CHECK(distance(mic, spec.array_center) ==
            doctest::Approx(0.5 * spec.array_diameter).epsilon(1e-9));
    }
    t60_samples.push_back(spec.t60);
  }
  CHECK(ks_uniform_p(t60_samples, 0.2, 0.6) > 0.01);
}

TEST_CASE("fully absorbing walls leave a single direct-path arrival") {
  const Point3 room{5.0, 4.0, 3.0};
  const Point3 src{1.0, 1.2, 1.5};
  const Point3 mic{3.4, 2.6, 1.3};
  const double fs = 16000.0;
  const Vec rir = image_method_rir(room, src, mic, 0.0, 2000, fs);

  // Peak where geometry says, within one sample.
  const std::size_t expected =
      static_cast<std::size_t>(std::lround(fs * distance(src, mic) / kSpeedOfSound));
  std::size_t peak = 0;
  for (std::size_t n = 1; n < rir.size(); ++n)
    if (std::abs(rir[n]) > std::abs(rir[peak])) peak = n;
  CHECK(std::abs(static_cast<long>(peak) - static_cast<long>(expected)) <= 1);

  // Energy concentrates around the arrival; a small causal residue from the
  // low-cut filter trails it. Nothing precedes the interpolation window.
  double before = 0.0, outside = 0.0, total = 0.0;
  for (std::size_t n = 0; n < rir.size(); ++n) {
    total += rir[n] * rir[n];
    if (n + 70 < expected) before += rir[n] * rir[n];
    if (n + 70 < expected || n > expected + 70) outside += rir[n] * rir[n];
  }
  CHECK(before / total < 1e-12);
  CHECK(outside / total < 1e-3);

  // Amplitude follows the 1/(4 pi d) spherical spreading law.
  const double gain = 1.0 / (4.0 * std::numbers::pi * distance(src, mic));
  CHECK(std::abs(rir[peak]) == doctest::Approx(gain).epsilon(0.02));
}

TEST_CASE("reverberant decay tracks the requested time") {
  const Point3 room{5.0, 4.0, 3.0};
  const Point3 src{1.5, 1.0, 1.4};
  const Point3 mic{3.0, 2.8, 1.6};
  const double fs = 16000.0;
  const double t60 = 0.4;
  const Vec rir = image_method_rir(room, src, mic, t60, rir_length(t60, fs), fs);

  const Vec decay = schroeder_decay_db(rir);
  const std::size_t crossing = decay_crossing(decay, -60.0);
  const double measured = static_cast<double>(crossing) / fs;
  CHECK(measured > 0.8 * t60);
  CHECK(measured < 1.2 * t60);

  // Causality: nothing before the direct path beyond the sinc window.
  const auto direct = static_cast<std::size_t>(fs * distance(src, mic) / kSpeedOfSound);
  double early = 0.0, total = 0.0;
  for (std::size_t n = 0; n < rir.size(); ++n) {
    total += rir[n] * rir[n];
    if (n + 70 < direct) early += rir[n] * rir[n];
  }
  CHECK(early / total < 1e-9);
}

TEST_CASE("infeasible reverberation requests are rejected") {
  const Point3 room{8.0, 8.0, 3.5};
  CHECK_THROWS_AS(
      image_method_rir(room, {1, 1, 1}, {4, 4, 2}, 0.05, 6000, 16000.0), ConfigError);
  CHECK_THROWS_AS(
      image_method_rir(room, {9.0, 1, 1}, {4, 4, 2}, 0.4, 6000, 16000.0), ConfigError);
}

TEST_CASE("diffuse noise fields") {
  const double fs = 16000.0;
  Rng rng(71);

  SUBCASE("coincident microphones produce identical channels") {
    const Vec noise = random_vec(rng, 8000);
    const std::vector<Point3> mics{{1, 1, 1}, {1, 1, 1}};
    const std::vector<Vec> field = diffuse_noise(noise, mics, fs);
    REQUIRE(field.size() == 2);
    for (std::size_t n = 0; n < field[0].size(); ++n)
      CHECK(field[0][n] == doctest::Approx(field[1][n]).epsilon(1e-9));
  }
  SUBCASE("pairwise coherence follows the isotropic model") {
    const std::size_t samples = static_cast<std::size_t>(30.0 * fs);
    const Vec noise = synthetic_noise(samples, fs, 7);
    const std::vector<Point3> mics{{2.0, 2.0, 1.5}, {2.1, 2.0, 1.5}};  // 10 cm apart
    const std::vector<Vec> field = diffuse_noise(noise, mics, fs);

    for (double freq : {500.0, 1000.0, 1500.0}) {
      const double arg = 2.0 * std::numbers::pi * freq * 0.1 / kSpeedOfSound;
      const double model = std::sin(arg) / arg;
      const WelchCoherence measured = welch_coherence(field[0], field[1], 512, freq, fs);
      CHECK(std::abs(measured.real - model) < 0.1);
      CHECK(std::abs(measured.magnitude_squared - model * model) < 0.1);
    }
  }
  SUBCASE("each channel keeps the input octave-band power profile") {
    const std::size_t samples = static_cast<std::size_t>(20.0 * fs);
    const Vec noise = synthetic_noise(samples, fs, 9);
    const std::vector<Point3> mics{{2.0, 2.0, 1.5}, {2.08, 2.0, 1.5}, {2.0, 2.08, 1.5}};
    const std::vector<Vec> field = diffuse_noise(noise, mics, fs);

    // Octave bands 125..4000 Hz, energy via the Welch-style bin sums of the
    // full spectra.
    const CVec ref_spec = dft(std::span<const double>(noise));
    for (const Vec& channel : field) {
      const CVec spec = dft(std::span<const double>(channel));
      for (double low : {125.0, 250.0, 500.0, 1000.0, 2000.0}) {
        const double high = 2.0 * low;
        const auto lo_bin = static_cast<std::size_t>(low * static_cast<double>(samples) / fs);
        const auto hi_bin = static_cast<std::size_t>(high * static_cast<double>(samples) / fs);
        double ref_energy = 0.0, channel_energy = 0.0;
        for (std::size_t k = lo_bin; k < hi_bin; ++k) {
          ref_energy += std::norm(ref_spec[k]);
          channel_energy += std::norm(spec[k]);
        }
        const double ratio_db = 10.0 * std::log10(channel_energy / ref_energy);
        CHECK(std::abs(ratio_db) < 1.0);
      }
    }
  }
}

TEST_CASE("scene synthesis mixes to specification") {
  ScenarioSpec spec = sample_scenario(5);
  spec.t60 = 0.25;  // keep the test quick
  const std::size_t samples = 16000 * 3;

  SUBCASE("silent talker and zero noise leave the echo alone") {
    const Vec far_end = synthetic_speech(samples, spec.sample_rate, 100, 0.1);
    const SceneSignals scene = synthesize_scene(spec, {}, far_end, {});
    for (std::size_t p = 0; p < scene.mic.size(); ++p)
      for (std::size_t n = 0; n < samples; ++n) CHECK(scene.mic[p][n] == scene.echo[p][n]);
    for (const Vec& s : scene.speech)
      for (double v : s) CHECK(v == 0.0);
  }
  SUBCASE("the echo image is the convolution of the loudspeaker signal") {
    const Vec far_end = synthetic_speech(samples, spec.sample_rate, 100, 0.1);
    const SceneSignals scene = synthesize_scene(spec, {}, far_end, {});
    Vec expected = direct_convolve(far_end, scene.echo_rirs[0]);
    expected.resize(samples);
    CHECK(relative_error(scene.echo[0], expected) < 1e-10);
  }
  SUBCASE("requested level ratios are hit on the first microphone") {
    spec.ser_db = 0.0;
    spec.snr_db = 15.0;
    spec.nearend_onset_s = 1.0;
    const Vec far_end = synthetic_speech(samples, spec.sample_rate, 101, 0.1);
    const Vec dry = synthetic_speech(samples, spec.sample_rate, 102, 0.2);
    const Vec noise = synthetic_noise(samples, spec.sample_rate, 103);
    const SceneSignals scene = synthesize_scene(spec, dry, far_end, noise);

    const std::size_t onset = scene.onset_sample;
    const double ser = 10.0 * std::log10(energy_of(scene.echo[0], onset, samples) /
                                         energy_of(scene.speech[0], onset, samples));
    CHECK(ser == doctest::Approx(0.0).epsilon(0.01));
    const double snr =
        10.0 * std::log10(energy_of(scene.echo[0]) / energy_of(scene.noise[0]));
    CHECK(snr == doctest::Approx(15.0).epsilon(0.01));

    // Microphones carry the exact sum of the three images.
    for (std::size_t n = 0; n < samples; ++n)
      CHECK(scene.mic[2][n] == scene.echo[2][n] + scene.speech[2][n] + scene.noise[2][n]);
    // Talker is silent before the onset.
    for (const Vec& s : scene.speech)
      for (std::size_t n = 0; n < onset; ++n) CHECK(s[n] == 0.0);
  }
  SUBCASE("the reference aligns with the dry signal in a free field") {
    spec.t60 = 0.0;  // fully absorbing walls
    spec.nearend_onset_s = 0.0;
    const Vec dry = synthetic_speech(samples, spec.sample_rate, 104, 0.2);
    const Vec far_end = synthetic_speech(samples, spec.sample_rate, 105, 0.1);
    const SceneSignals scene = synthesize_scene(spec, dry, far_end, {});

    const double min_delay_samples =
        [&] {
          double best = 1e18;
          for (const Point3& mic : spec.mic_positions)
            best = std::min(best, distance(spec.talker, mic));
          return best * spec.sample_rate / kSpeedOfSound;
        }();
    const Vec aligned = fractional_advance(scene.reference, min_delay_samples);

    // The render path carries a 100 Hz low cut; compare within that band by
    // passing the dry signal through the same filter.
    Vec banded(dry.size());
    {
      const double w = 2.0 * std::numbers::pi * 100.0 / spec.sample_rate;
      const double r = std::exp(-w);
      double y0 = 0.0, y1 = 0.0, y2 = 0.0;
      for (std::size_t n = 0; n < dry.size(); ++n) {
        y2 = y1;
        y1 = y0;
        y0 = 2.0 * r * std::cos(w) * y1 - r * r * y2 + dry[n];
        banded[n] = y0 - (1.0 + r) * y1 + r * y2;
      }
    }
    double cross = 0.0, e1 = 0.0, e2 = 0.0;
    for (std::size_t n = 200; n + 200 < samples; ++n) {
      cross += aligned[n] * banded[n];
      e1 += aligned[n] * aligned[n];
      e2 += banded[n] * banded[n];
    }
    CHECK(cross / std::sqrt(e1 * e2) > 0.999);
  }
}

TEST_CASE("scenario specs and scene bundles survive the disk round trip") {
  namespace fs = std::filesystem;
  const ScenarioSpec spec = sample_scenario(77, 2);

  SUBCASE("the text form parses back to the same spec") {
    const std::string text = format_scenario_spec(spec);
    const ScenarioSpec parsed = parse_scenario_spec(text);
    CHECK(parsed.seed == spec.seed);
    CHECK(parsed.room == spec.room);
    CHECK(parsed.t60 == spec.t60);
    CHECK(parsed.mic_positions == spec.mic_positions);
    CHECK(parsed.ser_db == spec.ser_db);
    CHECK(format_scenario_spec(parsed) == text);
  }
  SUBCASE("a saved scene loads with an exactly linear mixture") {
    ScenarioSpec quick = spec;
    quick.t60 = 0.0;
    const std::size_t samples = 8000;
    const Vec far_end = synthetic_speech(samples, quick.sample_rate, 7, 0.1);
    const Vec dry = synthetic_speech(samples, quick.sample_rate, 8, 0.2);
    const Vec noise = synthetic_noise(samples, quick.sample_rate, 9);
    const SceneSignals scene = synthesize_scene(quick, dry, far_end, noise);

    const fs::path dir = fs::temp_directory_path() / "echobeam_scene_roundtrip";
    fs::remove_all(dir);
    save_scene(dir.string(), quick, scene);
    const LoadedScene loaded = load_scene(dir.string());
    CHECK(loaded.spec.seed == quick.seed);
    REQUIRE(loaded.scene.mic.size() == 2);
    CHECK(loaded.scene.onset_sample == scene.onset_sample);
    for (std::size_t n = 0; n < samples; ++n) {
      CHECK(loaded.scene.mic[0][n] ==
            loaded.scene.echo[0][n] + loaded.scene.speech[0][n] + loaded.scene.noise[0][n]);
    }
    // float32 storage: loaded components match to single precision.
    CHECK(relative_error(loaded.scene.echo[0], scene.echo[0]) < 1e-6);
    fs::remove_all(dir);
  }
  SUBCASE("parse failures are format errors") {
    CHECK_THROWS_AS(parse_scenario_spec("format = something-else\n"), FormatError);
    CHECK_THROWS_AS(parse_scenario_spec("format = echobeam-scenario-v1\nseed 1\n"), FormatError);
    CHECK_THROWS_AS(load_scene("/nonexistent/scene"), IoError);
  }
}
