#include "sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "fft.hpp"
#include "rng.hpp"

namespace echobeam {

namespace {

constexpr double kWallMargin = 0.1;
constexpr double kPi = std::numbers::pi;

bool inside_room(const Point3& p, const Point3& room) {
  for (int i = 0; i < 3; ++i)
    if (p[i] < kWallMargin || p[i] > room[i] - kWallMargin) return false;
  return true;
}

Point3 offset_spherical(const Point3& center, double dist, double azimuth, double elevation) {
  return {center[0] + dist * std::cos(elevation) * std::cos(azimuth),
          center[1] + dist * std::cos(elevation) * std::sin(azimuth),
          center[2] + dist * std::sin(elevation)};
}

double active_energy(std::span<const double> signal, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t n = begin; n < std::min(end, signal.size()); ++n) sum += signal[n] * signal[n];
  return sum;
}

void scale_channels(std::vector<Vec>& channels, double gain) {
  for (Vec& c : channels)
    for (double& v : c) v *= gain;
}

}  // namespace

double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

// Directional average of the image-lattice energy decay: a ray along u hits
// |u_i|/L_i walls per meter per axis, so the backward-integrated decay at
// travel distance D for per-reflection energy exp(-gamma) is
//   EDC(D)/EDC(0) = [int exp(-gamma D kappa(u))/kappa dOmega] / [int 1/kappa dOmega],
// kappa(u) = sum_i |u_i|/L_i. Octant midpoint quadrature.
double lattice_edc_ratio(double gamma, double travel, const Point3& room) {
  constexpr int kGrid = 32;
  const double step = 0.5 * kPi / kGrid;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double theta = (i + 0.5) * step;
    const double sin_theta = std::sin(theta);
    const double uz = std::cos(theta);
    for (int j = 0; j < kGrid; ++j) {
      const double phi = (j + 0.5) * step;
      const double kappa = sin_theta * std::cos(phi) / room[0] +
                           sin_theta * std::sin(phi) / room[1] + uz / room[2];
      num += sin_theta * std::exp(-gamma * travel * kappa) / kappa;
      den += sin_theta / kappa;
    }
  }
  return num / den;
}

// Per-reflection amplitude coefficient that makes the lattice's Schroeder
// decay cross -60 dB at the requested time. The naive mean-free-path value
// undershoots for absorptive rooms (grazing rays dominate the average).
double calibrated_reflection(const Point3& room, double t60) {
  const double travel = kSpeedOfSound * t60;
  double lo = 1e-6, hi = 50.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (lattice_edc_ratio(mid, travel, room) > 1e-6)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(-0.25 * (lo + hi));  // gamma = 2 ln(1/beta)
}

}  // namespace

ScenarioSpec sample_scenario(std::uint64_t seed, std::size_t channels, double sample_rate) {
  if (channels < 1) throw ConfigError("sample_scenario: at least one microphone required");
  Rng rng(seed);
  ScenarioSpec spec;
  spec.seed = seed;
  spec.sample_rate = sample_rate;
  spec.room = {rng.uniform(3.0, 8.0), rng.uniform(3.0, 8.0), rng.uniform(2.0, 3.5)};
  spec.t60 = rng.uniform(0.2, 0.6);
  spec.array_diameter = rng.uniform(0.07, 0.15);
  spec.ser_db = rng.uniform(-10.0, 10.0);
  spec.snr_db = rng.uniform(10.0, 25.0);
  spec.nearend_onset_s = rng.uniform(1.0, 4.0);

  const double radius = 0.5 * spec.array_diameter;
  const double deg = kPi / 180.0;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double inset = kWallMargin + radius;
    Point3 center = {rng.uniform(inset, spec.room[0] - inset),
                     rng.uniform(inset, spec.room[1] - inset),
                     rng.uniform(inset, spec.room[2] - inset)};
    const double array_rotation = rng.uniform(0.0, 2.0 * kPi);
    Point3 loudspeaker = offset_spherical(center, rng.uniform(0.1, 0.5),
                                          rng.uniform(0.0, 2.0 * kPi),
                                          rng.uniform(-20.0 * deg, 20.0 * deg));
    Point3 talker = offset_spherical(center, rng.uniform(0.5, 2.0), rng.uniform(0.0, 2.0 * kPi),
                                     rng.uniform(-20.0 * deg, 20.0 * deg));
    if (!inside_room(loudspeaker, spec.room) || !inside_room(talker, spec.room)) continue;

    std::vector<Point3> mics(channels);
    bool mics_ok = true;
    for (std::size_t p = 0; p < channels; ++p) {
      const double angle = array_rotation + 2.0 * kPi * static_cast<double>(p) /
                                                static_cast<double>(channels);
      mics[p] = {center[0] + radius * std::cos(angle), center[1] + radius * std::sin(angle),
                 center[2]};
      mics_ok = mics_ok && inside_room(mics[p], spec.room);
    }
    if (!mics_ok) continue;

    spec.array_center = center;
    spec.mic_positions = std::move(mics);
    spec.loudspeaker = loudspeaker;
    spec.talker = talker;
    return spec;
  }
  throw ConfigError("sample_scenario: could not place sources inside the room");
}

std::size_t rir_length(double t60, double sample_rate) {
  const double samples = std::floor(sample_rate * std::max(t60, 0.0));
  return static_cast<std::size_t>(std::max(6000.0, samples));
}

Vec image_method_rir(const Point3& room, const Point3& source, const Point3& mic, double t60,
                     std::size_t length, double sample_rate) {
  for (int i = 0; i < 3; ++i)
    if (room[i] <= 0.0) throw ConfigError("image_method_rir: room dimensions must be positive");
  if (!inside_room(source, room) || !inside_room(mic, room))
    throw ConfigError("image_method_rir: source and microphone must lie inside the room");

  double reflection = 0.0;
  if (t60 > 0.0) {
    const double volume = room[0] * room[1] * room[2];
    const double surface =
        2.0 * (room[0] * room[1] + room[0] * room[2] + room[1] * room[2]);
    const double sabine = 24.0 * volume * std::log(10.0) / (kSpeedOfSound * surface * t60);
    if (sabine > 1.0)
      throw ConfigError("image_method_rir: requested t60 infeasible for this room");
    reflection = calibrated_reflection(room, t60);
  }

  const double samples_per_meter = sample_rate / kSpeedOfSound;
  const double src[3] = {source[0] * samples_per_meter, source[1] * samples_per_meter,
                         source[2] * samples_per_meter};
  const double rcv[3] = {mic[0] * samples_per_meter, mic[1] * samples_per_meter,
                         mic[2] * samples_per_meter};
  const double dim[3] = {room[0] * samples_per_meter, room[1] * samples_per_meter,
                         room[2] * samples_per_meter};

  const int taps = 2 * static_cast<int>(std::lround(0.004 * sample_rate));
  const double phase_step = 2.0 * kPi / static_cast<double>(taps);
  const double cos_step = std::cos(phase_step);
  const double sin_step = std::sin(phase_step);
  const auto max_dist = static_cast<double>(length);

  Vec rir(length, 0.0);
  const int order[3] = {static_cast<int>(std::ceil(max_dist / (2.0 * dim[0]))),
                        static_cast<int>(std::ceil(max_dist / (2.0 * dim[1]))),
                        static_cast<int>(std::ceil(max_dist / (2.0 * dim[2])))};

  for (int mx = -order[0]; mx <= order[0]; ++mx) {
    const double lattice_x = 2.0 * mx * dim[0];
    for (int my = -order[1]; my <= order[1]; ++my) {
      const double lattice_y = 2.0 * my * dim[1];
      for (int mz = -order[2]; mz <= order[2]; ++mz) {
        const double lattice_z = 2.0 * mz * dim[2];
        for (int q = 0; q <= 1; ++q) {
          const double dx = (1 - 2 * q) * src[0] - rcv[0] + lattice_x;
          const double wall_x =
              std::pow(reflection, std::abs(mx - q)) * std::pow(reflection, std::abs(mx));
          if (wall_x == 0.0 && (mx != 0 || q != 0)) continue;
          for (int j = 0; j <= 1; ++j) {
            const double dy = (1 - 2 * j) * src[1] - rcv[1] + lattice_y;
            const double wall_y =
                std::pow(reflection, std::abs(my - j)) * std::pow(reflection, std::abs(my));
            if (wall_y == 0.0 && (my != 0 || j != 0)) continue;
            for (int k = 0; k <= 1; ++k) {
              const double dz = (1 - 2 * k) * src[2] - rcv[2] + lattice_z;
              const double wall_z =
                  std::pow(reflection, std::abs(mz - k)) * std::pow(reflection, std::abs(mz));
              if (wall_z == 0.0 && (mz != 0 || k != 0)) continue;

              const double dist = std::max(std::sqrt(dx * dx + dy * dy + dz * dz), 1e-6);
              if (dist >= max_dist) continue;

              const double whole = std::floor(dist);
              const double frac = dist - whole;
              const double gain = wall_x * wall_y * wall_z * samples_per_meter /
                                  (4.0 * kPi * dist);

              // Hann-windowed sinc centered on the fractional arrival. The
              // sinc alternates sign sample to sample, so one sine evaluation
              // covers every tap; the window phase advances by rotation.
              const double t0 = 1.0 - 0.5 * taps - frac;
              const double sin_t0 = std::sin(kPi * t0);
              double win_cos = std::cos(phase_step * t0);
              double win_sin = std::sin(phase_step * t0);
              const int start = static_cast<int>(whole) - taps / 2 + 1;

              double sign = 1.0;
              for (int n = 0; n < taps; ++n) {
                const int idx = start + n;
                if (idx >= 0 && idx < static_cast<int>(length)) {
                  const double t = t0 + n;
                  const double sinc =
                      (std::abs(t) < 1e-9) ? 1.0 : sign * sin_t0 / (kPi * t);
                  rir[static_cast<std::size_t>(idx)] += gain * 0.5 * (1.0 + win_cos) * sinc;
                }
                const double next_cos = win_cos * cos_step - win_sin * sin_step;
                win_sin = win_sin * cos_step + win_cos * sin_step;
                win_cos = next_cos;
                sign = -sign;
              }
            }
          }
        }
      }
    }
  }

  // 100 Hz high-pass: the lattice sum piles up unphysical energy toward DC
  // (all image gains are positive), which otherwise dominates the late tail.
  const double pole_freq = 2.0 * kPi * 100.0 / sample_rate;
  const double pole = std::exp(-pole_freq);
  const double b1 = 2.0 * pole * std::cos(pole_freq);
  const double b2 = -pole * pole;
  const double a1 = -(1.0 + pole);
  double y0 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& sample : rir) {
    y2 = y1;
    y1 = y0;
    y0 = b1 * y1 + b2 * y2 + sample;
    sample = y0 + a1 * y1 + pole * y2;
  }
  return rir;
}

std::vector<Vec> diffuse_noise(std::span<const double> noise,
                               const std::vector<Point3>& mic_positions, double sample_rate) {
  const std::size_t channels = mic_positions.size();
  if (channels == 0) throw ConfigError("diffuse_noise: no microphones");
  if (channels == 1) return {Vec(noise.begin(), noise.end())};
  if (noise.empty()) return std::vector<Vec>(channels);

  const std::size_t len = noise.size();
  // Pseudo-independent source channels: large circular shifts of the input.
  // The mixing below imprints the target coherence on them.
  std::vector<CVec> sources(channels);
  const std::size_t shift = len / channels;
  for (std::size_t c = 0; c < channels; ++c) {
    Vec shifted(len);
    for (std::size_t n = 0; n < len; ++n) shifted[n] = noise[(n + c * shift) % len];
    sources[c] = dft(std::span<const double>(shifted));
  }

  Eigen::MatrixXd coherence(channels, channels);
  Eigen::MatrixXd mixing(channels, channels);
  std::vector<CVec> mixed(channels, CVec(len, Complex(0.0, 0.0)));
  const std::size_t half = len / 2;

  for (std::size_t bin = 0; bin <= half; ++bin) {
    const double freq = static_cast<double>(bin) * sample_rate / static_cast<double>(len);
    for (std::size_t i = 0; i < channels; ++i) {
      coherence(i, i) = 1.0;
      for (std::size_t j = i + 1; j < channels; ++j) {
        const double arg = 2.0 * kPi * freq * distance(mic_positions[i], mic_positions[j]) /
                           kSpeedOfSound;
        const double value = (std::abs(arg) < 1e-12) ? 1.0 : std::sin(arg) / arg;
        coherence(i, j) = value;
        coherence(j, i) = value;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(coherence);
    Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    mixing = eig.eigenvectors() * clamped.asDiagonal();

    for (std::size_t i = 0; i < channels; ++i) {
      Complex acc(0.0, 0.0);
      for (std::size_t j = 0; j < channels; ++j)
        acc += mixing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * sources[j][bin];
      mixed[i][bin] = acc;
      if (bin != 0 && bin != half) mixed[i][len - bin] = std::conj(acc);
    }
  }

  std::vector<Vec> out(channels);
  for (std::size_t c = 0; c < channels; ++c) out[c] = idft_real(std::span<const Complex>(mixed[c]));
  return out;
}

Vec fractional_advance(std::span<const double> signal, double shift) {
  constexpr int kHalf = 32;
  Vec out(signal.size(), 0.0);
  const double whole = std::floor(shift);
  const double frac = shift - whole;
  const auto base = static_cast<long>(whole);
  for (std::size_t n = 0; n < signal.size(); ++n) {
    double acc = 0.0;
    for (int k = -kHalf; k <= kHalf; ++k) {
      const long idx = static_cast<long>(n) + base + k;
      if (idx < 0 || idx >= static_cast<long>(signal.size())) continue;
      const double t = static_cast<double>(k) - frac;
      const double sinc = (std::abs(t) < 1e-9) ? 1.0 : std::sin(kPi * t) / (kPi * t);
      const double window = 0.5 * (1.0 + std::cos(kPi * t / (kHalf + 1)));
      acc += signal[static_cast<std::size_t>(idx)] * sinc * window;
    }
    out[n] = acc;
  }
  return out;
}

SceneSignals synthesize_scene(const ScenarioSpec& spec, std::span<const double> dry_speech,
                              std::span<const double> loudspeaker, std::span<const double> noise) {
  if (loudspeaker.empty()) throw ConfigError("synthesize_scene: loudspeaker signal required");
  if (!dry_speech.empty() && dry_speech.size() != loudspeaker.size())
    throw ConfigError("synthesize_scene: source signals must share one length");
  if (!noise.empty() && noise.size() != loudspeaker.size())
    throw ConfigError("synthesize_scene: source signals must share one length");
  if (spec.mic_positions.empty())
    throw ConfigError("synthesize_scene: scenario has no microphone positions");

  const std::size_t samples = loudspeaker.size();
  const std::size_t channels = spec.mic_positions.size();
  const std::size_t rir_len = rir_length(spec.t60, spec.sample_rate);

  SceneSignals scene;
  scene.sample_rate = spec.sample_rate;
  scene.loudspeaker.assign(loudspeaker.begin(), loudspeaker.end());
  scene.onset_sample = std::min(
      samples, static_cast<std::size_t>(std::max(0.0, spec.nearend_onset_s * spec.sample_rate)));

  scene.echo_rirs.reserve(channels);
  scene.speech_rirs.reserve(channels);
  for (std::size_t p = 0; p < channels; ++p) {
    scene.echo_rirs.push_back(image_method_rir(spec.room, spec.loudspeaker, spec.mic_positions[p],
                                               spec.t60, rir_len, spec.sample_rate));
    scene.speech_rirs.push_back(image_method_rir(spec.room, spec.talker, spec.mic_positions[p],
                                                 spec.t60, rir_len, spec.sample_rate));
  }

  scene.echo.resize(channels);
  for (std::size_t p = 0; p < channels; ++p) {
    Vec full = fft_convolve(loudspeaker, scene.echo_rirs[p]);
    full.resize(samples);
    scene.echo[p] = std::move(full);
  }

  // Convolve only the active talker segment: the image stays exactly zero
  // before the onset.
  scene.speech.assign(channels, Vec(samples, 0.0));
  if (!dry_speech.empty() && scene.onset_sample < samples) {
    const std::span<const double> active = dry_speech.subspan(scene.onset_sample);
    for (std::size_t p = 0; p < channels; ++p) {
      const Vec tail = fft_convolve(active, scene.speech_rirs[p]);
      Vec& image = scene.speech[p];
      for (std::size_t n = scene.onset_sample; n < samples; ++n)
        image[n] = tail[n - scene.onset_sample];
    }
  }

  if (noise.empty()) {
    scene.noise.assign(channels, Vec(samples, 0.0));
  } else {
    scene.noise = diffuse_noise(noise, spec.mic_positions, spec.sample_rate);
    for (Vec& c : scene.noise) c.resize(samples, 0.0);
  }

  // Levels are set on the first microphone: echo-to-near-end over the
  // talker-active region, echo-to-noise over the whole signal.
  const double echo_active = active_energy(scene.echo[0], scene.onset_sample, samples);
  const double echo_full = active_energy(scene.echo[0], 0, samples);
  const double speech_energy = active_energy(scene.speech[0], scene.onset_sample, samples);
  if (speech_energy > 0.0) {
    const double target = echo_active / std::pow(10.0, spec.ser_db / 10.0);
    scale_channels(scene.speech, std::sqrt(target / speech_energy));
  }
  const double noise_energy = active_energy(scene.noise[0], 0, samples);
  if (noise_energy > 0.0) {
    const double target = echo_full / std::pow(10.0, spec.snr_db / 10.0);
    scale_channels(scene.noise, std::sqrt(target / noise_energy));
  }

  scene.mic.resize(channels);
  for (std::size_t p = 0; p < channels; ++p) {
    Vec& y = scene.mic[p];
    y.resize(samples);
    for (std::size_t n = 0; n < samples; ++n)
      y[n] = scene.echo[p][n] + scene.speech[p][n] + scene.noise[p][n];
  }

  // Reference: delay-and-sum over the speech image with true steering delays.
  double min_delay = std::numeric_limits<double>::max();
  std::vector<double> delays(channels);
  for (std::size_t p = 0; p < channels; ++p) {
    delays[p] = distance(spec.talker, spec.mic_positions[p]) * spec.sample_rate / kSpeedOfSound;
    min_delay = std::min(min_delay, delays[p]);
  }
  scene.reference.assign(samples, 0.0);
  for (std::size_t p = 0; p < channels; ++p) {
    Vec aligned = fractional_advance(scene.speech[p], delays[p] - min_delay);
    for (std::size_t n = 0; n < samples; ++n) scene.reference[n] += aligned[n];
  }
  const double norm = 1.0 / static_cast<double>(channels);
  for (double& v : scene.reference) v *= norm;

  return scene;
}

Vec synthetic_speech(std::size_t samples, double sample_rate, std::uint64_t seed,
                     double pause_fraction) {
  Rng rng(seed);
  Vec signal(samples, 0.0);

  // Two-pole resonator bank over white noise gives a speech-shaped spectrum;
  // a syllabic on/off envelope with cosine ramps provides the modulation.
  double lp = 0.0;
  double res1 = 0.0, res1_prev = 0.0;
  double res2 = 0.0, res2_prev = 0.0;
  double formant1 = rng.uniform(250.0, 500.0);
  double formant2 = rng.uniform(900.0, 2200.0);

  std::size_t n = 0;
  while (n < samples) {
    const bool pause = rng.uniform() < pause_fraction;
    const double duration = pause ? rng.uniform(0.08, 0.35) : rng.uniform(0.15, 0.5);
    const auto segment = static_cast<std::size_t>(duration * sample_rate);
    const std::size_t ramp = static_cast<std::size_t>(0.01 * sample_rate);
    const double level = pause ? 0.0 : rng.uniform(0.4, 1.0);
    if (!pause) {
      formant1 = std::clamp(formant1 + rng.uniform(-80.0, 80.0), 250.0, 500.0);
      formant2 = std::clamp(formant2 + rng.uniform(-250.0, 250.0), 900.0, 2200.0);
    }
    const double r = 0.97;
    const double c1 = 2.0 * r * std::cos(2.0 * kPi * formant1 / sample_rate);
    const double c2 = 2.0 * r * std::cos(2.0 * kPi * formant2 / sample_rate);

    for (std::size_t i = 0; i < segment && n < samples; ++i, ++n) {
      double env = level;
      if (i < ramp) env *= 0.5 * (1.0 - std::cos(kPi * static_cast<double>(i) / ramp));
      if (segment - i <= ramp)
        env *= 0.5 * (1.0 - std::cos(kPi * static_cast<double>(segment - i) / ramp));
      const double white = rng.normal();
      lp = 0.85 * lp + 0.15 * white;
      const double r1 = c1 * res1 - r * r * res1_prev + lp;
      res1_prev = res1;
      res1 = r1;
      const double r2 = c2 * res2 - r * r * res2_prev + 0.4 * lp;
      res2_prev = res2;
      res2 = r2;
      signal[n] = env * (res1 + 0.6 * res2);
    }
  }

  const double rms = std::sqrt(active_energy(signal, 0, samples) /
                               static_cast<double>(std::max<std::size_t>(samples, 1)));
  if (rms > 0.0)
    for (double& v : signal) v *= 0.05 / rms;
  return signal;
}

Vec synthetic_noise(std::size_t samples, double sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  Vec signal(samples);
  double lp = 0.0;
  double wander = 1.0;
  const auto wander_interval = static_cast<std::size_t>(0.25 * sample_rate);
  double wander_target = 1.0;
  for (std::size_t n = 0; n < samples; ++n) {
    if (n % std::max<std::size_t>(wander_interval, 1) == 0) wander_target = rng.uniform(0.6, 1.4);
    wander += (wander_target - wander) * 1e-4;
    lp = 0.92 * lp + 0.08 * rng.normal();
    signal[n] = wander * lp;
  }
  const double rms = std::sqrt(active_energy(signal, 0, samples) /
                               static_cast<double>(std::max<std::size_t>(samples, 1)));
  if (rms > 0.0)
    for (double& v : signal) v *= 0.05 / rms;
  return signal;
}

Vec builtin_far_end(const ScenarioSpec& spec, std::size_t samples) {
  return synthetic_speech(samples, spec.sample_rate, spec.seed ^ 0x66617265ULL, 0.15);
}

Vec builtin_near_end(const ScenarioSpec& spec, std::size_t samples) {
  return synthetic_speech(samples, spec.sample_rate, spec.seed ^ 0x6e656172ULL, 0.3);
}

Vec builtin_noise_bed(const ScenarioSpec& spec, std::size_t samples) {
  return synthetic_noise(samples, spec.sample_rate, spec.seed ^ 0x6e6f6973ULL);
}

SceneSignals render_scenario(const ScenarioSpec& spec, double duration_s) {
  if (!(duration_s > 0.0)) throw ConfigError("render_scenario: duration must be positive");
  const auto samples = static_cast<std::size_t>(std::lround(duration_s * spec.sample_rate));
  return synthesize_scene(spec, builtin_near_end(spec, samples), builtin_far_end(spec, samples),
                          builtin_noise_bed(spec, samples));
}

}  // namespace echobeam
