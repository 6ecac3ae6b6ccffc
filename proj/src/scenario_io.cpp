#include "scenario_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"
#include "wav.hpp"

namespace echobeam {

namespace {

constexpr const char* kFormatTag = "echobeam-scenario-v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const Point3& p) { return fmt(p[0]) + " " + fmt(p[1]) + " " + fmt(p[2]); }

Point3 parse_point(const std::string& value, const std::string& key) {
  std::istringstream in(value);
  Point3 p{};
  if (!(in >> p[0] >> p[1] >> p[2]))
    throw FormatError("scenario spec: cannot parse point for key '" + key + "'");
  return p;
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("scenario spec: missing key '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw FormatError("scenario spec: bad number for key '" + key + "'");
  }
}

std::vector<Vec> load_channels(const std::filesystem::path& path) {
  return read_wav(path.string()).channels;
}

}  // namespace

std::string format_scenario_spec(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "format = " << kFormatTag << "\n";
  out << "seed = " << spec.seed << "\n";
  out << "sample_rate = " << fmt(spec.sample_rate) << "\n";
  out << "channels = " << spec.mic_positions.size() << "\n";
  out << "room = " << fmt(spec.room) << "\n";
  out << "t60 = " << fmt(spec.t60) << "\n";
  out << "array_center = " << fmt(spec.array_center) << "\n";
  out << "array_diameter = " << fmt(spec.array_diameter) << "\n";
  for (std::size_t p = 0; p < spec.mic_positions.size(); ++p)
    out << "mic_" << p << " = " << fmt(spec.mic_positions[p]) << "\n";
  out << "loudspeaker = " << fmt(spec.loudspeaker) << "\n";
  out << "talker = " << fmt(spec.talker) << "\n";
  out << "ser_db = " << fmt(spec.ser_db) << "\n";
  out << "snr_db = " << fmt(spec.snr_db) << "\n";
  out << "nearend_onset_s = " << fmt(spec.nearend_onset_s) << "\n";
  return out.str();
}

ScenarioSpec parse_scenario_spec(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("scenario spec: line without '=': " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (auto it = kv.find("format"); it == kv.end() || it->second != kFormatTag)
    throw FormatError("scenario spec: missing or unknown format tag");

  ScenarioSpec spec;
  spec.seed = static_cast<std::uint64_t>(std::stoull(kv.at("seed")));
  spec.sample_rate = parse_double(kv, "sample_rate");
  spec.room = parse_point(kv.at("room"), "room");
  spec.t60 = parse_double(kv, "t60");
  spec.array_center = parse_point(kv.at("array_center"), "array_center");
  spec.array_diameter = parse_double(kv, "array_diameter");
  spec.loudspeaker = parse_point(kv.at("loudspeaker"), "loudspeaker");
  spec.talker = parse_point(kv.at("talker"), "talker");
  spec.ser_db = parse_double(kv, "ser_db");
  spec.snr_db = parse_double(kv, "snr_db");
  spec.nearend_onset_s = parse_double(kv, "nearend_onset_s");

  const auto channels = static_cast<std::size_t>(parse_double(kv, "channels"));
  spec.mic_positions.resize(channels);
  for (std::size_t p = 0; p < channels; ++p) {
    const std::string key = "mic_" + std::to_string(p);
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("scenario spec: missing key '" + key + "'");
    spec.mic_positions[p] = parse_point(it->second, key);
  }
  return spec;
}

void write_scenario_spec(const std::string& path, const ScenarioSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("scenario spec: cannot open for writing: " + path);
  out << format_scenario_spec(spec);
  if (!out) throw IoError("scenario spec: write failed: " + path);
}

ScenarioSpec read_scenario_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("scenario spec: cannot open: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_spec(buffer.str());
}

void save_scene(const std::string& directory, const ScenarioSpec& spec,
                const SceneSignals& scene) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("save_scene: cannot create directory: " + directory);
  const fs::path dir(directory);

  write_scenario_spec((dir / "scenario.spec").string(), spec);
  write_wav((dir / "x.wav").string(), {scene.loudspeaker}, spec.sample_rate);
  write_wav((dir / "d.wav").string(), scene.echo, spec.sample_rate);
  write_wav((dir / "s.wav").string(), scene.speech, spec.sample_rate);
  write_wav((dir / "n.wav").string(), scene.noise, spec.sample_rate);
  write_wav((dir / "sref.wav").string(), {scene.reference}, spec.sample_rate);
  write_wav((dir / "h.wav").string(), scene.echo_rirs, spec.sample_rate);
  write_wav((dir / "g.wav").string(), scene.speech_rirs, spec.sample_rate);

  // The stored mixture is the sum of the float32-quantized components, so a
  // reader summing the component files reproduces y.wav bit-exact.
  const std::size_t channels = scene.mic.size();
  const std::size_t samples = channels == 0 ? 0 : scene.mic[0].size();
  std::vector<Vec> mixture(channels, Vec(samples));
  for (std::size_t p = 0; p < channels; ++p)
    for (std::size_t n = 0; n < samples; ++n)
      mixture[p][n] = static_cast<double>(static_cast<float>(scene.echo[p][n])) +
                      static_cast<double>(static_cast<float>(scene.speech[p][n])) +
                      static_cast<double>(static_cast<float>(scene.noise[p][n]));
  write_wav((dir / "y.wav").string(), mixture, spec.sample_rate);
}

SceneSignals render_scenario_from_wavs(const ScenarioSpec& spec, double duration_s,
                                       const std::string& far_end_wav,
                                       const std::string& near_end_wav,
                                       const std::string& noise_wav) {
  if (!(duration_s > 0.0)) throw ConfigError("render_scenario_from_wavs: bad duration");
  const auto samples = static_cast<std::size_t>(std::lround(duration_s * spec.sample_rate));

  auto source = [&](const std::string& path, Vec fallback) {
    if (path.empty()) return fallback;
    const WavData wav = read_wav(path);
    if (wav.sample_rate != spec.sample_rate)
      throw FormatError("source wav '" + path + "' is sampled at " +
                        std::to_string(wav.sample_rate) + " Hz, scenario wants " +
                        std::to_string(spec.sample_rate));
    if (wav.channels.empty()) throw FormatError("source wav '" + path + "' has no channels");
    Vec signal = wav.channels.front();
    signal.resize(samples, 0.0);
    return signal;
  };
  const Vec far_end = source(far_end_wav, builtin_far_end(spec, samples));
  const Vec dry = source(near_end_wav, builtin_near_end(spec, samples));
  const Vec bed = source(noise_wav, builtin_noise_bed(spec, samples));
  return synthesize_scene(spec, dry, far_end, bed);
}

LoadedScene load_scene(const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  LoadedScene loaded;
  loaded.spec = read_scenario_spec((dir / "scenario.spec").string());

  SceneSignals& scene = loaded.scene;
  scene.loudspeaker = load_channels(dir / "x.wav").at(0);
  scene.echo = load_channels(dir / "d.wav");
  scene.speech = load_channels(dir / "s.wav");
  scene.noise = load_channels(dir / "n.wav");
  scene.reference = load_channels(dir / "sref.wav").at(0);
  scene.echo_rirs = load_channels(dir / "h.wav");
  scene.speech_rirs = load_channels(dir / "g.wav");

  const std::size_t channels = loaded.spec.mic_positions.size();
  if (scene.echo.size() != channels || scene.speech.size() != channels ||
      scene.noise.size() != channels)
    throw FormatError("load_scene: component channel count does not match the spec");
  const std::size_t samples = scene.loudspeaker.size();
  for (const auto* group : {&scene.echo, &scene.speech, &scene.noise})
    for (const Vec& c : *group)
      if (c.size() != samples) throw FormatError("load_scene: signal lengths differ");

  scene.sample_rate = loaded.spec.sample_rate;
  scene.onset_sample = std::min(
      samples,
      static_cast<std::size_t>(std::max(0.0, loaded.spec.nearend_onset_s * loaded.spec.sample_rate)));
  scene.mic.assign(channels, Vec(samples));
  for (std::size_t p = 0; p < channels; ++p)
    for (std::size_t n = 0; n < samples; ++n)
      scene.mic[p][n] = scene.echo[p][n] + scene.speech[p][n] + scene.noise[p][n];
  return loaded;
}

}  // namespace echobeam
