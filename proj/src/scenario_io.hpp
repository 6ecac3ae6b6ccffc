#pragma once

#include <string>

#include "sim.hpp"

namespace echobeam {

// Key-value text rendering of a scenario spec; deterministic formatting.
std::string format_scenario_spec(const ScenarioSpec& spec);
ScenarioSpec parse_scenario_spec(const std::string& text);

void write_scenario_spec(const std::string& path, const ScenarioSpec& spec);
ScenarioSpec read_scenario_spec(const std::string& path);

// Writes scenario.spec plus x/y/d/s/n/sref WAVs and the true RIR pairs into
// `directory` (created if missing). The mixture WAV is re-summed from the
// quantized component files so that y == d + s + n holds sample-exact on disk.
void save_scene(const std::string& directory, const ScenarioSpec& spec,
                const SceneSignals& scene);

struct LoadedScene {
  ScenarioSpec spec;
  SceneSignals scene;
};

// Reads a scenario directory back. The in-memory mixture is rebuilt from the
// loaded components, keeping the stream exactly linear.
LoadedScene load_scene(const std::string& directory);

// Scene rendering with user-supplied source material. Any empty path falls
// back to the built-in generator for that role. Files must match the
// scenario sample rate (first channel is used) and are cut or zero-padded to
// the requested duration.
SceneSignals render_scenario_from_wavs(const ScenarioSpec& spec, double duration_s,
                                       const std::string& far_end_wav,
                                       const std::string& near_end_wav,
                                       const std::string& noise_wav);

}  // namespace echobeam
