#include "runner.hpp"

#include <cmath>

#include "errors.hpp"

namespace echobeam {

namespace {

bool starts_with(const std::string& text, const std::string& prefix) {
  return text.rfind(prefix, 0) == 0;
}

struct ConstantValues {
  double step = 0.5;
  double error_norm = 1.0;
  double beamformer = 0.5;
  double postfilter = 1.0;
};

ConstantValues parse_constant_values(const std::string& args) {
  ConstantValues values;
  std::size_t pos = 0;
  while (pos < args.size()) {
    std::size_t next = args.find(',', pos);
    if (next == std::string::npos) next = args.size();
    const std::string item = args.substr(pos, next - pos);
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("constant provider: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    double parsed = 0.0;
    try {
      parsed = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("constant provider: bad number in '" + item + "'");
    }
    if (key == "mu")
      values.step = parsed;
    else if (key == "aec")
      values.error_norm = parsed;
    else if (key == "bf")
      values.beamformer = parsed;
    else if (key == "pf")
      values.postfilter = parsed;
    else
      throw ConfigError("constant provider: unknown key '" + key + "'");
    pos = next + 1;
  }
  return values;
}

bool is_oracle_provider(const std::string& text) {
  return text == "oracle" || text == "oracle-direct";
}

}  // namespace

std::unique_ptr<MaskProvider> make_provider(const std::string& text, const FrameConfig& config,
                                            std::size_t stream_blocks) {
  if (text == "oracle") return std::make_unique<OracleMaskProvider>(config, false);
  if (text == "oracle-direct") return std::make_unique<OracleMaskProvider>(config, true);
  if (text == "constant" || starts_with(text, "constant:")) {
    const std::string args = text.size() > 9 ? text.substr(9) : std::string();
    const ConstantValues v = parse_constant_values(args);
    return std::make_unique<ConstantMaskProvider>(config, v.step, v.error_norm, v.beamformer,
                                                  v.postfilter);
  }
  if (starts_with(text, "file:")) {
    const std::string path = text.substr(5);
    if (path.empty()) throw ConfigError("file provider: empty path");
    return std::make_unique<FileMaskProvider>(path, config, stream_blocks);
  }
  throw ConfigError("unknown mask provider '" + text + "'");
}

RunResult run_scene(const SceneSignals& scene, const RunOptions& options) {
  if (scene.mic.empty()) throw ConfigError("run_scene: scene has no microphone signals");
  const FrameConfig config =
      make_frame_config(options.frame_shift, scene.mic.size(), scene.sample_rate);

  const std::size_t samples = scene.loudspeaker.size();
  const std::size_t blocks = (samples + config.frame_shift - 1) / config.frame_shift;

  std::unique_ptr<MaskProvider> provider = make_provider(options.provider, config, blocks);
  const bool frozen_truth = options.oracle_aec || is_oracle_provider(options.provider);
  AecFilter aec =
      frozen_truth ? make_oracle_aec(config, scene.echo_rirs) : AecFilter(config);

  RunResult result;
  result.config = config;
  result.output = process_stream(scene.loudspeaker, scene.mic, &scene.echo, &scene.speech,
                                 &scene.noise, *provider, config, std::move(aec));
  result.report = evaluate_run(scene.echo[0], scene.noise[0], scene.reference, result.output,
                               scene.onset_sample, options.loss_alpha, options.loss_beta);
  result.echo_ref = scene.echo[0];
  result.noise_ref = scene.noise[0];
  result.speech_ref = scene.reference;
  return result;
}

void export_masks(const SceneSignals& scene, const RunOptions& options, const std::string& path) {
  RunResult result = run_scene(scene, options);
  write_mask_file(path, result.config, result.output.masks_used);
}

}  // namespace echobeam
