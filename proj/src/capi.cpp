#include "echobeam/echobeam.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "errors.hpp"
#include "metrics.hpp"
#include "runner.hpp"
#include "scenario_io.hpp"
#include "sim.hpp"
#include "wav.hpp"

struct eb_scenario {
  echobeam::ScenarioSpec spec;
  echobeam::SceneSignals scene;
};

struct eb_result {
  echobeam::RunResult run;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

template <typename Fn>
eb_status guarded(Fn&& fn) {
  try {
    fn();
    return EB_OK;
  } catch (const echobeam::ConfigError& e) {
    set_error(e.what());
    return EB_ERROR_INVALID_ARGUMENT;
  } catch (const echobeam::FormatError& e) {
    set_error(e.what());
    return EB_ERROR_FORMAT;
  } catch (const echobeam::IoError& e) {
    set_error(e.what());
    return EB_ERROR_IO;
  } catch (const echobeam::NumericError& e) {
    set_error(e.what());
    return EB_ERROR_NUMERIC;
  } catch (const std::exception& e) {
    set_error(e.what());
    return EB_ERROR_INTERNAL;
  } catch (...) {
    set_error("unknown failure");
    return EB_ERROR_INTERNAL;
  }
}

eb_status require(bool ok, const char* message) {
  if (ok) return EB_OK;
  set_error(message);
  return EB_ERROR_INVALID_ARGUMENT;
}

echobeam::RunOptions to_options(const eb_run_params* params) {
  echobeam::RunOptions options;
  if (params == nullptr) return options;
  if (params->provider != nullptr) options.provider = params->provider;
  if (params->frame_shift != 0) options.frame_shift = params->frame_shift;
  if (params->loss_alpha > 0.0) options.loss_alpha = params->loss_alpha;
  if (params->loss_beta > 0.0) options.loss_beta = params->loss_beta;
  options.oracle_aec = params->oracle_aec != 0;
  return options;
}

bool tap_selected(const char* taps, const char* name) {
  if (taps == nullptr) return true;
  const std::string list(taps);
  std::size_t pos = 0;
  while (pos < list.size()) {
    std::size_t next = list.find(',', pos);
    if (next == std::string::npos) next = list.size();
    if (list.compare(pos, next - pos, name) == 0) return true;
    pos = next + 1;
  }
  return false;
}

}  // namespace

extern "C" {

const char* eb_version(void) { return "echobeam 1.0.0"; }

const char* eb_last_error(void) { return g_last_error.c_str(); }

void eb_run_params_init(eb_run_params* params) {
  if (params == nullptr) return;
  params->provider = nullptr;
  params->frame_shift = 0;
  params->loss_alpha = 0.0;
  params->loss_beta = 0.0;
  params->oracle_aec = 0;
}

eb_status eb_scenario_generate(uint64_t seed, uint32_t channels, double duration_seconds,
                               eb_scenario** out_scenario) {
  if (eb_status s = require(out_scenario != nullptr, "out_scenario is NULL"); s != EB_OK) return s;
  return guarded([&] {
    auto scenario = std::make_unique<eb_scenario>();
    scenario->spec = echobeam::sample_scenario(seed, channels == 0 ? 4 : channels);
    scenario->scene = echobeam::render_scenario(scenario->spec, duration_seconds);
    *out_scenario = scenario.release();
  });
}

eb_status eb_scenario_generate_from_wavs(uint64_t seed, uint32_t channels,
                                         double duration_seconds, const char* far_end_wav,
                                         const char* near_end_wav, const char* noise_wav,
                                         eb_scenario** out_scenario) {
  if (eb_status s = require(out_scenario != nullptr, "out_scenario is NULL"); s != EB_OK) return s;
  return guarded([&] {
    auto scenario = std::make_unique<eb_scenario>();
    scenario->spec = echobeam::sample_scenario(seed, channels == 0 ? 4 : channels);
    scenario->scene = echobeam::render_scenario_from_wavs(
        scenario->spec, duration_seconds, far_end_wav == nullptr ? "" : far_end_wav,
        near_end_wav == nullptr ? "" : near_end_wav, noise_wav == nullptr ? "" : noise_wav);
    *out_scenario = scenario.release();
  });
}

eb_status eb_scenario_save(const eb_scenario* scenario, const char* directory) {
  if (eb_status s = require(scenario != nullptr && directory != nullptr,
                            "scenario and directory are required");
      s != EB_OK)
    return s;
  return guarded([&] { echobeam::save_scene(directory, scenario->spec, scenario->scene); });
}

eb_status eb_scenario_load(const char* directory, eb_scenario** out_scenario) {
  if (eb_status s = require(directory != nullptr && out_scenario != nullptr,
                            "directory and out_scenario are required");
      s != EB_OK)
    return s;
  return guarded([&] {
    echobeam::LoadedScene loaded = echobeam::load_scene(directory);
    auto scenario = std::make_unique<eb_scenario>();
    scenario->spec = std::move(loaded.spec);
    scenario->scene = std::move(loaded.scene);
    *out_scenario = scenario.release();
  });
}

void eb_scenario_free(eb_scenario* scenario) { delete scenario; }

uint64_t eb_scenario_seed(const eb_scenario* scenario) {
  return scenario == nullptr ? 0 : scenario->spec.seed;
}

uint32_t eb_scenario_channels(const eb_scenario* scenario) {
  return scenario == nullptr ? 0 : static_cast<uint32_t>(scenario->spec.mic_positions.size());
}

double eb_scenario_duration_seconds(const eb_scenario* scenario) {
  if (scenario == nullptr || scenario->spec.sample_rate <= 0.0) return 0.0;
  return static_cast<double>(scenario->scene.loudspeaker.size()) / scenario->spec.sample_rate;
}

eb_status eb_run(const eb_scenario* scenario, const eb_run_params* params,
                 eb_result** out_result) {
  if (eb_status s = require(scenario != nullptr && out_result != nullptr,
                            "scenario and out_result are required");
      s != EB_OK)
    return s;
  return guarded([&] {
    auto result = std::make_unique<eb_result>();
    result->run = echobeam::run_scene(scenario->scene, to_options(params));
    *out_result = result.release();
  });
}

void eb_result_free(eb_result* result) { delete result; }

eb_status eb_result_write_wavs(const eb_result* result, const char* directory, const char* taps) {
  if (eb_status s = require(result != nullptr && directory != nullptr,
                            "result and directory are required");
      s != EB_OK)
    return s;
  return guarded([&] {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw echobeam::IoError(std::string("cannot create directory: ") + directory);
    const fs::path dir(directory);
    const double rate = result->run.config.sample_rate;
    const echobeam::PipelineOutput& out = result->run.output;

    struct Entry {
      const char* tap;
      const char* mixture_name;
      const echobeam::Vec* mixture;
      const echobeam::Vec* echo;
      const echobeam::Vec* speech;
      const echobeam::Vec* noise;
    };
    const Entry entries[3] = {
        {"aec", "e1.wav", &out.mixture.aec, &out.echo.aec, &out.speech.aec, &out.noise.aec},
        {"bf", "u_bf.wav", &out.mixture.bf, &out.echo.bf, &out.speech.bf, &out.noise.bf},
        {"pf", "u_pf.wav", &out.mixture.pf, &out.echo.pf, &out.speech.pf, &out.noise.pf}};
    for (const Entry& entry : entries) {
      if (!tap_selected(taps, entry.tap)) continue;
      echobeam::write_wav((dir / entry.mixture_name).string(), {*entry.mixture}, rate);
      if (!entry.echo->empty()) {
        const std::string tap(entry.tap);
        echobeam::write_wav((dir / ("pr_echo_" + tap + ".wav")).string(), {*entry.echo}, rate);
        echobeam::write_wav((dir / ("pr_speech_" + tap + ".wav")).string(), {*entry.speech}, rate);
        echobeam::write_wav((dir / ("pr_noise_" + tap + ".wav")).string(), {*entry.noise}, rate);
      }
    }
  });
}

eb_status eb_result_write_erle_csv(const eb_result* result, const char* directory) {
  if (eb_status s = require(result != nullptr && directory != nullptr,
                            "result and directory are required");
      s != EB_OK)
    return s;
  return guarded([&] {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw echobeam::IoError(std::string("cannot create directory: ") + directory);
    const fs::path dir(directory);
    const echobeam::PipelineOutput& out = result->run.output;
    const struct {
      const char* tap;
      const echobeam::Vec* processed;
    } taps[3] = {{"aec", &out.echo.aec}, {"bf", &out.echo.bf}, {"pf", &out.echo.pf}};
    for (const auto& tap : taps) {
      if (tap.processed->empty()) continue;
      echobeam::Vec curve = echobeam::erle_curve(
          std::span<const double>(result->run.echo_ref.data(),
                                  std::min(result->run.echo_ref.size(), tap.processed->size())),
          std::span<const double>(tap.processed->data(),
                                  std::min(result->run.echo_ref.size(), tap.processed->size())));
      curve.resize(std::min(curve.size(), result->run.output.valid_samples));
      std::ofstream file(dir / (std::string("erle_") + tap.tap + ".csv"));
      if (!file) throw echobeam::IoError("cannot write suppression curve CSV");
      file << echobeam::erle_curve_csv(curve);
    }
  });
}

eb_status eb_result_metrics_csv(const eb_result* result, const char* scenario_id,
                                char** out_rows) {
  if (eb_status s = require(result != nullptr && out_rows != nullptr,
                            "result and out_rows are required");
      s != EB_OK)
    return s;
  return guarded([&] {
    const std::string rows = echobeam::metrics_csv_rows(
        scenario_id == nullptr ? "scenario" : scenario_id, result->run.report);
    char* copy = new char[rows.size() + 1];
    std::memcpy(copy, rows.c_str(), rows.size() + 1);
    *out_rows = copy;
  });
}

const char* eb_metrics_csv_header(void) { return echobeam::kMetricsCsvHeader; }

eb_status eb_result_metric(const eb_result* result, const char* tap, const char* phase,
                           const char* metric, double* out_value) {
  if (eb_status s = require(result != nullptr && tap != nullptr && phase != nullptr &&
                                metric != nullptr && out_value != nullptr,
                            "all arguments are required");
      s != EB_OK)
    return s;
  const echobeam::MetricRow* row = result->run.report.find(tap, phase);
  if (row == nullptr) {
    set_error(std::string("no metric row for tap '") + tap + "', phase '" + phase + "'");
    return EB_ERROR_INVALID_ARGUMENT;
  }
  const std::string name(metric);
  if (name == "erle")
    *out_value = row->erle_db;
  else if (name == "noise_supp")
    *out_value = row->noise_supp_db;
  else if (name == "sdr")
    *out_value = row->sdr_db;
  else if (name == "loss")
    *out_value = row->loss;
  else {
    set_error("unknown metric '" + name + "'");
    return EB_ERROR_INVALID_ARGUMENT;
  }
  return EB_OK;
}

eb_status eb_result_timing(const eb_result* result, double* out_mean_block_ms,
                           double* out_max_block_ms) {
  if (eb_status s = require(result != nullptr, "result is required"); s != EB_OK) return s;
  if (out_mean_block_ms != nullptr) *out_mean_block_ms = result->run.output.mean_block_ms;
  if (out_max_block_ms != nullptr) *out_max_block_ms = result->run.output.max_block_ms;
  return EB_OK;
}

eb_status eb_result_block_count(const eb_result* result, uint64_t* out_blocks) {
  if (eb_status s = require(result != nullptr && out_blocks != nullptr,
                            "result and out_blocks are required");
      s != EB_OK)
    return s;
  *out_blocks = result->run.output.blocks;
  return EB_OK;
}

eb_status eb_masks_export(const eb_scenario* scenario, const char* provider,
                          uint32_t frame_shift, const char* path) {
  if (eb_status s = require(scenario != nullptr && path != nullptr,
                            "scenario and path are required");
      s != EB_OK)
    return s;
  return guarded([&] {
    echobeam::RunOptions options;
    if (provider != nullptr) options.provider = provider;
    if (frame_shift != 0) options.frame_shift = frame_shift;
    echobeam::export_masks(scenario->scene, options, path);
  });
}

void eb_string_free(char* text) { delete[] text; }

}  // extern "C"
