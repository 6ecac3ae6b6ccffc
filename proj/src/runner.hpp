#pragma once

#include <memory>
#include <string>

#include "control.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "sim.hpp"

namespace echobeam {

struct RunOptions {
  std::string provider = "oracle";
  std::size_t frame_shift = 1024;
  double loss_alpha = 1.0;
  double loss_beta = 1.0;
  // Freeze the canceller at the true leading echo-path taps even for
  // non-oracle providers (lets a file-provider run replay an oracle run).
  bool oracle_aec = false;
};

struct RunResult {
  FrameConfig config;
  PipelineOutput output;
  MetricReport report;
  // First-mic references kept for curve export.
  Vec echo_ref;
  Vec noise_ref;
  Vec speech_ref;
};

// Provider text grammar: "oracle", "oracle-direct",
// "constant[:mu=..][,aec=..][,bf=..][,pf=..]", "file:<path>".
std::unique_ptr<MaskProvider> make_provider(const std::string& text, const FrameConfig& config,
                                            std::size_t stream_blocks);

// End-to-end: provider + canceller setup (frozen true-path canceller for
// oracle providers, adaptive otherwise), block loop, metrics.
RunResult run_scene(const SceneSignals& scene, const RunOptions& options);

// Runs the provider over the scene and serializes the per-block masks.
void export_masks(const SceneSignals& scene, const RunOptions& options, const std::string& path);

}  // namespace echobeam
