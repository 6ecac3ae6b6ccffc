#pragma once

#include <span>
#include <string>
#include <vector>

#include "pipeline.hpp"
#include "types.hpp"

namespace echobeam {

// dB ceiling/floor for ratio metrics with silent numerators or denominators.
constexpr double kMetricClipDb = 80.0;

// Per-sample suppression curve 10*log10(E[ref^2]/E[proc^2]) with one-pole
// recursive averaging.
Vec erle_curve(std::span<const double> reference, std::span<const double> processed,
               double smoothing = 0.999);

// Block-sum energy ratio in dB over [begin, end).
double interval_ratio_db(std::span<const double> reference, std::span<const double> processed,
                         std::size_t begin, std::size_t end);

// alpha*||echo|| + beta*||noise|| + ||reference - speech|| over [begin, end).
double component_loss(std::span<const double> processed_echo,
                      std::span<const double> processed_noise,
                      std::span<const double> processed_speech,
                      std::span<const double> reference, double alpha = 1.0, double beta = 1.0,
                      std::size_t begin = 0, std::size_t end = SIZE_MAX);

// 10*log10(||ref||^2 / ||ref - g*proc||^2) with the least-squares scalar gain
// g; a stand-in for perceptual speech-distortion scores.
double speech_distortion_ratio(std::span<const double> reference,
                               std::span<const double> processed_speech, std::size_t begin = 0,
                               std::size_t end = SIZE_MAX);

struct MetricRow {
  std::string tap;    // "aec" | "bf" | "pf"
  std::string phase;  // "single_talk" | "double_talk"
  double erle_db = 0.0;
  double noise_supp_db = 0.0;
  double sdr_db = 0.0;
  double loss = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;  // 3 taps x 2 phases, tap-major
  std::size_t onset_sample = 0;
  std::size_t valid_end = 0;

  const MetricRow* find(const std::string& tap, const std::string& phase) const;
};

// Evaluates a pipeline run against the first-mic echo/noise images and the
// speech reference. Phases split at the talker onset; everything is clipped
// to the pipeline's valid sample range.
MetricReport evaluate_run(std::span<const double> echo_ref, std::span<const double> noise_ref,
                          std::span<const double> speech_ref, const PipelineOutput& output,
                          std::size_t onset_sample, double alpha = 1.0, double beta = 1.0);

extern const char* const kMetricsCsvHeader;  // "scenario_id,tap,phase,E_dB,N_dB,SDR_dB,loss"

// CSV rows (no header) for one scenario.
std::string metrics_csv_rows(const std::string& scenario_id, const MetricReport& report);

// "sample_index,erle_dB" rows for one tap's suppression curve.
std::string erle_curve_csv(std::span<const double> curve);

}  // namespace echobeam
