#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "errors.hpp"

namespace echobeam {

namespace {

constexpr double kTiny = 1e-300;

double clip_db(double db) { return std::clamp(db, -kMetricClipDb, kMetricClipDb); }

double ratio_db(double num, double den) {
  return clip_db(10.0 * std::log10((num + kTiny) / (den + kTiny)));
}

double energy(std::span<const double> v, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t n = begin; n < std::min(end, v.size()); ++n) sum += v[n] * v[n];
  return sum;
}

double norm2(std::span<const double> v, std::size_t begin, std::size_t end) {
  return std::sqrt(energy(v, begin, end));
}

}  // namespace

Vec erle_curve(std::span<const double> reference, std::span<const double> processed,
               double smoothing) {
  if (reference.size() != processed.size())
    throw ConfigError("erle_curve: signals must share one length");
  if (!(smoothing > 0.0 && smoothing < 1.0))
    throw ConfigError("erle_curve: smoothing factor must lie in (0, 1)");
  Vec curve(reference.size());
  double ref_power = 0.0, proc_power = 0.0;
  for (std::size_t n = 0; n < reference.size(); ++n) {
    ref_power = smoothing * ref_power + (1.0 - smoothing) * reference[n] * reference[n];
    proc_power = smoothing * proc_power + (1.0 - smoothing) * processed[n] * processed[n];
    curve[n] = ratio_db(ref_power, proc_power);
  }
  return curve;
}

double interval_ratio_db(std::span<const double> reference, std::span<const double> processed,
                         std::size_t begin, std::size_t end) {
  return ratio_db(energy(reference, begin, end), energy(processed, begin, end));
}

double component_loss(std::span<const double> processed_echo,
                      std::span<const double> processed_noise,
                      std::span<const double> processed_speech,
                      std::span<const double> reference, double alpha, double beta,
                      std::size_t begin, std::size_t end) {
  double distortion = 0.0;
  const std::size_t stop = std::min({end, reference.size(), processed_speech.size()});
  for (std::size_t n = begin; n < stop; ++n) {
    const double diff = reference[n] - processed_speech[n];
    distortion += diff * diff;
  }
  return alpha * norm2(processed_echo, begin, end) + beta * norm2(processed_noise, begin, end) +
         std::sqrt(distortion);
}

double speech_distortion_ratio(std::span<const double> reference,
                               std::span<const double> processed_speech, std::size_t begin,
                               std::size_t end) {
  const std::size_t stop = std::min({end, reference.size(), processed_speech.size()});
  double cross = 0.0, proc_energy = 0.0, ref_energy = 0.0;
  for (std::size_t n = begin; n < stop; ++n) {
    cross += reference[n] * processed_speech[n];
    proc_energy += processed_speech[n] * processed_speech[n];
    ref_energy += reference[n] * reference[n];
  }
  const double gain = proc_energy > 0.0 ? cross / proc_energy : 0.0;
  double residual = 0.0;
  for (std::size_t n = begin; n < stop; ++n) {
    const double diff = reference[n] - gain * processed_speech[n];
    residual += diff * diff;
  }
  return ratio_db(ref_energy, residual);
}

const MetricRow* MetricReport::find(const std::string& tap, const std::string& phase) const {
  for (const MetricRow& row : rows)
    if (row.tap == tap && row.phase == phase) return &row;
  return nullptr;
}

MetricReport evaluate_run(std::span<const double> echo_ref, std::span<const double> noise_ref,
                          std::span<const double> speech_ref, const PipelineOutput& output,
                          std::size_t onset_sample, double alpha, double beta) {
  MetricReport report;
  report.valid_end = output.valid_samples;
  report.onset_sample = std::min(onset_sample, report.valid_end);

  struct TapRef {
    const char* name;
    const Vec* echo;
    const Vec* noise;
    const Vec* speech;
  };
  const TapRef taps[3] = {{"aec", &output.echo.aec, &output.noise.aec, &output.speech.aec},
                          {"bf", &output.echo.bf, &output.noise.bf, &output.speech.bf},
                          {"pf", &output.echo.pf, &output.noise.pf, &output.speech.pf}};
  const struct {
    const char* name;
    std::size_t begin, end;
  } phases[2] = {{"single_talk", 0, report.onset_sample},
                 {"double_talk", report.onset_sample, report.valid_end}};

  for (const TapRef& tap : taps) {
    for (const auto& phase : phases) {
      MetricRow row;
      row.tap = tap.name;
      row.phase = phase.name;
      row.erle_db = interval_ratio_db(echo_ref, *tap.echo, phase.begin, phase.end);
      row.noise_supp_db = interval_ratio_db(noise_ref, *tap.noise, phase.begin, phase.end);
      row.sdr_db = speech_distortion_ratio(speech_ref, *tap.speech, phase.begin, phase.end);
      row.loss = component_loss(*tap.echo, *tap.noise, *tap.speech, speech_ref, alpha, beta,
                                phase.begin, phase.end);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

const char* const kMetricsCsvHeader = "scenario_id,tap,phase,E_dB,N_dB,SDR_dB,loss";

std::string metrics_csv_rows(const std::string& scenario_id, const MetricReport& report) {
  std::ostringstream out;
  char buf[160];
  for (const MetricRow& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.6f,%.6f,%.6f,%.9g", scenario_id.c_str(),
                  row.tap.c_str(), row.phase.c_str(), row.erle_db, row.noise_supp_db, row.sdr_db,
                  row.loss);
    out << buf << "\n";
  }
  return out.str();
}

std::string erle_curve_csv(std::span<const double> curve) {
  std::ostringstream out;
  out << "sample_index,erle_dB\n";
  char buf[64];
  for (std::size_t n = 0; n < curve.size(); ++n) {
    std::snprintf(buf, sizeof(buf), "%zu,%.4f", n, curve[n]);
    out << buf << "\n";
  }
  return out.str();
}

}  // namespace echobeam
