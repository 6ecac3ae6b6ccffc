// Command-line front end for the echobeam engine. Talks to the engine
// exclusively through the public C interface.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "echobeam/echobeam.h"

namespace {

namespace fs = std::filesystem;

constexpr const char* kOutputRootEnv = "ECHOBEAM_OUT";

int exit_code_for(eb_status status) {
  switch (status) {
    case EB_OK:
      return 0;
    case EB_ERROR_INVALID_ARGUMENT:
      return 2;
    case EB_ERROR_IO:
    case EB_ERROR_FORMAT:
      return 3;
    case EB_ERROR_NUMERIC:
      return 4;
    default:
      return 5;
  }
}

[[noreturn]] void fail(eb_status status, const std::string& context) {
  std::fprintf(stderr, "error: %s: %s\n", context.c_str(), eb_last_error());
  std::exit(exit_code_for(status));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    if (next > pos) items.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  return items;
}

std::string default_output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env != nullptr ? std::string(env) : std::string("echobeam-out");
}

struct ScenarioHandle {
  std::unique_ptr<eb_scenario, decltype(&eb_scenario_free)> ptr{nullptr, eb_scenario_free};
};

bool is_scenario_dir(const fs::path& path) { return fs::exists(path / "scenario.spec"); }

// Each entry is either a scenario directory itself or a parent holding them.
std::vector<fs::path> collect_scenario_dirs(const std::vector<std::string>& entries) {
  std::vector<fs::path> dirs;
  for (const std::string& entry : entries) {
    for (const std::string& item : split_list(entry)) {
      const fs::path path(item);
      if (is_scenario_dir(path)) {
        dirs.push_back(path);
        continue;
      }
      if (fs::is_directory(path)) {
        std::vector<fs::path> children;
        for (const auto& child : fs::directory_iterator(path))
          if (child.is_directory() && is_scenario_dir(child.path())) children.push_back(child.path());
        std::sort(children.begin(), children.end());
        dirs.insert(dirs.end(), children.begin(), children.end());
        if (!children.empty()) continue;
      }
      std::fprintf(stderr, "error: no scenario found at '%s'\n", item.c_str());
      std::exit(2);
    }
  }
  return dirs;
}

int cmd_generate(const std::string& seeds_text, std::string out_dir, uint32_t channels,
                 double duration, const std::string& far_end, const std::string& near_end,
                 const std::string& noise) {
  if (out_dir.empty()) out_dir = default_output_root();
  const std::vector<std::string> seed_items = split_list(seeds_text);
  if (seed_items.empty()) {
    std::fprintf(stderr, "error: --seeds needs at least one seed\n");
    return 2;
  }
  for (const std::string& item : seed_items) {
    uint64_t seed = 0;
    try {
      seed = std::stoull(item);
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: bad seed '%s'\n", item.c_str());
      return 2;
    }
    eb_scenario* scenario = nullptr;
    eb_status status;
    if (far_end.empty() && near_end.empty() && noise.empty())
      status = eb_scenario_generate(seed, channels, duration, &scenario);
    else
      status = eb_scenario_generate_from_wavs(
          seed, channels, duration, far_end.empty() ? nullptr : far_end.c_str(),
          near_end.empty() ? nullptr : near_end.c_str(),
          noise.empty() ? nullptr : noise.c_str(), &scenario);
    if (status != EB_OK) fail(status, "generating scenario " + item);
    ScenarioHandle handle;
    handle.ptr.reset(scenario);
    const fs::path dir = fs::path(out_dir) / ("scenario_" + item);
    if (eb_status s = eb_scenario_save(scenario, dir.string().c_str()); s != EB_OK)
      fail(s, "saving scenario " + item);
    std::printf("wrote %s\n", dir.string().c_str());
  }
  return 0;
}

struct RunJob {
  fs::path scenario_dir;
  fs::path output_dir;
  std::string id;
  std::string csv_rows;
  double mean_block_ms = 0.0;
  double metric[3][2][4] = {};  // tap x phase x {erle, noise, sdr, loss}
  eb_status status = EB_OK;
  std::string error;
};

const char* const kTapNames[3] = {"aec", "bf", "pf"};
const char* const kPhaseNames[2] = {"single_talk", "double_talk"};
const char* const kMetricNames[4] = {"erle", "noise_supp", "sdr", "loss"};

void run_one(RunJob& job, const eb_run_params& params, const std::string& taps) {
  eb_scenario* scenario = nullptr;
  eb_status s = eb_scenario_load(job.scenario_dir.string().c_str(), &scenario);
  if (s != EB_OK) {
    job.status = s;
    job.error = eb_last_error();
    return;
  }
  ScenarioHandle handle;
  handle.ptr.reset(scenario);

  eb_result* result = nullptr;
  s = eb_run(scenario, &params, &result);
  if (s != EB_OK) {
    job.status = s;
    job.error = eb_last_error();
    return;
  }
  std::unique_ptr<eb_result, decltype(&eb_result_free)> result_handle(result, eb_result_free);

  if ((s = eb_result_write_wavs(result, job.output_dir.string().c_str(),
                                taps.empty() ? nullptr : taps.c_str())) != EB_OK ||
      (s = eb_result_write_erle_csv(result, job.output_dir.string().c_str())) != EB_OK) {
    job.status = s;
    job.error = eb_last_error();
    return;
  }

  char* rows = nullptr;
  if ((s = eb_result_metrics_csv(result, job.id.c_str(), &rows)) != EB_OK) {
    job.status = s;
    job.error = eb_last_error();
    return;
  }
  job.csv_rows = rows;
  eb_string_free(rows);

  eb_result_timing(result, &job.mean_block_ms, nullptr);
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 2; ++p)
      for (int m = 0; m < 4; ++m)
        eb_result_metric(result, kTapNames[t], kPhaseNames[p], kMetricNames[m],
                         &job.metric[t][p][m]);
}

int cmd_run(const std::vector<std::string>& scenarios, const std::string& provider,
            const std::string& taps, std::string out_dir, unsigned jobs, uint32_t frame_shift,
            double alpha, double beta, bool oracle_aec) {
  if (out_dir.empty()) out_dir = default_output_root();
  const std::vector<fs::path> dirs = collect_scenario_dirs(scenarios);
  if (dirs.empty()) {
    std::fprintf(stderr, "error: no scenarios to run\n");
    return 2;
  }

  eb_run_params params;
  eb_run_params_init(&params);
  params.provider = provider.c_str();
  params.frame_shift = frame_shift;
  params.loss_alpha = alpha;
  params.loss_beta = beta;
  params.oracle_aec = oracle_aec ? 1 : 0;

  std::vector<RunJob> run_jobs(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    run_jobs[i].scenario_dir = dirs[i];
    run_jobs[i].id = dirs[i].filename().string();
    run_jobs[i].output_dir = fs::path(out_dir) / run_jobs[i].id;
  }

  const unsigned workers = std::max(1u, jobs);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < run_jobs.size(); i = next.fetch_add(1))
        run_one(run_jobs[i], params, taps);
    });
  }
  for (std::thread& t : pool) t.join();

  for (const RunJob& job : run_jobs)
    if (job.status != EB_OK) {
      std::fprintf(stderr, "error: %s: %s\n", job.id.c_str(), job.error.c_str());
      return exit_code_for(job.status);
    }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream csv(fs::path(out_dir) / "metrics.csv");
  csv << eb_metrics_csv_header() << "\n";
  for (const RunJob& job : run_jobs) csv << job.csv_rows;
  csv.close();

  double mean[3][2][4] = {};
  double mean_block_ms = 0.0;
  for (const RunJob& job : run_jobs) {
    mean_block_ms += job.mean_block_ms;
    for (int t = 0; t < 3; ++t)
      for (int p = 0; p < 2; ++p)
        for (int m = 0; m < 4; ++m) mean[t][p][m] += job.metric[t][p][m];
  }
  const double count = static_cast<double>(run_jobs.size());
  mean_block_ms /= count;
  for (auto& tap : mean)
    for (auto& phase : tap)
      for (double& v : phase) v /= count;

  const char* const stage_labels[3] = {"AEC", "AEC+BF", "AEC+BF+PF"};
  std::printf("\nAverage performance over %zu scenario(s), provider %s\n", run_jobs.size(),
              provider.c_str());
  std::printf("%-11s | %19s | %27s\n", "", "single-talk", "double-talk");
  std::printf("%-11s | %8s %10s | %8s %10s %7s\n", "stage", "E[dB]", "N[dB]", "E[dB]", "N[dB]",
              "SDR[dB]");
  for (int t = 0; t < 3; ++t)
    std::printf("%-11s | %8.1f %10.1f | %8.1f %10.1f %7.2f\n", stage_labels[t], mean[t][0][0],
                mean[t][0][1], mean[t][1][0], mean[t][1][1], mean[t][1][2]);
  const double block_ms = 1000.0 * static_cast<double>(frame_shift == 0 ? 1024 : frame_shift) /
                          16000.0;
  std::printf("\nmean per-block runtime: %.2f ms (block duration %.0f ms, %s real time)\n",
              mean_block_ms, block_ms, mean_block_ms < block_ms ? "within" : "exceeds");
  std::printf("outputs in %s\n", out_dir.c_str());
  return 0;
}

int cmd_masks_export(const std::string& scenario_dir, const std::string& provider,
                     const std::string& out_path, uint32_t frame_shift) {
  eb_scenario* scenario = nullptr;
  if (eb_status s = eb_scenario_load(scenario_dir.c_str(), &scenario); s != EB_OK)
    fail(s, "loading scenario " + scenario_dir);
  ScenarioHandle handle;
  handle.ptr.reset(scenario);
  if (eb_status s = eb_masks_export(scenario, provider.c_str(), frame_shift, out_path.c_str());
      s != EB_OK)
    fail(s, "exporting masks");
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acoustic echo and noise control engine"};
  app.require_subcommand(1);

  std::string seeds_text;
  std::string gen_out;
  uint32_t channels = 4;
  double duration = 10.0;
  CLI::App* generate = app.add_subcommand("generate", "simulate scenarios and write WAV bundles");
  generate->add_option("--seeds", seeds_text, "comma-separated scenario seeds")->required();
  generate->add_option("--out", gen_out, "output root (default $ECHOBEAM_OUT)");
  generate->add_option("--channels", channels, "microphone count (default 4)");
  generate->add_option("--duration", duration, "scenario length in seconds (default 10)");
  std::string far_end, near_end, noise_src;
  generate->add_option("--far-end", far_end, "loudspeaker source WAV (default: built-in)");
  generate->add_option("--near-end", near_end, "dry talker source WAV (default: built-in)");
  generate->add_option("--noise", noise_src, "noise bed source WAV (default: built-in)");

  std::vector<std::string> scenarios;
  std::string provider = "oracle";
  std::string taps = "aec,bf,pf";
  std::string run_out;
  unsigned jobs = 1;
  uint32_t frame_shift = 0;
  double alpha = 0.0, beta = 0.0;
  CLI::App* run = app.add_subcommand("run", "process scenarios through the cascade");
  run->add_option("--scenarios", scenarios,
                  "scenario directories (or parents holding them)")
      ->required();
  run->add_option("--provider", provider,
                  "oracle | oracle-direct | constant[:mu=..,aec=..,bf=..,pf=..] | file:<path>");
  run->add_option("--taps", taps, "tap points to export (default aec,bf,pf)");
  run->add_option("--out", run_out, "output root (default $ECHOBEAM_OUT)");
  run->add_option("--jobs", jobs, "scenario-level worker count (default 1)");
  run->add_option("--frame-shift", frame_shift, "frame shift override in samples");
  run->add_option("--alpha", alpha, "loss weight on the echo term");
  run->add_option("--beta", beta, "loss weight on the noise term");
  bool oracle_aec = false;
  run->add_flag("--oracle-aec", oracle_aec,
                "freeze the canceller at the true leading echo-path taps");

  std::string export_scenario;
  std::string export_provider = "oracle";
  std::string export_out;
  uint32_t export_shift = 0;
  CLI::App* masks = app.add_subcommand("masks-export", "serialize a provider's mask stream");
  masks->add_option("--scenario", export_scenario, "scenario directory")->required();
  masks->add_option("--provider", export_provider, "mask provider");
  masks->add_option("--out", export_out, "output mask file")->required();
  masks->add_option("--frame-shift", export_shift, "frame shift override in samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (generate->parsed())
    return cmd_generate(seeds_text, gen_out, channels, duration, far_end, near_end, noise_src);
  if (run->parsed())
    return cmd_run(scenarios, provider, taps, run_out, jobs, frame_shift, alpha, beta,
                   oracle_aec);
  if (masks->parsed())
    return cmd_masks_export(export_scenario, export_provider, export_out, export_shift);
  return 2;
}
