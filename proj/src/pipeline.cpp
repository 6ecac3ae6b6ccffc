#include "pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "errors.hpp"

namespace echobeam {

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  void start() { begin_ = Clock::now(); }
  void stop() {
    total_ += std::chrono::duration<double, std::milli>(Clock::now() - begin_).count();
  }
  double total_ms() const { return total_; }

 private:
  Clock::time_point begin_{};
  double total_ = 0.0;
};

std::vector<Vec> zero_innovations(std::size_t channels, std::size_t frame_shift) {
  return std::vector<Vec>(channels, Vec(frame_shift, 0.0));
}

// pf spectrum = mask (bins entries, mirrored) applied to the bf spectrum.
CVec apply_postfilter(const CVec& bf_spectrum, const Vec& mask) {
  CVec out(bf_spectrum.size());
  const std::size_t bins = mask.size();
  for (std::size_t f = 0; f < bins; ++f) out[f] = mask[f] * bf_spectrum[f];
  for (std::size_t f = bins; f < out.size(); ++f) out[f] = mask[out.size() - f] * bf_spectrum[f];
  return out;
}

CVec sum_spectra(const CVec& a, const CVec& b) {
  CVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

}  // namespace

Pipeline::Pipeline(const FrameConfig& config, MaskProvider& provider, AecFilter aec)
    : Pipeline(config, provider, std::move(aec), MvdrBeamformer(config)) {}

Pipeline::Pipeline(const FrameConfig& config, MaskProvider& provider, AecFilter aec,
                   MvdrBeamformer beamformer)
    : config_(config),
      provider_(provider),
      aec_(std::move(aec)),
      beamformer_(std::move(beamformer)),
      window_(hamming_window(config.block_length)),
      mixture_{zero_innovations(config.channels, config.frame_shift),
               StftSynthesizer(config.frame_shift, window_),
               StftSynthesizer(config.frame_shift, window_)},
      echo_{zero_innovations(config.channels, config.frame_shift),
            StftSynthesizer(config.frame_shift, window_),
            StftSynthesizer(config.frame_shift, window_)},
      speech_{zero_innovations(config.channels, config.frame_shift),
              StftSynthesizer(config.frame_shift, window_),
              StftSynthesizer(config.frame_shift, window_)},
      noise_{zero_innovations(config.channels, config.frame_shift),
             StftSynthesizer(config.frame_shift, window_),
             StftSynthesizer(config.frame_shift, window_)} {
  if (aec_.config().block_length != config.block_length ||
      aec_.config().channels != config.channels)
    throw ConfigError("Pipeline: echo canceller configured for a different frame layout");
}

std::vector<CVec> Pipeline::analyze_path(Path& path, const std::vector<Vec>& error_innovations) {
  std::vector<CVec> frames(config_.channels);
  for (std::size_t p = 0; p < config_.channels; ++p) {
    frames[p] = stft_analyze(path.prev_error[p], error_innovations[p], window_);
    path.prev_error[p] = error_innovations[p];
  }
  return frames;
}

Pipeline::PathChunk Pipeline::make_chunk(const Vec& error_first_mic, Vec bf, Vec pf,
                                         bool first_block) {
  PathChunk chunk;
  chunk.aec = error_first_mic;
  if (!first_block) {
    chunk.bf = std::move(bf);
    chunk.pf = std::move(pf);
  }
  return chunk;
}

Pipeline::BlockOutput Pipeline::process_block(const BlockInput& input) {
  BlockOutput out;
  if (!provider_.has_block(block_index_)) {
    out.end_of_stream = true;
    return out;
  }
  const bool has_components =
      input.echo.has_value() && input.speech.has_value() && input.noise.has_value();
  if (provider_.wants_oracle() && !has_components)
    throw ConfigError("Pipeline: provider needs component images but none were supplied");

  Stopwatch watch;

  // Echo cancellation on the mixture.
  watch.start();
  Vec step_mask, error_norm_mask;
  provider_.aec_masks(block_index_, step_mask, error_norm_mask);
  clamp_mask(step_mask);
  clamp_mask(error_norm_mask);
  quantize_mask(step_mask);
  quantize_mask(error_norm_mask);
  AecFilter::BlockResult aec_result =
      aec_.process_block(input.loudspeaker, input.mic, step_mask, error_norm_mask);
  std::vector<CVec> mixture_frames = analyze_path(mixture_, aec_result.error_innovations);
  watch.stop();

  // Component images traverse the same subtraction: the canceller output is
  // attributed entirely to the echo image, speech and noise pass through.
  std::vector<CVec> echo_frames, speech_frames, noise_frames;
  std::vector<Vec> echo_error;
  if (has_components) {
    echo_error = compute_error(*input.echo, aec_result.echo_estimates);
    echo_frames = analyze_path(echo_, echo_error);
    speech_frames = analyze_path(speech_, *input.speech);
    noise_frames = analyze_path(noise_, *input.noise);
  }

  OracleContext ctx;
  const OracleContext* ctx_ptr = nullptr;
  if (has_components) {
    ctx.residual_echo = echo_frames;
    ctx.speech = speech_frames;
    ctx.noise = noise_frames;
    ctx_ptr = &ctx;
  }

  std::vector<Vec> bf_mask = provider_.bf_mask(block_index_, ctx_ptr);
  for (Vec& row : bf_mask) {
    clamp_mask(row);
    quantize_mask(row);
  }

  watch.start();
  CVec bf_spectrum;
  if (provider_.direct_cpsd()) {
    if (!has_components)
      throw ConfigError("Pipeline: direct CPSD mode needs component images");
    std::vector<CVec> interference(config_.channels);
    for (std::size_t p = 0; p < config_.channels; ++p)
      interference[p] = sum_spectra(echo_frames[p], noise_frames[p]);
    bf_spectrum = beamformer_.process_block_direct(mixture_frames, interference, speech_frames);
  } else {
    bf_spectrum = beamformer_.process_block(mixture_frames, bf_mask);
  }
  watch.stop();

  CVec bf_echo, bf_speech, bf_noise;
  BeamformedContext bf_ctx;
  const BeamformedContext* bf_ctx_ptr = nullptr;
  if (has_components) {
    bf_echo = beamformer_.apply(echo_frames);
    bf_speech = beamformer_.apply(speech_frames);
    bf_noise = beamformer_.apply(noise_frames);
    bf_ctx.residual_echo.assign(bf_echo.begin(), bf_echo.begin() + static_cast<std::ptrdiff_t>(config_.bins));
    bf_ctx.speech.assign(bf_speech.begin(), bf_speech.begin() + static_cast<std::ptrdiff_t>(config_.bins));
    bf_ctx.noise.assign(bf_noise.begin(), bf_noise.begin() + static_cast<std::ptrdiff_t>(config_.bins));
    bf_ctx_ptr = &bf_ctx;
  }

  Vec pf_mask = provider_.pf_mask(block_index_, bf_ctx_ptr);
  clamp_mask(pf_mask);
  quantize_mask(pf_mask);

  watch.start();
  CVec pf_spectrum = apply_postfilter(bf_spectrum, pf_mask);
  Vec mixture_bf = mixture_.bf_synth.push(bf_spectrum);
  Vec mixture_pf = mixture_.pf_synth.push(pf_spectrum);
  watch.stop();

  const bool first_block = (block_index_ == 0);
  out.mixture = make_chunk(aec_result.error_innovations[0], std::move(mixture_bf),
                           std::move(mixture_pf), first_block);

  if (has_components) {
    out.echo = make_chunk(echo_error[0], echo_.bf_synth.push(bf_echo),
                          echo_.pf_synth.push(apply_postfilter(bf_echo, pf_mask)), first_block);
    out.speech =
        make_chunk((*input.speech)[0], speech_.bf_synth.push(bf_speech),
                   speech_.pf_synth.push(apply_postfilter(bf_speech, pf_mask)), first_block);
    out.noise = make_chunk((*input.noise)[0], noise_.bf_synth.push(bf_noise),
                           noise_.pf_synth.push(apply_postfilter(bf_noise, pf_mask)), first_block);
  }

  out.masks.step = std::move(step_mask);
  out.masks.error_norm = std::move(error_norm_mask);
  out.masks.beamformer = std::move(bf_mask);
  out.masks.postfilter = std::move(pf_mask);
  out.elapsed_ms = watch.total_ms();
  ++block_index_;
  return out;
}

Pipeline::FlushOutput Pipeline::flush() {
  FlushOutput out;
  out.mixture.bf = mixture_.bf_synth.flush();
  out.mixture.pf = mixture_.pf_synth.flush();
  out.echo.bf = echo_.bf_synth.flush();
  out.echo.pf = echo_.pf_synth.flush();
  out.speech.bf = speech_.bf_synth.flush();
  out.speech.pf = speech_.pf_synth.flush();
  out.noise.bf = noise_.bf_synth.flush();
  out.noise.pf = noise_.pf_synth.flush();
  return out;
}

std::size_t Pipeline::state_bytes() const {
  // Filters, PSDs, per-bin matrices and vectors, window, overlap and
  // previous-error buffers; everything scales with the frame layout only.
  const std::size_t p = config_.channels;
  const std::size_t m = config_.block_length;
  const std::size_t f = config_.bins;
  std::size_t bytes = 0;
  bytes += p * m * sizeof(Complex);               // canceller filters
  bytes += f * sizeof(double);                    // loudspeaker PSD
  bytes += config_.frame_shift * sizeof(double);  // previous loudspeaker innovation
  bytes += f * (2 * p * p + 2 * p) * sizeof(Complex);  // beamformer state
  bytes += m * sizeof(double);                    // window
  bytes += 4 * (p + 2) * config_.frame_shift * sizeof(double);  // path buffers
  return bytes;
}

PipelineOutput process_stream(const Vec& loudspeaker, const std::vector<Vec>& microphones,
                              const std::vector<Vec>* echo, const std::vector<Vec>* speech,
                              const std::vector<Vec>* noise, MaskProvider& provider,
                              const FrameConfig& config, AecFilter aec) {
  return process_stream(loudspeaker, microphones, echo, speech, noise, provider, config,
                        std::move(aec), MvdrBeamformer(config));
}

PipelineOutput process_stream(const Vec& loudspeaker, const std::vector<Vec>& microphones,
                              const std::vector<Vec>* echo, const std::vector<Vec>* speech,
                              const std::vector<Vec>* noise, MaskProvider& provider,
                              const FrameConfig& config, AecFilter aec,
                              MvdrBeamformer beamformer) {
  if (microphones.size() != config.channels)
    throw ConfigError("process_stream: microphone channel count mismatch");
  const std::size_t samples = loudspeaker.size();
  for (const Vec& c : microphones)
    if (c.size() != samples) throw ConfigError("process_stream: signal lengths differ");
  const bool has_components = echo != nullptr && speech != nullptr && noise != nullptr;
  for (const auto* group : {echo, speech, noise}) {
    if (group == nullptr) continue;
    if (group->size() != config.channels)
      throw ConfigError("process_stream: component channel count mismatch");
    for (const Vec& c : *group)
      if (c.size() != samples) throw ConfigError("process_stream: signal lengths differ");
  }

  const std::size_t shift = config.frame_shift;
  const std::size_t blocks = (samples + shift - 1) / shift;

  Pipeline pipeline(config, provider, std::move(aec), std::move(beamformer));
  PipelineOutput output;

  auto cut = [&](const Vec& signal, std::size_t block) {
    Vec innovation(shift, 0.0);
    const std::size_t begin = block * shift;
    const std::size_t end = std::min(samples, begin + shift);
    for (std::size_t n = begin; n < end; ++n) innovation[n - begin] = signal[n];
    return innovation;
  };
  auto cut_group = [&](const std::vector<Vec>& group, std::size_t block) {
    std::vector<Vec> innovations(group.size());
    for (std::size_t p = 0; p < group.size(); ++p) innovations[p] = cut(group[p], block);
    return innovations;
  };
  auto append = [](TapSignals& tap, const Pipeline::PathChunk& chunk) {
    tap.aec.insert(tap.aec.end(), chunk.aec.begin(), chunk.aec.end());
    tap.bf.insert(tap.bf.end(), chunk.bf.begin(), chunk.bf.end());
    tap.pf.insert(tap.pf.end(), chunk.pf.begin(), chunk.pf.end());
  };

  double total_ms = 0.0;
  for (std::size_t block = 0; block < blocks; ++block) {
    Pipeline::BlockInput input;
    input.loudspeaker = cut(loudspeaker, block);
    input.mic = cut_group(microphones, block);
    if (has_components) {
      input.echo = cut_group(*echo, block);
      input.speech = cut_group(*speech, block);
      input.noise = cut_group(*noise, block);
    }
    Pipeline::BlockOutput result = pipeline.process_block(input);
    if (result.end_of_stream) {
      output.ended_by_provider = true;
      break;
    }
    append(output.mixture, result.mixture);
    if (has_components) {
      append(output.echo, result.echo);
      append(output.speech, result.speech);
      append(output.noise, result.noise);
    }
    output.masks_used.push_back(std::move(result.masks));
    total_ms += result.elapsed_ms;
    output.max_block_ms = std::max(output.max_block_ms, result.elapsed_ms);
    ++output.blocks;
  }

  Pipeline::FlushOutput tails = pipeline.flush();
  append(output.mixture, tails.mixture);
  if (has_components) {
    append(output.echo, tails.echo);
    append(output.speech, tails.speech);
    append(output.noise, tails.noise);
  }

  output.mean_block_ms = output.blocks == 0 ? 0.0 : total_ms / static_cast<double>(output.blocks);
  const std::size_t complete = output.blocks == 0 ? 0 : (output.blocks - 1) * shift;
  output.valid_samples = std::min(samples, complete);
  return output;
}

}  // namespace echobeam
