#pragma once

#include <optional>
#include <vector>

#include "aec.hpp"
#include "control.hpp"
#include "frames.hpp"
#include "spatial.hpp"
#include "types.hpp"

namespace echobeam {

// Full streams at the three tap points: canceller error (first mic),
// beamformer output, postfilter output. All sample-aligned with the input.
struct TapSignals {
  Vec aec;
  Vec bf;
  Vec pf;
};

struct PipelineOutput {
  TapSignals mixture;
  TapSignals echo;
  TapSignals speech;
  TapSignals noise;
  std::vector<MaskSet> masks_used;
  std::size_t blocks = 0;
  // Samples usable for metrics: input length clipped to the last complete
  // synthesis block, excluding any zero padding.
  std::size_t valid_samples = 0;
  double mean_block_ms = 0.0;
  double max_block_ms = 0.0;
  bool ended_by_provider = false;
};

// Streaming state machine for one signal: echo canceller, error STFT, masked
// MVDR, spectral postfilter, synthesis. Component images (echo, speech,
// noise) travel through the identical time-varying operators so their tap
// outputs sum exactly to the mixture output.
class Pipeline {
 public:
  Pipeline(const FrameConfig& config, MaskProvider& provider, AecFilter aec,
           MvdrBeamformer beamformer);
  Pipeline(const FrameConfig& config, MaskProvider& provider, AecFilter aec);

  struct BlockInput {
    Vec loudspeaker;                       // frame-shift samples
    std::vector<Vec> mic;                  // per mic
    std::optional<std::vector<Vec>> echo;  // component innovations, optional
    std::optional<std::vector<Vec>> speech;
    std::optional<std::vector<Vec>> noise;
  };

  struct PathChunk {
    Vec aec;  // error innovation of the first mic, frame-shift samples
    Vec bf;   // finalized synthesis samples (empty for the very first block)
    Vec pf;
  };

  struct BlockOutput {
    bool end_of_stream = false;
    PathChunk mixture, echo, speech, noise;
    MaskSet masks;
    double elapsed_ms = 0.0;  // mixture-path processing time only
  };

  BlockOutput process_block(const BlockInput& input);

  // Final synthesis tails (one frame-shift chunk per path).
  struct FlushOutput {
    PathChunk mixture, echo, speech, noise;
  };
  FlushOutput flush();

  const AecFilter& aec() const { return aec_; }
  const MvdrBeamformer& beamformer() const { return beamformer_; }
  const FrameConfig& config() const { return config_; }

  // Bytes held in per-stream buffers; independent of the stream length.
  std::size_t state_bytes() const;

 private:
  struct Path {
    std::vector<Vec> prev_error;  // per mic, frame-shift samples
    StftSynthesizer bf_synth;
    StftSynthesizer pf_synth;
  };

  std::vector<CVec> analyze_path(Path& path, const std::vector<Vec>& error_innovations);
  static PathChunk make_chunk(const Vec& error_first_mic, Vec bf, Vec pf, bool first_block);

  FrameConfig config_;
  MaskProvider& provider_;
  AecFilter aec_;
  MvdrBeamformer beamformer_;
  Vec window_;
  Path mixture_, echo_, speech_, noise_;
  std::size_t block_index_ = 0;
};

// Runs the block loop over whole signals. Component groups may be empty when
// no shadow processing is wanted (oracle providers require them). Signals are
// zero-padded to a whole number of blocks.
PipelineOutput process_stream(const Vec& loudspeaker, const std::vector<Vec>& microphones,
                              const std::vector<Vec>* echo, const std::vector<Vec>* speech,
                              const std::vector<Vec>* noise, MaskProvider& provider,
                              const FrameConfig& config, AecFilter aec,
                              MvdrBeamformer beamformer);
PipelineOutput process_stream(const Vec& loudspeaker, const std::vector<Vec>& microphones,
                              const std::vector<Vec>* echo, const std::vector<Vec>* speech,
                              const std::vector<Vec>* noise, MaskProvider& provider,
                              const FrameConfig& config, AecFilter aec);

}  // namespace echobeam
