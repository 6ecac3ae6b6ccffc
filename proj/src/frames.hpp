#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "types.hpp"

namespace echobeam {

// Global framing parameters. The block length is twice the frame shift and
// the spectrum is kept at full block length with bins = block/2 + 1 unique
// bins for real signals.
struct FrameConfig {
  std::size_t frame_shift = 1024;
  std::size_t block_length = 2048;
  std::size_t channels = 4;
  double sample_rate = 16000.0;
  std::size_t bins = 1025;
};

FrameConfig make_frame_config(std::size_t frame_shift, std::size_t channels = 4,
                              double sample_rate = 16000.0);

// [prev; cur], both of frame-shift length.
Vec make_signal_block(std::span<const double> prev, std::span<const double> cur);

// Keeps the last half of a full block: the samples of a block-domain circular
// convolution that coincide with the linear convolution.
Vec valid_convolution_tail(std::span<const double> time_block);

// [taps; zeros(taps.size())]: filter taps occupy the first half of the block.
Vec zero_pad_filter(std::span<const double> taps);

// Places an innovation block into the last half of an otherwise zero block.
Vec place_in_block_tail(std::span<const double> innovation);

// Projects a block spectrum onto the subspace of half-length FIR filters by
// zeroing the trailing half of its time-domain image. Idempotent.
CVec apply_fir_constraint(std::span<const Complex> spectrum);

// Periodic Hamming window.
Vec hamming_window(std::size_t length);

// Least-squares dual of `analysis` at the given hop: divides by the summed
// squared window so that analysis * synthesis overlap-adds to one.
Vec synthesis_window(std::span<const double> analysis, std::size_t frame_shift);

// Windowed block spectrum of [prev; cur].
CVec stft_analyze(std::span<const double> prev, std::span<const double> cur,
                  std::span<const double> window);

// Completes bins above block/2 by conjugate symmetry in place.
void complete_conjugate_symmetry(CVec& spectrum);

// Streaming weighted overlap-add at hop = block/2. Each pushed frame yields
// one frame-shift of finalized output. The final half block of a stream only
// ever receives one frame and is emitted attenuated by flush().
class StftSynthesizer {
 public:
  StftSynthesizer(std::size_t frame_shift, std::span<const double> analysis_window);

  Vec push(std::span<const Complex> frame_spectrum);
  Vec flush();
  void reset();

 private:
  std::size_t frame_shift_;
  Vec synthesis_window_;
  Vec overlap_;
};

// Whole-sequence convenience: frames produced at hop frame_shift with the
// given analysis window; returns frames.size() * frame_shift samples.
Vec stft_synthesize(const std::vector<CVec>& frames, std::span<const double> analysis_window,
                    std::size_t frame_shift);

}  // namespace echobeam
