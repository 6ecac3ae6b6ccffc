#include "frames.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "fft.hpp"

namespace echobeam {

FrameConfig make_frame_config(std::size_t frame_shift, std::size_t channels,
                              double sample_rate) {
  if (frame_shift < 1) throw ConfigError("frame shift must be at least 1");
  if (channels < 1) throw ConfigError("channel count must be at least 1");
  if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  FrameConfig config;
  config.frame_shift = frame_shift;
  config.block_length = 2 * frame_shift;
  config.channels = channels;
  config.sample_rate = sample_rate;
  config.bins = config.block_length / 2 + 1;
  return config;
}

Vec make_signal_block(std::span<const double> prev, std::span<const double> cur) {
  if (prev.size() != cur.size())
    throw ConfigError("make_signal_block: innovation blocks differ in length");
  Vec block(prev.size() + cur.size());
  std::copy(prev.begin(), prev.end(), block.begin());
  std::copy(cur.begin(), cur.end(), block.begin() + static_cast<std::ptrdiff_t>(prev.size()));
  return block;
}

Vec valid_convolution_tail(std::span<const double> time_block) {
  if (time_block.size() % 2 != 0)
    throw ConfigError("valid_convolution_tail: block length must be even");
  const std::size_t half = time_block.size() / 2;
  return Vec(time_block.begin() + static_cast<std::ptrdiff_t>(half), time_block.end());
}

Vec zero_pad_filter(std::span<const double> taps) {
  Vec block(2 * taps.size(), 0.0);
  std::copy(taps.begin(), taps.end(), block.begin());
  return block;
}

Vec place_in_block_tail(std::span<const double> innovation) {
  Vec block(2 * innovation.size(), 0.0);
  std::copy(innovation.begin(), innovation.end(),
            block.begin() + static_cast<std::ptrdiff_t>(innovation.size()));
  return block;
}

CVec apply_fir_constraint(std::span<const Complex> spectrum) {
  if (spectrum.size() % 2 != 0)
    throw ConfigError("apply_fir_constraint: block length must be even");
  CVec time = idft(spectrum);
  const std::size_t half = time.size() / 2;
  std::fill(time.begin() + static_cast<std::ptrdiff_t>(half), time.end(), Complex(0.0, 0.0));
  return dft(std::span<const Complex>(time));
}

Vec hamming_window(std::size_t length) {
  Vec window(length);
  for (std::size_t n = 0; n < length; ++n)
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                       static_cast<double>(length));
  return window;
}

Vec synthesis_window(std::span<const double> analysis, std::size_t frame_shift) {
  const std::size_t length = analysis.size();
  if (length != 2 * frame_shift)
    throw ConfigError("synthesis_window: window length must equal twice the frame shift");
  Vec dual(length);
  for (std::size_t n = 0; n < length; ++n) {
    // At 50% overlap, sample n of a frame coincides with sample (n +/- hop)
    // of a neighbor; the periodic index covers both halves.
    const std::size_t other = (n + frame_shift) % length;
    const double denom = analysis[n] * analysis[n] + analysis[other] * analysis[other];
    dual[n] = analysis[n] / denom;
  }
  return dual;
}

CVec stft_analyze(std::span<const double> prev, std::span<const double> cur,
                  std::span<const double> window) {
  if (prev.size() != cur.size())
    throw ConfigError("stft_analyze: innovation blocks differ in length");
  if (window.size() != prev.size() + cur.size())
    throw ConfigError("stft_analyze: window length must equal the block length");
  Vec block = make_signal_block(prev, cur);
  for (std::size_t n = 0; n < block.size(); ++n) block[n] *= window[n];
  return dft(std::span<const double>(block));
}

void complete_conjugate_symmetry(CVec& spectrum) {
  const std::size_t length = spectrum.size();
  for (std::size_t f = 1; f < length / 2; ++f) spectrum[length - f] = std::conj(spectrum[f]);
}

StftSynthesizer::StftSynthesizer(std::size_t frame_shift, std::span<const double> analysis_window)
    : frame_shift_(frame_shift),
      synthesis_window_(synthesis_window(analysis_window, frame_shift)),
      overlap_(frame_shift, 0.0) {}

Vec StftSynthesizer::push(std::span<const Complex> frame_spectrum) {
  if (frame_spectrum.size() != 2 * frame_shift_)
    throw ConfigError("StftSynthesizer: frame spectrum has wrong length");
  Vec time = idft_real(frame_spectrum);
  Vec out(frame_shift_);
  for (std::size_t n = 0; n < frame_shift_; ++n) {
    out[n] = overlap_[n] + time[n] * synthesis_window_[n];
    overlap_[n] = time[n + frame_shift_] * synthesis_window_[n + frame_shift_];
  }
  return out;
}

Vec StftSynthesizer::flush() {
  Vec out = overlap_;
  std::fill(overlap_.begin(), overlap_.end(), 0.0);
  return out;
}

void StftSynthesizer::reset() { std::fill(overlap_.begin(), overlap_.end(), 0.0); }

Vec stft_synthesize(const std::vector<CVec>& frames, std::span<const double> analysis_window,
                    std::size_t frame_shift) {
  if (frames.empty()) return {};
  StftSynthesizer synth(frame_shift, analysis_window);
  Vec signal;
  signal.reserve(frames.size() * frame_shift);
  // The first frame's leading half precedes the stream; its emitted chunk is
  // dropped so that output sample n aligns with input sample n.
  bool first = true;
  for (const auto& frame : frames) {
    Vec chunk = synth.push(frame);
    if (!first) signal.insert(signal.end(), chunk.begin(), chunk.end());
    first = false;
  }
  Vec tail = synth.flush();
  signal.insert(signal.end(), tail.begin(), tail.end());
  return signal;
}

}  // namespace echobeam
