#pragma once

#include <span>
#include <vector>

#include "frames.hpp"
#include "types.hpp"

namespace echobeam {

// Multichannel frequency-domain adaptive echo canceller. One half-block FIR
// filter per microphone, adapted block-wise with a masked, power-normalized
// step size. Filters live as full-block spectra and are re-projected onto the
// FIR subspace after every update.
class AecFilter {
 public:
  explicit AecFilter(const FrameConfig& config, double psd_smoothing = 0.5);

  struct BlockResult {
    std::vector<Vec> echo_estimates;     // per mic, frame-shift samples
    std::vector<Vec> error_innovations;  // per mic, frame-shift samples
    std::vector<CVec> error_spectra;     // per mic, full-block spectrum of the error tail
  };

  // Runs one block in update order: echo estimate, error, loudspeaker PSD,
  // step size, filter update. Masks carry `bins` entries each in [0, 1].
  BlockResult process_block(std::span<const double> x_innovation,
                            const std::vector<Vec>& mic_innovations,
                            std::span<const double> step_mask,
                            std::span<const double> error_norm_mask);

  // Assembles [previous innovation; cur] without advancing the buffer.
  Vec loudspeaker_block(std::span<const double> x_innovation) const;

  // Echo estimates for all microphones from a full loudspeaker block spectrum.
  std::vector<Vec> estimate_echo(std::span<const Complex> x_spectrum) const;

  void update_loudspeaker_psd(std::span<const Complex> x_spectrum);

  // Masked normalized step size for one microphone, `bins` entries.
  Vec step_size(std::span<const double> step_mask, std::span<const double> error_norm_mask,
                std::span<const Complex> error_spectrum) const;

  // Gradient update with per-mic step sizes (each `bins` entries, mirrored
  // internally onto the conjugate bins). Re-establishes the FIR constraint.
  void update_filters(std::span<const Complex> x_spectrum,
                      const std::vector<CVec>& error_spectra,
                      const std::vector<Vec>& step_sizes);

  // Installs time-domain taps (at most frame_shift of them) for one mic.
  void set_filter_taps(std::size_t mic, std::span<const double> taps);

  // A frozen filter ignores step masks and never adapts.
  void freeze(bool frozen) { frozen_ = frozen; }
  bool frozen() const { return frozen_; }

  const FrameConfig& config() const { return config_; }
  const CVec& filter_spectrum(std::size_t mic) const { return filters_[mic]; }
  Vec filter_taps(std::size_t mic) const;
  const Vec& loudspeaker_psd() const { return psd_; }

 private:
  FrameConfig config_;
  double psd_smoothing_;
  bool psd_initialized_ = false;
  bool frozen_ = false;
  std::vector<CVec> filters_;  // per mic, full-block spectra
  Vec psd_;                    // bins entries
  Vec prev_x_innovation_;
};

// Elementwise microphone minus echo estimate.
std::vector<Vec> compute_error(const std::vector<Vec>& mic_innovations,
                               const std::vector<Vec>& echo_estimates);

}  // namespace echobeam
