#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "frames.hpp"
#include "types.hpp"

namespace echobeam {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Per-bin masked MVDR beamformer over the multichannel error spectra:
// mask-based interference/speech splitting, recursive cross-PSD tracking, one
// power-iteration step per block for the target transfer vector, and
// diagonally loaded weights. The first microphone is the reference.
class MvdrBeamformer {
 public:
  MvdrBeamformer(const FrameConfig& config, double lambda_interference = 0.99,
                 double lambda_speech = 0.99, double diagonal_loading = 0.01,
                 double denominator_loading = 0.01);

  // One full block: split, cross-PSD updates, transfer-vector step, weights,
  // apply. stft_error[p] holds mic p's full-block spectrum; bf_mask[p] holds
  // `bins` values in [0, 1]. Returns the beamformed spectrum, completed to
  // full block length by conjugate symmetry.
  CVec process_block(const std::vector<CVec>& stft_error, const std::vector<Vec>& bf_mask);

  // Variant fed with externally supplied interference and speech spectra
  // instead of mask-split errors; still applies weights to stft_error.
  CVec process_block_direct(const std::vector<CVec>& stft_error,
                            const std::vector<CVec>& interference,
                            const std::vector<CVec>& speech);

  // Applies the current weights without touching any state.
  CVec apply(const std::vector<CVec>& spectra) const;

  // Per-bin pieces, exposed for composition and tests.
  static std::pair<CVector, CVector> split_estimates(const CVector& error, std::span<const double> mask);
  void update_cpsd(std::size_t bin, const CVector& interference, const CVector& speech);
  void update_transfer_vector(std::size_t bin);
  void update_weights(std::size_t bin);
  Complex apply_bin(std::size_t bin, const CVector& error) const;

  const FrameConfig& config() const { return config_; }
  const CMatrix& psd_interference(std::size_t bin) const { return psd_interference_[bin]; }
  const CMatrix& psd_speech(std::size_t bin) const { return psd_speech_[bin]; }
  const CVector& transfer_vector(std::size_t bin) const { return transfer_[bin]; }
  const CVector& weights(std::size_t bin) const { return weights_[bin]; }

  // Bins whose weight solve went non-finite and kept their previous value.
  std::size_t held_weight_bins() const { return held_weight_bins_; }
  std::size_t held_transfer_bins() const { return held_transfer_bins_; }

 private:
  CVector gather_bin(const std::vector<CVec>& spectra, std::size_t bin) const;

  FrameConfig config_;
  double lambda_interference_;
  double lambda_speech_;
  double diagonal_loading_;
  double denominator_loading_;
  std::vector<CMatrix> psd_interference_;
  std::vector<CMatrix> psd_speech_;
  std::vector<CVector> transfer_;
  std::vector<CVector> weights_;
  std::size_t held_weight_bins_ = 0;
  std::size_t held_transfer_bins_ = 0;
};

}  // namespace echobeam
