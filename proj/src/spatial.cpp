#include "spatial.hpp"

#include <cmath>

#include "errors.hpp"

namespace echobeam {

namespace {

constexpr double kTransferNormGuard = 1e-12;

bool finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  return true;
}

}  // namespace

MvdrBeamformer::MvdrBeamformer(const FrameConfig& config, double lambda_interference,
                               double lambda_speech, double diagonal_loading,
                               double denominator_loading)
    : config_(config),
      lambda_interference_(lambda_interference),
      lambda_speech_(lambda_speech),
      diagonal_loading_(diagonal_loading),
      denominator_loading_(denominator_loading) {
  if (!(lambda_interference > 0.0 && lambda_interference < 1.0) ||
      !(lambda_speech > 0.0 && lambda_speech < 1.0))
    throw ConfigError("MvdrBeamformer: smoothing factors must lie in (0, 1)");
  if (diagonal_loading < 0.0 || denominator_loading < 0.0)
    throw ConfigError("MvdrBeamformer: regularizers must be nonnegative");
  const auto p = static_cast<Eigen::Index>(config.channels);
  psd_interference_.assign(config.bins, CMatrix::Zero(p, p));
  psd_speech_.assign(config.bins, CMatrix::Zero(p, p));
  // Uniform-array start with the first microphone as reference; weights pass
  // the reference mic through until data arrives.
  transfer_.assign(config.bins, CVector::Ones(p));
  weights_.assign(config.bins, CVector::Unit(p, 0));
}

std::pair<CVector, CVector> MvdrBeamformer::split_estimates(const CVector& error,
                                                            std::span<const double> mask) {
  if (static_cast<std::size_t>(error.size()) != mask.size())
    throw ConfigError("split_estimates: mask length must match channel count");
  CVector interference(error.size());
  CVector speech(error.size());
  for (Eigen::Index p = 0; p < error.size(); ++p) {
    const double m = mask[static_cast<std::size_t>(p)];
    speech[p] = m * error[p];
    // Complement as a difference so the two parts sum back to the error.
    interference[p] = error[p] - speech[p];
  }
  return {interference, speech};
}

void MvdrBeamformer::update_cpsd(std::size_t bin, const CVector& interference,
                                 const CVector& speech) {
  CMatrix& zz = psd_interference_[bin];
  CMatrix& ss = psd_speech_[bin];
  zz = lambda_interference_ * zz + (1.0 - lambda_interference_) * (interference * interference.adjoint());
  ss = lambda_speech_ * ss + (1.0 - lambda_speech_) * (speech * speech.adjoint());
  // Outer-product recursions are Hermitian up to rounding; pin it down.
  zz = 0.5 * (zz + zz.adjoint()).eval();
  ss = 0.5 * (ss + ss.adjoint()).eval();
}

void MvdrBeamformer::update_transfer_vector(std::size_t bin) {
  CVector candidate = psd_speech_[bin] * transfer_[bin];
  const Complex reference = candidate[0];
  if (std::abs(reference) < kTransferNormGuard) {
    ++held_transfer_bins_;
    return;
  }
  transfer_[bin] = candidate / reference;
}

void MvdrBeamformer::update_weights(std::size_t bin) {
  const auto p = static_cast<Eigen::Index>(config_.channels);
  CMatrix loaded = psd_interference_[bin] + diagonal_loading_ * CMatrix::Identity(p, p);
  const CVector& a = transfer_[bin];
  // Single Hermitian solve reused for numerator and denominator.
  Eigen::LLT<CMatrix> llt(loaded);
  if (llt.info() != Eigen::Success) {
    ++held_weight_bins_;
    return;
  }
  CVector solved = llt.solve(a);
  const Complex denom = a.dot(solved) + denominator_loading_;  // a^H solved
  CVector candidate = solved / denom;
  if (!finite(candidate)) {
    ++held_weight_bins_;
    return;
  }
  weights_[bin] = candidate;
}

Complex MvdrBeamformer::apply_bin(std::size_t bin, const CVector& error) const {
  return weights_[bin].dot(error);  // w^H e
}

CVector MvdrBeamformer::gather_bin(const std::vector<CVec>& spectra, std::size_t bin) const {
  CVector v(static_cast<Eigen::Index>(config_.channels));
  for (std::size_t p = 0; p < config_.channels; ++p)
    v[static_cast<Eigen::Index>(p)] = spectra[p][bin];
  return v;
}

CVec MvdrBeamformer::process_block(const std::vector<CVec>& stft_error,
                                   const std::vector<Vec>& bf_mask) {
  if (stft_error.size() != config_.channels || bf_mask.size() != config_.channels)
    throw ConfigError("MvdrBeamformer: channel count mismatch");
  CVec out(config_.block_length, Complex(0.0, 0.0));
  Vec mask_column(config_.channels);
  for (std::size_t f = 0; f < config_.bins; ++f) {
    CVector error = gather_bin(stft_error, f);
    for (std::size_t p = 0; p < config_.channels; ++p) mask_column[p] = bf_mask[p][f];
    auto [interference, speech] = split_estimates(error, mask_column);
    update_cpsd(f, interference, speech);
    update_transfer_vector(f);
    update_weights(f);
    out[f] = apply_bin(f, error);
  }
  complete_conjugate_symmetry(out);
  return out;
}

CVec MvdrBeamformer::process_block_direct(const std::vector<CVec>& stft_error,
                                          const std::vector<CVec>& interference,
                                          const std::vector<CVec>& speech) {
  if (stft_error.size() != config_.channels || interference.size() != config_.channels ||
      speech.size() != config_.channels)
    throw ConfigError("MvdrBeamformer: channel count mismatch");
  CVec out(config_.block_length, Complex(0.0, 0.0));
  for (std::size_t f = 0; f < config_.bins; ++f) {
    update_cpsd(f, gather_bin(interference, f), gather_bin(speech, f));
    update_transfer_vector(f);
    update_weights(f);
    out[f] = apply_bin(f, gather_bin(stft_error, f));
  }
  complete_conjugate_symmetry(out);
  return out;
}

CVec MvdrBeamformer::apply(const std::vector<CVec>& spectra) const {
  if (spectra.size() != config_.channels)
    throw ConfigError("MvdrBeamformer: channel count mismatch");
  CVec out(config_.block_length, Complex(0.0, 0.0));
  for (std::size_t f = 0; f < config_.bins; ++f) out[f] = apply_bin(f, gather_bin(spectra, f));
  complete_conjugate_symmetry(out);
  return out;
}

}  // namespace echobeam
