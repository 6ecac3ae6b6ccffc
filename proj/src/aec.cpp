#include "aec.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "fft.hpp"

namespace echobeam {

namespace {

constexpr double kStepSizeGuard = 1e-10;

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

AecFilter::AecFilter(const FrameConfig& config, double psd_smoothing)
    : config_(config),
      psd_smoothing_(psd_smoothing),
      filters_(config.channels, CVec(config.block_length, Complex(0.0, 0.0))),
      psd_(config.bins, 0.0),
      prev_x_innovation_(config.frame_shift, 0.0) {
  if (!(psd_smoothing > 0.0 && psd_smoothing < 1.0))
    throw ConfigError("AecFilter: PSD smoothing factor must lie in (0, 1)");
}

Vec AecFilter::loudspeaker_block(std::span<const double> x_innovation) const {
  if (x_innovation.size() != config_.frame_shift)
    throw ConfigError("AecFilter: loudspeaker innovation has wrong length");
  return make_signal_block(prev_x_innovation_, x_innovation);
}

std::vector<Vec> AecFilter::estimate_echo(std::span<const Complex> x_spectrum) const {
  std::vector<Vec> estimates;
  estimates.reserve(config_.channels);
  CVec product(config_.block_length);
  for (std::size_t mic = 0; mic < config_.channels; ++mic) {
    const CVec& filter = filters_[mic];
    for (std::size_t f = 0; f < config_.block_length; ++f) product[f] = x_spectrum[f] * filter[f];
    estimates.push_back(valid_convolution_tail(idft_real(product)));
  }
  return estimates;
}

void AecFilter::update_loudspeaker_psd(std::span<const Complex> x_spectrum) {
  for (std::size_t f = 0; f < config_.bins; ++f) {
    const double power = std::norm(x_spectrum[f]);
    psd_[f] = psd_initialized_ ? psd_smoothing_ * psd_[f] + (1.0 - psd_smoothing_) * power : power;
  }
  psd_initialized_ = true;
}

Vec AecFilter::step_size(std::span<const double> step_mask, std::span<const double> error_norm_mask,
                         std::span<const Complex> error_spectrum) const {
  if (step_mask.size() != config_.bins || error_norm_mask.size() != config_.bins)
    throw ConfigError("AecFilter: step-size masks must carry one value per bin");
  const double block_ratio =
      static_cast<double>(config_.block_length) / static_cast<double>(config_.frame_shift);
  Vec mu(config_.bins);
  for (std::size_t f = 0; f < config_.bins; ++f) {
    const double masked_error = error_norm_mask[f] * error_norm_mask[f] * std::norm(error_spectrum[f]);
    mu[f] = step_mask[f] / (psd_[f] + block_ratio * masked_error + kStepSizeGuard);
  }
  return mu;
}

void AecFilter::update_filters(std::span<const Complex> x_spectrum,
                               const std::vector<CVec>& error_spectra,
                               const std::vector<Vec>& step_sizes) {
  const std::size_t m = config_.block_length;
  CVec update(m);
  for (std::size_t mic = 0; mic < config_.channels; ++mic) {
    const CVec& error = error_spectra[mic];
    const Vec& mu = step_sizes[mic];
    for (std::size_t f = 0; f < m; ++f) {
      // Mirror the half-spectrum step size so the time-domain filter stays real.
      const std::size_t bin = (f < config_.bins) ? f : m - f;
      update[f] = mu[bin] * std::conj(x_spectrum[f]) * error[f];
    }
    CVec constrained = apply_fir_constraint(update);
    CVec& filter = filters_[mic];
    for (std::size_t f = 0; f < m; ++f) filter[f] += constrained[f];
  }
}

AecFilter::BlockResult AecFilter::process_block(std::span<const double> x_innovation,
                                                const std::vector<Vec>& mic_innovations,
                                                std::span<const double> step_mask,
                                                std::span<const double> error_norm_mask) {
  if (mic_innovations.size() != config_.channels)
    throw ConfigError("AecFilter: microphone channel count mismatch");
  if (!all_finite(x_innovation)) throw NumericError("AecFilter: non-finite loudspeaker input");
  for (const Vec& mic : mic_innovations) {
    if (mic.size() != config_.frame_shift)
      throw ConfigError("AecFilter: microphone innovation has wrong length");
    if (!all_finite(mic)) throw NumericError("AecFilter: non-finite microphone input");
  }

  Vec x_block = loudspeaker_block(x_innovation);
  CVec x_spectrum = dft(std::span<const double>(x_block));

  BlockResult result;
  result.echo_estimates = estimate_echo(x_spectrum);
  result.error_innovations = compute_error(mic_innovations, result.echo_estimates);
  result.error_spectra.reserve(config_.channels);
  for (const Vec& error : result.error_innovations) {
    Vec padded = place_in_block_tail(error);
    result.error_spectra.push_back(dft(std::span<const double>(padded)));
  }

  update_loudspeaker_psd(x_spectrum);
  if (!frozen_) {
    std::vector<Vec> step_sizes;
    step_sizes.reserve(config_.channels);
    for (std::size_t mic = 0; mic < config_.channels; ++mic)
      step_sizes.push_back(step_size(step_mask, error_norm_mask, result.error_spectra[mic]));
    update_filters(x_spectrum, result.error_spectra, step_sizes);
  }

  std::copy(x_innovation.begin(), x_innovation.end(), prev_x_innovation_.begin());
  return result;
}

void AecFilter::set_filter_taps(std::size_t mic, std::span<const double> taps) {
  if (mic >= config_.channels) throw ConfigError("AecFilter: microphone index out of range");
  if (taps.size() > config_.frame_shift)
    throw ConfigError("AecFilter: at most frame_shift filter taps are representable");
  Vec padded(config_.frame_shift, 0.0);
  std::copy(taps.begin(), taps.end(), padded.begin());
  filters_[mic] = dft(std::span<const double>(zero_pad_filter(padded)));
}

Vec AecFilter::filter_taps(std::size_t mic) const {
  Vec time = idft_real(std::span<const Complex>(filters_[mic]));
  time.resize(config_.frame_shift);
  return time;
}

std::vector<Vec> compute_error(const std::vector<Vec>& mic_innovations,
                               const std::vector<Vec>& echo_estimates) {
  if (mic_innovations.size() != echo_estimates.size())
    throw ConfigError("compute_error: channel count mismatch");
  std::vector<Vec> errors(mic_innovations.size());
  for (std::size_t mic = 0; mic < mic_innovations.size(); ++mic) {
    const Vec& y = mic_innovations[mic];
    const Vec& d = echo_estimates[mic];
    if (y.size() != d.size()) throw ConfigError("compute_error: innovation length mismatch");
    Vec& e = errors[mic];
    e.resize(y.size());
    for (std::size_t n = 0; n < y.size(); ++n) e[n] = y[n] - d[n];
  }
  return errors;
}

}  // namespace echobeam
