// Independent reference implementations used as test oracles. These stay
// deliberately naive (O(n^2) sums, scalar loops) and never call into the
// code paths they check.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "rng.hpp"
#include "types.hpp"

namespace echobeam::testing {

// O(M^2) DFT by direct summation.
inline CVec naive_dft(std::span<const Complex> x) {
  const std::size_t m = x.size();
  CVec out(m, Complex(0.0, 0.0));
  for (std::size_t k = 0; k < m; ++k) {
    Complex acc(0.0, 0.0);
    for (std::size_t n = 0; n < m; ++n) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * n) /
                           static_cast<double>(m);
      acc += x[n] * Complex(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

inline CVec naive_dft_real(std::span<const double> x) {
  CVec cx(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) cx[n] = Complex(x[n], 0.0);
  return naive_dft(cx);
}

// Direct time-domain linear convolution, full length.
inline Vec direct_convolve(std::span<const double> signal, std::span<const double> kernel) {
  if (signal.empty() || kernel.empty()) return {};
  Vec out(signal.size() + kernel.size() - 1, 0.0);
  for (std::size_t i = 0; i < signal.size(); ++i)
    for (std::size_t j = 0; j < kernel.size(); ++j) out[i + j] += signal[i] * kernel[j];
  return out;
}

inline Vec random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline CVec random_cvec(Rng& rng, std::size_t n, double scale = 1.0) {
  CVec v(n);
  for (Complex& x : v) x = Complex(scale * rng.normal(), scale * rng.normal());
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double relative_error(std::span<const double> actual, std::span<const double> expected) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    num += (actual[i] - expected[i]) * (actual[i] - expected[i]);
    den += expected[i] * expected[i];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline double energy_of(std::span<const double> v, std::size_t begin = 0,
                        std::size_t end = SIZE_MAX) {
  double sum = 0.0;
  for (std::size_t n = begin; n < std::min(end, v.size()); ++n) sum += v[n] * v[n];
  return sum;
}

// Welch-averaged complex coherence between two channels at one frequency bin.
struct WelchCoherence {
  double real = 0.0;
  double magnitude_squared = 0.0;
};

inline WelchCoherence welch_coherence(std::span<const double> a, std::span<const double> b,
                                      std::size_t segment, double frequency_hz,
                                      double sample_rate) {
  const std::size_t hop = segment / 2;
  const auto bin = static_cast<std::size_t>(
      std::lround(frequency_hz * static_cast<double>(segment) / sample_rate));
  Vec window(segment);
  for (std::size_t n = 0; n < segment; ++n)
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                     static_cast<double>(segment));
  Complex cross(0.0, 0.0);
  double power_a = 0.0, power_b = 0.0;
  for (std::size_t start = 0; start + segment <= a.size(); start += hop) {
    Complex fa(0.0, 0.0), fb(0.0, 0.0);
    for (std::size_t n = 0; n < segment; ++n) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(bin * n) /
                           static_cast<double>(segment);
      const Complex rot(std::cos(angle), std::sin(angle));
      fa += window[n] * a[start + n] * rot;
      fb += window[n] * b[start + n] * rot;
    }
    cross += fa * std::conj(fb);
    power_a += std::norm(fa);
    power_b += std::norm(fb);
  }
  WelchCoherence out;
  if (power_a > 0.0 && power_b > 0.0) {
    out.real = (cross / std::sqrt(power_a * power_b)).real();
    out.magnitude_squared = std::norm(cross) / (power_a * power_b);
  }
  return out;
}

// Schroeder backward-integrated energy decay in dB, normalized to 0 dB at 0.
inline Vec schroeder_decay_db(std::span<const double> rir) {
  Vec decay(rir.size(), -300.0);
  double acc = 0.0;
  for (std::size_t n = rir.size(); n-- > 0;) {
    acc += rir[n] * rir[n];
    decay[n] = acc;
  }
  const double total = decay.empty() ? 0.0 : decay[0];
  if (total <= 0.0) return decay;
  for (double& v : decay) v = 10.0 * std::log10(std::max(v / total, 1e-30));
  return decay;
}

// First sample index where the Schroeder decay crosses `threshold_db`.
inline std::size_t decay_crossing(std::span<const double> decay_db, double threshold_db) {
  for (std::size_t n = 0; n < decay_db.size(); ++n)
    if (decay_db[n] <= threshold_db) return n;
  return decay_db.size();
}

}  // namespace echobeam::testing
