#pragma once

#include <span>

#include "types.hpp"

namespace echobeam {

// Discrete Fourier transform pair used throughout the project: unnormalized
// forward transform, 1/N inverse. Arbitrary lengths are supported.
CVec dft(std::span<const double> block);
CVec dft(std::span<const Complex> block);
CVec idft(std::span<const Complex> spectrum);

// Real part of idft(); the imaginary part is the caller's responsibility.
Vec idft_real(std::span<const Complex> spectrum);

// Linear convolution of signal and kernel via FFT, full length
// signal.size() + kernel.size() - 1.
Vec fft_convolve(std::span<const double> signal, std::span<const double> kernel);

}  // namespace echobeam
