#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "fft.hpp"
#include "frames.hpp"
#include "test_oracles.hpp"

using namespace echobeam;
using namespace echobeam::testing;

TEST_CASE("frame config ties block length and bins to the frame shift") {
  const FrameConfig config = make_frame_config(1024);
  CHECK(config.block_length == 2048);
  CHECK(config.bins == 1025);
  CHECK(config.channels == 4);
  CHECK(config.sample_rate == doctest::Approx(16000.0));

  CHECK_THROWS_AS(make_frame_config(0), ConfigError);
  CHECK_THROWS_AS(make_frame_config(8, 0), ConfigError);
  CHECK_THROWS_AS(make_frame_config(8, 2, 0.0), ConfigError);
}

TEST_CASE("signal blocks concatenate two innovation blocks") {
  CHECK(make_signal_block(Vec{0, 0}, Vec{0, 0}) == Vec{0, 0, 0, 0});
  CHECK(make_signal_block(Vec{1, 2}, Vec{3, 4}) == Vec{1, 2, 3, 4});
  CHECK_THROWS_AS(make_signal_block(Vec{1}, Vec{2, 3}), ConfigError);
}

TEST_CASE("streaming a signal yields blocks overlapping by one frame shift") {
  // Scalar-loop oracle over 3R samples: block tau must read samples
  // [(tau-1)R, (tau+1)R) with a zero block before the stream.
  const std::size_t shift = 4;
  Rng rng(11);
  const Vec stream = random_vec(rng, 3 * shift);

  Vec prev(shift, 0.0);
  for (std::size_t tau = 0; tau < 3; ++tau) {
    Vec cur(stream.begin() + static_cast<std::ptrdiff_t>(tau * shift),
            stream.begin() + static_cast<std::ptrdiff_t>((tau + 1) * shift));
    const Vec block = make_signal_block(prev, cur);
    for (std::size_t n = 0; n < 2 * shift; ++n) {
      const long absolute = static_cast<long>(tau * shift + n) - static_cast<long>(shift);
      const double expected = absolute < 0 ? 0.0 : stream[static_cast<std::size_t>(absolute)];
      CHECK(block[n] == doctest::Approx(expected));
    }
    prev = cur;
  }
}

TEST_CASE("dft of a unit impulse is an all-ones spectrum") {
  Vec impulse(8, 0.0);
  impulse[0] = 1.0;
  const CVec spectrum = dft(std::span<const double>(impulse));
  for (const Complex& bin : spectrum) {
    CHECK(bin.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bin.imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("dft round trip is the identity within 1e-12") {
  Rng rng(3);
  const Vec x = random_vec(rng, 64);
  const Vec back = idft_real(dft(std::span<const double>(x)));
  CHECK(relative_error(back, x) < 1e-12);
}

TEST_CASE("dft matches the naive summation oracle") {
  Rng rng(5);
  const Vec x = random_vec(rng, 8);
  const CVec fast = dft(std::span<const double>(x));
  const CVec slow = naive_dft_real(x);
  for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-12);
}

TEST_CASE("dft preserves conjugate symmetry for real blocks") {
  Rng rng(7);
  const Vec x = random_vec(rng, 32);
  const CVec spectrum = dft(std::span<const double>(x));
  for (std::size_t k = 1; k < 16; ++k)
    CHECK(std::abs(spectrum[32 - k] - std::conj(spectrum[k])) < 1e-12);
}

TEST_CASE("valid convolution tail keeps the last half") {
  CHECK(valid_convolution_tail(Vec{1, 2, 3, 4}) == Vec{3, 4});
  CHECK(valid_convolution_tail(Vec{0, 0, 0, 0}) == Vec{0, 0});
}

TEST_CASE("zero padding places filter taps first") {
  CHECK(zero_pad_filter(Vec{1, 2}) == Vec{1, 2, 0, 0});
  // Selecting the first half back out is the identity.
  const Vec padded = zero_pad_filter(Vec{5, 6, 7});
  CHECK(Vec(padded.begin(), padded.begin() + 3) == Vec{5, 6, 7});
}

TEST_CASE("overlap-save block convolution reproduces the direct linear convolution") {
  const std::size_t shift = 16;
  Rng rng(17);
  const Vec taps = random_vec(rng, shift);
  const Vec stream = random_vec(rng, 5 * shift);
  const Vec reference = direct_convolve(stream, taps);

  const CVec filter_spectrum = dft(std::span<const double>(zero_pad_filter(taps)));
  Vec prev(shift, 0.0);
  for (std::size_t tau = 0; tau < 5; ++tau) {
    Vec cur(stream.begin() + static_cast<std::ptrdiff_t>(tau * shift),
            stream.begin() + static_cast<std::ptrdiff_t>((tau + 1) * shift));
    CVec block_spectrum = dft(std::span<const double>(make_signal_block(prev, cur)));
    for (std::size_t k = 0; k < block_spectrum.size(); ++k) block_spectrum[k] *= filter_spectrum[k];
    const Vec tail = valid_convolution_tail(idft_real(block_spectrum));
    for (std::size_t n = 0; n < shift; ++n)
      CHECK(tail[n] == doctest::Approx(reference[tau * shift + n]).epsilon(1e-10));
    prev = cur;
  }
}

TEST_CASE("the FIR-constraint projection is idempotent and zeroes the time tail") {
  Rng rng(23);
  const CVec spectrum = random_cvec(rng, 32);
  const CVec once = apply_fir_constraint(spectrum);
  const CVec twice = apply_fir_constraint(once);
  for (std::size_t k = 0; k < once.size(); ++k) CHECK(std::abs(once[k] - twice[k]) < 1e-12);

  const CVec time = idft(std::span<const Complex>(once));
  for (std::size_t n = 16; n < 32; ++n) CHECK(std::abs(time[n]) < 1e-12);
}

TEST_CASE("hamming window is periodic and within range") {
  const Vec window = hamming_window(2048);
  CHECK(window[0] == doctest::Approx(0.08));
  CHECK(window[1024] == doctest::Approx(1.0));
  for (double v : window) {
    CHECK(v > 0.0);
    CHECK(v <= 1.09);
  }
  // Periodic variant: w[n] != w[M-n] symmetry holds around M/2 only.
  CHECK(window[1] == doctest::Approx(window[2047]));
}

TEST_CASE("analysis and synthesis windows overlap-add to one") {
  const std::size_t shift = 64;
  const Vec analysis = hamming_window(2 * shift);
  const Vec dual = synthesis_window(analysis, shift);
  for (std::size_t n = 0; n < shift; ++n) {
    const double sum = analysis[n] * dual[n] + analysis[n + shift] * dual[n + shift];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("stft analysis matches the naive windowed transform") {
  const std::size_t shift = 8;
  const Vec window = hamming_window(2 * shift);
  Rng rng(29);
  const Vec prev = random_vec(rng, shift);
  const Vec cur = random_vec(rng, shift);

  SUBCASE("zero input gives a zero spectrum") {
    const CVec spectrum = stft_analyze(Vec(shift, 0.0), Vec(shift, 0.0), window);
    for (const Complex& bin : spectrum) CHECK(std::abs(bin) < 1e-15);
  }
  SUBCASE("constant one input gives the window transform") {
    const CVec spectrum = stft_analyze(Vec(shift, 1.0), Vec(shift, 1.0), window);
    const CVec expected = naive_dft_real(window);
    for (std::size_t k = 0; k < spectrum.size(); ++k) CHECK(std::abs(spectrum[k] - expected[k]) < 1e-12);
  }
  SUBCASE("random input matches the oracle") {
    const CVec spectrum = stft_analyze(prev, cur, window);
    Vec windowed = make_signal_block(prev, cur);
    for (std::size_t n = 0; n < windowed.size(); ++n) windowed[n] *= window[n];
    const CVec expected = naive_dft_real(windowed);
    for (std::size_t k = 0; k < spectrum.size(); ++k) CHECK(std::abs(spectrum[k] - expected[k]) < 1e-12);
  }
}

TEST_CASE("analysis followed by synthesis reconstructs the stream") {
  const std::size_t shift = 32;
  const Vec window = hamming_window(2 * shift);
  Rng rng(31);
  const Vec stream = random_vec(rng, 10 * shift);

  std::vector<CVec> frames;
  Vec prev(shift, 0.0);
  for (std::size_t tau = 0; tau < 10; ++tau) {
    Vec cur(stream.begin() + static_cast<std::ptrdiff_t>(tau * shift),
            stream.begin() + static_cast<std::ptrdiff_t>((tau + 1) * shift));
    frames.push_back(stft_analyze(prev, cur, window));
    prev = cur;
  }
  const Vec rebuilt = stft_synthesize(frames, window, shift);
  REQUIRE(rebuilt.size() == stream.size());
  // Interior: everything except the final (single-frame) half block.
  double worst = 0.0, ref = 0.0;
  for (std::size_t n = 0; n < 9 * shift; ++n) {
    worst = std::max(worst, std::abs(rebuilt[n] - stream[n]));
    ref = std::max(ref, std::abs(stream[n]));
  }
  CHECK(worst / ref < 1e-10);
}

TEST_CASE("all-zero frames synthesize to silence and empty input to an empty signal") {
  const std::size_t shift = 16;
  const Vec window = hamming_window(2 * shift);
  CHECK(stft_synthesize({}, window, shift).empty());
  const std::vector<CVec> frames(4, CVec(2 * shift, Complex(0.0, 0.0)));
  for (double v : stft_synthesize(frames, window, shift)) CHECK(v == 0.0);
}

TEST_CASE("a sinusoid survives the analysis-synthesis round trip") {
  const std::size_t shift = 256;
  const Vec window = hamming_window(2 * shift);
  const std::size_t total = 20 * shift;
  Vec tone(total);
  for (std::size_t n = 0; n < total; ++n)
    tone[n] = std::sin(2.0 * std::numbers::pi * 0.031 * static_cast<double>(n));

  std::vector<CVec> frames;
  Vec prev(shift, 0.0);
  for (std::size_t tau = 0; tau < 20; ++tau) {
    Vec cur(tone.begin() + static_cast<std::ptrdiff_t>(tau * shift),
            tone.begin() + static_cast<std::ptrdiff_t>((tau + 1) * shift));
    frames.push_back(stft_analyze(prev, cur, window));
    prev = cur;
  }
  const Vec rebuilt = stft_synthesize(frames, window, shift);
  for (std::size_t n = shift; n < total - 2 * shift; ++n)
    CHECK(rebuilt[n] == doctest::Approx(tone[n]).epsilon(1e-6));
}
