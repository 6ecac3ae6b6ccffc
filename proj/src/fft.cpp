#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "errors.hpp"

namespace echobeam {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// FFTW's planner is not thread-safe; plans are created once per length under a
// lock. Execution uses the new-array interface on caller buffers, which is
// safe concurrently. FFTW_UNALIGNED keeps new-array execution valid for
// arbitrary heap buffers.
PlanPair plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  CVec scratch_in(n), scratch_out(n);
  auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
  auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair pair;
  pair.forward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, flags);
  pair.backward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, flags);
  if (pair.forward == nullptr || pair.backward == nullptr)
    throw ConfigError("fft: plan creation failed for length " + std::to_string(n));
  cache[n] = pair;
  return pair;
}

CVec execute(fftw_plan plan, CVec in) {
  CVec out(in.size());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

CVec dft(std::span<const Complex> block) {
  if (block.empty()) return {};
  return execute(plans_for(block.size()).forward, CVec(block.begin(), block.end()));
}

CVec dft(std::span<const double> block) {
  CVec in(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) in[i] = Complex(block[i], 0.0);
  return dft(std::span<const Complex>(in));
}

CVec idft(std::span<const Complex> spectrum) {
  if (spectrum.empty()) return {};
  const std::size_t n = spectrum.size();
  CVec out = execute(plans_for(n).backward, CVec(spectrum.begin(), spectrum.end()));
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

Vec idft_real(std::span<const Complex> spectrum) {
  CVec full = idft(spectrum);
  Vec out(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) out[i] = full[i].real();
  return out;
}

Vec fft_convolve(std::span<const double> signal, std::span<const double> kernel) {
  if (signal.empty() || kernel.empty()) return {};
  const std::size_t out_len = signal.size() + kernel.size() - 1;
  std::size_t n = 1;
  while (n < out_len) n <<= 1;

  CVec a(n, Complex(0.0, 0.0)), b(n, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < signal.size(); ++i) a[i] = Complex(signal[i], 0.0);
  for (std::size_t i = 0; i < kernel.size(); ++i) b[i] = Complex(kernel[i], 0.0);
  CVec fa = dft(std::span<const Complex>(a));
  CVec fb = dft(std::span<const Complex>(b));
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  Vec full = idft_real(fa);
  full.resize(out_len);
  return full;
}

}  // namespace echobeam
