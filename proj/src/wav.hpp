#pragma once

#include <string>
#include <vector>

#include "types.hpp"

namespace echobeam {

struct WavData {
  std::vector<Vec> channels;
  double sample_rate = 16000.0;
};

// 32-bit IEEE float WAV, interleaved multichannel. Values are written as-is;
// no clipping.
void write_wav(const std::string& path, const std::vector<Vec>& channels, double sample_rate);

// Reads 32-bit float or 16-bit PCM WAV files.
WavData read_wav(const std::string& path);

}  // namespace echobeam
