#include "wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace echobeam {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

template <typename T>
void write_raw(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!in) throw FormatError("wav: truncated file");
  return value;
}

}  // namespace

void write_wav(const std::string& path, const std::vector<Vec>& channels, double sample_rate) {
  if (channels.empty()) throw ConfigError("wav: no channels to write");
  const std::size_t frames = channels.front().size();
  for (const Vec& c : channels)
    if (c.size() != frames) throw ConfigError("wav: channel lengths differ");

  const auto num_channels = static_cast<std::uint16_t>(channels.size());
  const auto rate = static_cast<std::uint32_t>(sample_rate);
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(frames * channels.size() * sizeof(float));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("wav: cannot open for writing: " + path);

  out.write("RIFF", 4);
  write_raw<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_raw<std::uint32_t>(out, 16);
  write_raw<std::uint16_t>(out, kFormatFloat);
  write_raw<std::uint16_t>(out, num_channels);
  write_raw<std::uint32_t>(out, rate);
  write_raw<std::uint32_t>(out, rate * num_channels * sizeof(float));
  write_raw<std::uint16_t>(out, static_cast<std::uint16_t>(num_channels * sizeof(float)));
  write_raw<std::uint16_t>(out, 32);
  out.write("data", 4);
  write_raw<std::uint32_t>(out, data_bytes);

  std::vector<float> interleaved(frames * channels.size());
  for (std::size_t n = 0; n < frames; ++n)
    for (std::size_t c = 0; c < channels.size(); ++c)
      interleaved[n * channels.size() + c] = static_cast<float>(channels[c][n]);
  out.write(reinterpret_cast<const char*>(interleaved.data()),
            static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
  if (!out) throw IoError("wav: write failed: " + path);
}

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("wav: cannot open: " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw FormatError("wav: missing RIFF header");
  read_raw<std::uint32_t>(in);
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw FormatError("wav: not a WAVE file");

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;

  while (in.read(tag, 4)) {
    const auto chunk_size = read_raw<std::uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_raw<std::uint16_t>(in);
      num_channels = read_raw<std::uint16_t>(in);
      rate = read_raw<std::uint32_t>(in);
      read_raw<std::uint32_t>(in);
      read_raw<std::uint16_t>(in);
      bits = read_raw<std::uint16_t>(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("wav: data chunk before fmt chunk");
      if (num_channels == 0) throw FormatError("wav: zero channels");
      std::vector<char> payload(chunk_size);
      in.read(payload.data(), chunk_size);
      if (!in) throw FormatError("wav: truncated data chunk");

      std::size_t frames = 0;
      WavData wav;
      wav.sample_rate = static_cast<double>(rate);
      if (format == kFormatFloat && bits == 32) {
        frames = chunk_size / (sizeof(float) * num_channels);
        wav.channels.assign(num_channels, Vec(frames));
        const auto* samples = reinterpret_cast<const float*>(payload.data());
        for (std::size_t n = 0; n < frames; ++n)
          for (std::size_t c = 0; c < num_channels; ++c)
            wav.channels[c][n] = static_cast<double>(samples[n * num_channels + c]);
      } else if (format == kFormatPcm && bits == 16) {
        frames = chunk_size / (sizeof(std::int16_t) * num_channels);
        wav.channels.assign(num_channels, Vec(frames));
        const auto* samples = reinterpret_cast<const std::int16_t*>(payload.data());
        for (std::size_t n = 0; n < frames; ++n)
          for (std::size_t c = 0; c < num_channels; ++c)
            wav.channels[c][n] = static_cast<double>(samples[n * num_channels + c]) / 32768.0;
      } else {
        throw FormatError("wav: unsupported sample format (" + std::to_string(format) + "/" +
                          std::to_string(bits) + " bit)");
      }
      return wav;
    } else {
      in.seekg(chunk_size + (chunk_size & 1u), std::ios::cur);
    }
  }
  throw FormatError("wav: no data chunk found");
}

}  // namespace echobeam
