#include "control.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace echobeam {

namespace {

constexpr double kRatioMaskGuard = 1e-12;
constexpr char kMaskMagic[4] = {'E', 'F', 'M', 'K'};

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void append_f32(std::ofstream& out, const Vec& values) {
  for (double v : values) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}

Vec read_f32(std::ifstream& in, std::size_t count) {
  std::vector<float> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw FormatError("mask file: truncated payload");
  Vec values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = static_cast<double>(raw[i]);
  return values;
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError("mask file: truncated header");
  return v;
}

}  // namespace

MaskSet MaskSet::constant(const FrameConfig& config, double step, double error_norm,
                          double beamformer, double postfilter) {
  MaskSet masks;
  masks.step.assign(config.bins, step);
  masks.error_norm.assign(config.bins, error_norm);
  masks.beamformer.assign(config.channels, Vec(config.bins, beamformer));
  masks.postfilter.assign(config.bins, postfilter);
  clamp_mask_set(masks);
  return masks;
}

std::size_t clamp_mask(Vec& values) {
  std::size_t out_of_range = 0;
  for (double& v : values) {
    const double clamped = clamp01(v);
    if (clamped != v) ++out_of_range;
    v = clamped;
  }
  return out_of_range;
}

void quantize_mask(Vec& values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::size_t clamp_mask_set(MaskSet& masks) {
  std::size_t n = clamp_mask(masks.step) + clamp_mask(masks.error_norm) + clamp_mask(masks.postfilter);
  for (Vec& row : masks.beamformer) n += clamp_mask(row);
  return n;
}

std::vector<Vec> oracle_bf_mask(const OracleContext& ctx, const FrameConfig& config) {
  std::vector<Vec> mask(config.channels, Vec(config.bins, 0.0));
  for (std::size_t p = 0; p < config.channels; ++p) {
    for (std::size_t f = 0; f < config.bins; ++f) {
      const double speech = std::abs(ctx.speech[p][f]);
      const double interference = std::abs(ctx.residual_echo[p][f] + ctx.noise[p][f]);
      mask[p][f] = clamp01(speech / (speech + interference + kRatioMaskGuard));
    }
  }
  return mask;
}

Vec oracle_pf_mask(const BeamformedContext& ctx) {
  Vec mask(ctx.speech.size());
  for (std::size_t f = 0; f < mask.size(); ++f) {
    const double speech = std::abs(ctx.speech[f]);
    const double interference = std::abs(ctx.residual_echo[f] + ctx.noise[f]);
    mask[f] = clamp01(speech / (speech + interference + kRatioMaskGuard));
  }
  return mask;
}

AecFilter make_oracle_aec(const FrameConfig& config, const std::vector<Vec>& echo_rirs) {
  if (echo_rirs.size() != config.channels)
    throw ConfigError("make_oracle_aec: one echo path per microphone required");
  AecFilter aec(config);
  for (std::size_t mic = 0; mic < config.channels; ++mic) {
    const Vec& rir = echo_rirs[mic];
    const std::size_t taps = std::min(rir.size(), config.frame_shift);
    aec.set_filter_taps(mic, std::span<const double>(rir.data(), taps));
  }
  aec.freeze(true);
  return aec;
}

ConstantMaskProvider::ConstantMaskProvider(const FrameConfig& config, double step,
                                           double error_norm, double beamformer, double postfilter)
    : masks_(MaskSet::constant(config, step, error_norm, beamformer, postfilter)) {}

void ConstantMaskProvider::aec_masks(std::size_t, Vec& step, Vec& error_norm) {
  step = masks_.step;
  error_norm = masks_.error_norm;
}

std::vector<Vec> ConstantMaskProvider::bf_mask(std::size_t, const OracleContext*) {
  return masks_.beamformer;
}

Vec ConstantMaskProvider::pf_mask(std::size_t, const BeamformedContext*) {
  return masks_.postfilter;
}

OracleMaskProvider::OracleMaskProvider(const FrameConfig& config, bool direct_cpsd)
    : config_(config), direct_(direct_cpsd) {}

void OracleMaskProvider::aec_masks(std::size_t, Vec& step, Vec& error_norm) {
  // Oracle runs freeze the canceller; adaptation masks stay at zero.
  step.assign(config_.bins, 0.0);
  error_norm.assign(config_.bins, 0.0);
}

std::vector<Vec> OracleMaskProvider::bf_mask(std::size_t, const OracleContext* ctx) {
  if (ctx == nullptr) throw ConfigError("OracleMaskProvider: component context required");
  return oracle_bf_mask(*ctx, config_);
}

Vec OracleMaskProvider::pf_mask(std::size_t, const BeamformedContext* ctx) {
  if (ctx == nullptr) throw ConfigError("OracleMaskProvider: beamformed context required");
  return oracle_pf_mask(*ctx);
}

FileMaskProvider::FileMaskProvider(const std::string& path, const FrameConfig& config,
                                   std::size_t min_blocks) {
  blocks_ = read_mask_file(path, config, min_blocks, &clamp_warnings_);
}

void FileMaskProvider::aec_masks(std::size_t block, Vec& step, Vec& error_norm) {
  step = blocks_.at(block).step;
  error_norm = blocks_.at(block).error_norm;
}

std::vector<Vec> FileMaskProvider::bf_mask(std::size_t block, const OracleContext*) {
  return blocks_.at(block).beamformer;
}

Vec FileMaskProvider::pf_mask(std::size_t block, const BeamformedContext*) {
  return blocks_.at(block).postfilter;
}

void write_mask_file(const std::string& path, const FrameConfig& config,
                     const std::vector<MaskSet>& blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("mask file: cannot open for writing: " + path);
  out.write(kMaskMagic, sizeof(kMaskMagic));
  const std::uint32_t header[4] = {kMaskFileVersion, static_cast<std::uint32_t>(config.channels),
                                   static_cast<std::uint32_t>(config.bins),
                                   static_cast<std::uint32_t>(blocks.size())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const MaskSet& masks : blocks) {
    if (masks.step.size() != config.bins || masks.error_norm.size() != config.bins ||
        masks.postfilter.size() != config.bins || masks.beamformer.size() != config.channels)
      throw ConfigError("mask file: mask set shape does not match the frame config");
    append_f32(out, masks.step);
    append_f32(out, masks.error_norm);
    for (const Vec& row : masks.beamformer) append_f32(out, row);
    append_f32(out, masks.postfilter);
  }
  if (!out) throw IoError("mask file: write failed: " + path);
}

std::vector<MaskSet> read_mask_file(const std::string& path, const FrameConfig& config,
                                    std::size_t min_blocks, std::size_t* clamp_warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("mask file: cannot open: " + path);
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMaskMagic, sizeof(magic)) != 0)
    throw FormatError("mask file: bad magic");
  const std::uint32_t version = read_u32(in);
  if (version != kMaskFileVersion)
    throw FormatError("mask file: unsupported version " + std::to_string(version));
  const std::uint32_t mics = read_u32(in);
  const std::uint32_t bins = read_u32(in);
  const std::uint32_t count = read_u32(in);
  if (mics != config.channels || bins != config.bins)
    throw FormatError("mask file: shape mismatch (file " + std::to_string(mics) + "x" +
                      std::to_string(bins) + ", config " + std::to_string(config.channels) + "x" +
                      std::to_string(config.bins) + ")");
  if (count < min_blocks)
    throw FormatError("mask file: holds " + std::to_string(count) + " blocks, stream needs " +
                      std::to_string(min_blocks));

  std::size_t warnings = 0;
  std::vector<MaskSet> blocks(count);
  for (MaskSet& masks : blocks) {
    masks.step = read_f32(in, config.bins);
    masks.error_norm = read_f32(in, config.bins);
    masks.beamformer.resize(config.channels);
    for (Vec& row : masks.beamformer) row = read_f32(in, config.bins);
    masks.postfilter = read_f32(in, config.bins);
    warnings += clamp_mask_set(masks);
  }
  if (clamp_warnings != nullptr) *clamp_warnings = warnings;
  return blocks;
}

}  // namespace echobeam
