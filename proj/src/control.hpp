#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aec.hpp"
#include "frames.hpp"
#include "types.hpp"

namespace echobeam {

// The four control mask families for one block. All entries live in [0, 1].
struct MaskSet {
  Vec step;                    // adaptation step mask, bins entries
  Vec error_norm;              // error-power normalization mask, bins entries
  std::vector<Vec> beamformer; // per mic, bins entries each
  Vec postfilter;              // bins entries

  static MaskSet constant(const FrameConfig& config, double step, double error_norm,
                          double beamformer, double postfilter);
};

// Clamps every entry into [0, 1]; returns how many entries were out of range.
std::size_t clamp_mask(Vec& values);
std::size_t clamp_mask_set(MaskSet& masks);

// Rounds to the mask stream's storage precision (float32) so that a run and
// its serialized replay see identical values.
void quantize_mask(Vec& values);

// Per-block component images at the echo-canceller error point, one
// full-block spectrum per mic per component.
struct OracleContext {
  std::vector<CVec> residual_echo;
  std::vector<CVec> speech;
  std::vector<CVec> noise;
};

// Component images at the beamformer output, `bins` entries each.
struct BeamformedContext {
  CVec residual_echo;
  CVec speech;
  CVec noise;
};

// Magnitude-ratio masks from ground-truth components.
std::vector<Vec> oracle_bf_mask(const OracleContext& ctx, const FrameConfig& config);
Vec oracle_pf_mask(const BeamformedContext& ctx);

// Frozen echo canceller holding the leading frame-shift taps of the true
// echo paths.
AecFilter make_oracle_aec(const FrameConfig& config, const std::vector<Vec>& echo_rirs);

// Supplies control masks per block. The pipeline calls the three stage
// methods in processing order; oracle implementations derive masks from the
// supplied contexts, others ignore them.
class MaskProvider {
 public:
  virtual ~MaskProvider() = default;

  // False once the provider has run out of blocks (stream ends there).
  virtual bool has_block(std::size_t block) const { return true; }

  // True when the provider needs component contexts.
  virtual bool wants_oracle() const { return false; }
  // True when the cross-PSD recursions should consume the true component
  // spectra directly instead of mask-split errors.
  virtual bool direct_cpsd() const { return false; }

  virtual void aec_masks(std::size_t block, Vec& step, Vec& error_norm) = 0;
  virtual std::vector<Vec> bf_mask(std::size_t block, const OracleContext* ctx) = 0;
  virtual Vec pf_mask(std::size_t block, const BeamformedContext* ctx) = 0;
};

class ConstantMaskProvider : public MaskProvider {
 public:
  ConstantMaskProvider(const FrameConfig& config, double step, double error_norm,
                       double beamformer, double postfilter);

  void aec_masks(std::size_t block, Vec& step, Vec& error_norm) override;
  std::vector<Vec> bf_mask(std::size_t block, const OracleContext* ctx) override;
  Vec pf_mask(std::size_t block, const BeamformedContext* ctx) override;

 private:
  MaskSet masks_;
};

class OracleMaskProvider : public MaskProvider {
 public:
  // direct_cpsd selects the mode where true component spectra feed the
  // cross-PSD recursions; the ratio-mask realization is used otherwise.
  explicit OracleMaskProvider(const FrameConfig& config, bool direct_cpsd = false);

  bool wants_oracle() const override { return true; }
  bool direct_cpsd() const override { return direct_; }

  void aec_masks(std::size_t block, Vec& step, Vec& error_norm) override;
  std::vector<Vec> bf_mask(std::size_t block, const OracleContext* ctx) override;
  Vec pf_mask(std::size_t block, const BeamformedContext* ctx) override;

 private:
  FrameConfig config_;
  bool direct_;
};

class FileMaskProvider : public MaskProvider {
 public:
  // Loads the whole stream up front. Shape mismatches against `config` and a
  // block count short of `min_blocks` are load-time errors; out-of-range
  // stored values are clamped and counted.
  FileMaskProvider(const std::string& path, const FrameConfig& config, std::size_t min_blocks);

  bool has_block(std::size_t block) const override { return block < blocks_.size(); }
  void aec_masks(std::size_t block, Vec& step, Vec& error_norm) override;
  std::vector<Vec> bf_mask(std::size_t block, const OracleContext* ctx) override;
  Vec pf_mask(std::size_t block, const BeamformedContext* ctx) override;

  std::size_t clamp_warnings() const { return clamp_warnings_; }
  const std::vector<MaskSet>& blocks() const { return blocks_; }

 private:
  std::vector<MaskSet> blocks_;
  std::size_t clamp_warnings_ = 0;
};

// Binary mask stream format: magic "EFMK", little-endian u32 version, mics,
// bins, block count, then float32 payload per block in the order step,
// error_norm, beamformer (mic-major), postfilter.
void write_mask_file(const std::string& path, const FrameConfig& config,
                     const std::vector<MaskSet>& blocks);
std::vector<MaskSet> read_mask_file(const std::string& path, const FrameConfig& config,
                                    std::size_t min_blocks, std::size_t* clamp_warnings);

constexpr std::uint32_t kMaskFileVersion = 1;

}  // namespace echobeam
