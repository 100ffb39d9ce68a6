#pragma once

// Cycle-annotated functional models of the processing units. All units
// consume spike bit planes and count clock cycles while they step; the
// closed-form *_cycles helpers give the same numbers without running data.

#include "rsnn/encoding.hpp"
#include "rsnn/netmodel.hpp"
#include "rsnn/params.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rsnn {

/// Adder-array geometry: `columns` parallel outputs (X) by `rows` kernel
/// rows (Y).
struct UnitGeometry {
  int columns = 30;
  int rows = 5;

  void validate() const;
  friend bool operator==(const UnitGeometry&, const UnitGeometry&) = default;
};

struct CostModel {
  std::int64_t row_fetch_cycles = 1;
  std::int64_t output_write_cycles = 1;
  /// Adders in the linear unit's row, i.e. outputs produced in parallel.
  int linear_parallel_outputs = 16;

  void validate() const;
  friend bool operator==(const CostModel&, const CostModel&) = default;
};

/// Input logic shift register. Every cell remembers which column of the
/// (virtually zero-padded) input row it holds; shifting moves all cells one
/// position towards the adders and fills the tail with zeros.
class ShiftRegister {
 public:
  static constexpr int kEmpty = -1;

  explicit ShiftRegister(int length = 0);

  /// Loads one input row; cells [pad, pad + row.size()) hold the row and all
  /// other cells read as zero.
  void load(std::span<const std::uint8_t> row, int pad);
  /// Loads an all-zero row (padding rows above/below the feature map).
  void clear();
  void shift() { ++offset_; }

  int length() const { return static_cast<int>(bits_.size()); }
  std::uint8_t tap(int position) const {
    const int cell = position + offset_;
    return cell < length() ? bits_[cell] : std::uint8_t{0};
  }
  /// Padded-row column visible at `position`, or kEmpty once shifted out.
  int source(int position) const {
    const int cell = position + offset_;
    return cell < length() ? cell : kEmpty;
  }

 private:
  std::vector<std::uint8_t> bits_;
  int offset_ = 0;
};

/// Positions seen by each adder column while a kernel row is applied:
/// result[k][x] is the padded-row column under adder x after k shifts.
std::vector<std::vector<int>> tap_trace(int columns, int stride,
                                        int kernel_cols, int register_length);

// --- Convolution unit -------------------------------------------------------

/// Partial sums of one output channel from one input channel at one time
/// step, as produced by the bottom adder row (H_out x W_out).
struct PartialSums {
  int time_step = 0;
  int in_channel = 0;
  int out_channel = 0;
  Plane<std::int64_t> sums;
};

struct ConvRunResult {
  /// Per output channel: time-step major, input channels complete per step.
  std::vector<PartialSums> stream;
  std::int64_t cycles = 0;
  int channel_parallel = 1;
  int passes = 0;
};

/// Output channels that share one adder array side by side.
int conv_channel_parallel(const UnitGeometry& geom, const ConvLayerSpec& layer);

/// Throws CapacityError naming the required X/Y when the layer cannot run
/// untiled on `geom`.
void check_conv_capacity(const UnitGeometry& geom, const ConvLayerSpec& layer);

/// Cycles of one pass (one group of packed output channels over all time
/// steps and input channels):
///   T * C_in * (H_out * (K_c + row_fetch) + K_c * (K_r - 1))
///   + output_write * H_out
std::int64_t conv_pass_cycles(const ConvLayerSpec& layer, int time_steps,
                              const CostModel& cost);

/// Runs the adder array over `out_channels` (all channels when empty).
ConvRunResult conv_unit_run(const UnitGeometry& geom, const ConvLayerSpec& layer,
                            const SpikePlanes& spikes,
                            const QuantizedTensor& kernels,
                            const CostModel& cost,
                            std::span<const int> out_channels = {});

// --- Output logic -----------------------------------------------------------

struct Epilogue {
  bool relu = true;
  int requant_shift = 0;
};

/// Streaming accumulator behind the convolution unit: sums input channels
/// within a time step and shift-accumulates across time steps.
class OutputLogic {
 public:
  OutputLogic(Shape out, int in_channels, int time_steps);

  /// Throws ProtocolError if the entry arrives out of order for its channel.
  void accumulate(const PartialSums& partial);
  bool complete() const;
  /// Full-precision accumulators. Throws ProtocolError if incomplete.
  const IntTensor& accumulators() const;

 private:
  struct ChannelState {
    int time_step = 0;
    int next_in_channel = 0;
  };

  Shape out_;
  int in_channels_;
  int time_steps_;
  IntTensor acc_;
  IntTensor step_sum_;
  std::vector<ChannelState> state_;
};

/// ReLU, right shift and clamp to [0, 2^T - 1].
IntTensor requantize(const IntTensor& acc, const Epilogue& epilogue,
                     const EncodingConfig& cfg);

/// Accumulates a complete partial-sum stream and re-encodes the requantized
/// result as spike planes for the next layer.
SpikePlanes output_logic_accumulate(std::span<const PartialSums> stream,
                                    Shape out, int in_channels,
                                    const EncodingConfig& cfg,
                                    const Epilogue& epilogue);

// --- Pooling unit -----------------------------------------------------------

struct PoolRunResult {
  SpikePlanes output;
  IntTensor window_sums;
  std::int64_t cycles = 0;
  int channel_parallel = 1;
  int passes = 0;
};

int pool_channel_parallel(const UnitGeometry& geom, const PoolLayerSpec& layer);
void check_pool_capacity(const UnitGeometry& geom, const PoolLayerSpec& layer);

/// Cycles of one pass: T * (H_out * (window + row_fetch) + window * (window - 1))
/// + output_write * H_out.
std::int64_t pool_pass_cycles(const PoolLayerSpec& layer, int time_steps,
                              const CostModel& cost);

PoolRunResult pool_unit_run(const UnitGeometry& geom, const PoolLayerSpec& layer,
                            const SpikePlanes& spikes, const CostModel& cost);

// --- Linear unit ------------------------------------------------------------

struct LinearRunResult {
  IntTensor accumulators;
  /// Empty when run as the final layer.
  SpikePlanes output;
  std::int64_t cycles = 0;
};

/// T * in_features * ceil(out_features / P).
std::int64_t linear_cycles(const LinearLayerSpec& layer, int time_steps,
                           const CostModel& cost);

/// Without an epilogue the layer is treated as final and only the raw
/// accumulators (logits) are produced.
LinearRunResult linear_unit_run(const LinearLayerSpec& layer,
                                const SpikePlanes& spikes,
                                const QuantizedTensor& weights,
                                const CostModel& cost,
                                const std::optional<Epilogue>& epilogue);

}  // namespace rsnn
