#pragma once

#include "rsnn/encoding.hpp"
#include "rsnn/memsys.hpp"
#include "rsnn/netmodel.hpp"
#include "rsnn/params.hpp"
#include "rsnn/simunits.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rsnn {

struct AcceleratorConfig {
  int time_steps = 3;
  int conv_units = 1;
  UnitGeometry conv{30, 5};
  UnitGeometry pool{14, 2};
  MemoryMode memory;
  CostModel cost;
  /// Only used to convert cycles to microseconds in reports.
  double clock_mhz = 100.0;

  EncodingConfig encoding() const { return EncodingConfig{time_steps}; }
  void validate() const;
  friend bool operator==(const AcceleratorConfig&, const AcceleratorConfig&) = default;
};

/// key = value lines; unknown keys are errors. See README for the key list.
AcceleratorConfig parse_accelerator_config(std::string_view text);
std::string to_text(const AcceleratorConfig& accel);

struct LayerCycles {
  int layer = 0;
  std::string kind;
  std::int64_t compute_cycles = 0;
  std::int64_t weight_fetch_cycles = 0;

  std::int64_t total() const { return compute_cycles + weight_fetch_cycles; }
  friend bool operator==(const LayerCycles&, const LayerCycles&) = default;
};

struct CycleReport {
  std::vector<LayerCycles> layers;
  std::int64_t compute_cycles = 0;
  std::int64_t weight_fetch_cycles = 0;
  std::int64_t total_cycles = 0;
  double clock_mhz = 100.0;

  double latency_us() const { return static_cast<double>(total_cycles) / clock_mhz; }
  double throughput_fps() const {
    return total_cycles > 0 ? 1e6 / latency_us() : 0.0;
  }
  void add(LayerCycles layer);
  friend bool operator==(const CycleReport&, const CycleReport&) = default;
};

/// Cycle report computed from layer shapes alone (no data). Equals the
/// report of any run_inference call with the same spec and config.
CycleReport estimate_cycles(const NetworkSpec& spec, const QuantizedParams& params,
                            const AcceleratorConfig& accel);

/// Throws CapacityError if any layer does not fit its unit geometry.
void check_capacity(const NetworkSpec& spec, const AcceleratorConfig& accel);

struct InferenceResult {
  int predicted = 0;
  IntTensor logits;
  CycleReport cycles;
  BufferPlan plan;
};

/// Executes the network layer by layer on the unit models, moving
/// activations through the ping-pong buffers. Convolution output channels
/// are spread over `conv_units` units; pooling and linear units are single.
InferenceResult run_inference(const NetworkSpec& spec, const QuantizedParams& params,
                              const IntTensor& input_levels,
                              const AcceleratorConfig& accel);

int argmax(const IntTensor& logits);

/// Smallest shift per conv/linear layer (entries for other layers and the
/// final layer are 0) such that no post-ReLU accumulator exceeds 2^T - 1
/// after shifting, calibrated layer by layer over `samples`.
std::vector<int> calibrate_requant(const NetworkSpec& spec,
                                   const QuantizedParams& params,
                                   std::span<const IntTensor> samples,
                                   const EncodingConfig& cfg);

struct TimeStepRow {
  int time_steps = 0;
  std::int64_t cycles = 0;
  double latency_us = 0.0;
  int predicted = 0;
};

struct TimeStepSweep {
  std::vector<TimeStepRow> rows;
  /// Cycle increments between consecutive rows.
  std::vector<std::int64_t> increments;
  bool affine = true;
};

TimeStepSweep sweep_time_steps(const NetworkSpec& spec, const QuantizedParams& params,
                               const RealTensor& image, const AcceleratorConfig& accel,
                               std::span<const int> time_steps);

struct UnitRow {
  int conv_units = 0;
  std::int64_t cycles = 0;
  double latency_us = 0.0;
  double speedup = 1.0;           // relative to the first row
  double step_speedup = 1.0;      // relative to the previous row
};

struct UnitSweep {
  std::vector<UnitRow> rows;
  bool monotone = true;           // latency never increases
  bool sublinear = true;          // every step speeds up less than the unit ratio
  bool logits_invariant = true;   // identical logits for all unit counts
};

UnitSweep sweep_conv_units(const NetworkSpec& spec, const QuantizedParams& params,
                           const RealTensor& image, const AcceleratorConfig& accel,
                           std::span<const int> conv_units);

struct Sample {
  RealTensor image;
  int label = 0;
};

struct EvalResult {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  double accuracy = 0.0;
  /// Identical for every item (timing is data independent); checked.
  CycleReport cycles;
};

/// Classifies the first `limit` items (all when limit <= 0) using `threads`
/// workers (hardware concurrency when 0).
EvalResult evaluate(const NetworkSpec& spec, const QuantizedParams& params,
                    std::span<const Sample> dataset, const AcceleratorConfig& accel,
                    std::int64_t limit = 0, unsigned threads = 0);

}  // namespace rsnn
