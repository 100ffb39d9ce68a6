#pragma once

#include "rsnn/tensor.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rsnn {

inline constexpr int kMaxTimeSteps = 16;

/// Spike-train length. Capped so that every full-precision accumulator in a
/// VGG-sized layer still fits a signed 64-bit integer.
struct EncodingConfig {
  int time_steps = 3;

  void validate() const;
  /// Largest activation level, 2^T - 1.
  std::int64_t max_level() const { return (std::int64_t{1} << time_steps) - 1; }
};

/// Binary spikes, index 0 is the earliest and most significant time step.
using SpikeTrain = std::vector<std::uint8_t>;

/// Maps x in [0, 1] onto the 2^T - 1 level grid, rounding half away from zero.
/// Throws std::domain_error for x outside [0, 1] or NaN.
std::int64_t quantize_activation(double x, const EncodingConfig& cfg);

/// MSB-first binary expansion of a level. Throws std::out_of_range when
/// q does not fit in T bits.
SpikeTrain encode_radix(std::int64_t q, const EncodingConfig& cfg);

/// Radix-weighted sum of a spike train: spike t contributes 2^(T-1-t).
std::int64_t decode_radix(std::span<const std::uint8_t> spikes);

/// One step of the output-logic recurrence: shift the running sum left by
/// one bit, then add the partial result of the current time step.
template <typename Scalar>
constexpr Scalar horner_step(Scalar acc, Scalar partial) {
  return acc * Scalar{2} + partial;
}

/// Folds horner_step over the sequence starting from zero, i.e. evaluates
/// sum_t p[t] * 2^(L-1-t). The sequence must not be empty.
template <typename Scalar>
Scalar horner_accumulate(std::span<const Scalar> partials) {
  if (partials.empty()) {
    throw std::invalid_argument("horner_accumulate: empty sequence");
  }
  Scalar acc{0};
  for (Scalar p : partials) acc = horner_step(acc, p);
  return acc;
}

/// Per-time-step binary feature maps of one layer's activations.
struct SpikePlanes {
  std::vector<BitTensor> planes;

  int time_steps() const { return static_cast<int>(planes.size()); }
  Shape shape() const { return planes.empty() ? Shape{} : planes.front().shape(); }

  friend bool operator==(const SpikePlanes&, const SpikePlanes&) = default;
};

/// Splits activation levels into T bit planes (plane 0 = MSB).
/// Throws std::out_of_range if any level is outside [0, 2^T - 1].
SpikePlanes encode_planes(const IntTensor& levels, const EncodingConfig& cfg);

/// Inverse of encode_planes.
IntTensor decode_planes(const SpikePlanes& spikes);

/// Quantizes an image with values in [0, 1] to activation levels.
IntTensor quantize_image(const RealTensor& image, const EncodingConfig& cfg);

}  // namespace rsnn
