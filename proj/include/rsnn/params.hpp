#pragma once

#include "rsnn/netmodel.hpp"
#include "rsnn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace rsnn {

/// Signed b-bit integer tensor. Conv kernels have dims
/// (out_ch, in_ch, K_r, K_c); linear weights have dims (out, in).
struct QuantizedTensor {
  std::vector<int> dims;
  int bits = 3;
  Vector<std::int8_t> values;

  Eigen::Index size() const { return values.size(); }
  int rank() const { return static_cast<int>(dims.size()); }

  std::int8_t at(int o, int c, int y, int x) const {
    return values[((Eigen::Index(o) * dims[1] + c) * dims[2] + y) * dims[3] + x];
  }
  std::int8_t at(int o, int i) const {
    return values[Eigen::Index(o) * dims[1] + i];
  }
  /// Rank-2 tensors as an (out x in) matrix.
  Eigen::Map<const Plane<std::int8_t>> matrix() const {
    return {values.data(), dims[0], dims[1]};
  }
  /// Kernel (o, c) of a rank-4 tensor as a K_r x K_c matrix.
  Eigen::Map<const Plane<std::int8_t>> kernel(int o, int c) const {
    return {values.data() + (Eigen::Index(o) * dims[1] + c) * dims[2] * dims[3],
            dims[2], dims[3]};
  }
  /// Bytes occupied by the values when packed at `bits` per value.
  std::int64_t packed_bytes() const { return (std::int64_t(size()) * bits + 7) / 8; }

  std::int64_t min_value() const { return -(std::int64_t{1} << (bits - 1)); }
  std::int64_t max_value() const { return (std::int64_t{1} << (bits - 1)) - 1; }

  friend bool operator==(const QuantizedTensor& a, const QuantizedTensor& b) {
    return a.dims == b.dims && a.bits == b.bits && a.values == b.values;
  }
};

/// Parameters keyed by layer index within NetworkSpec::layers. Only conv and
/// linear layers carry parameters.
struct QuantizedParams {
  std::map<int, QuantizedTensor> layers;

  const QuantizedTensor& at(int layer) const;
  friend bool operator==(const QuantizedParams&, const QuantizedParams&) = default;
};

inline constexpr int kMinWeightBits = 2;
inline constexpr int kMaxWeightBits = 8;

/// Symmetric uniform quantization: clamp(round(w / scale), -2^(b-1), 2^(b-1)-1).
/// Throws ConfigError for bad bits/scale or a dims/size mismatch and
/// FormatError for non-finite weights.
QuantizedTensor quantize_weights(std::span<const double> weights,
                                 std::vector<int> dims, int bits, double scale);

/// Parameter shape expected for a layer; empty for parameter-free layers.
std::vector<int> expected_dims(const LayerSpec& layer);

/// Uniformly random b-bit parameters for every conv/linear layer.
QuantizedParams random_params(const NetworkSpec& spec, int bits,
                              std::mt19937_64& rng);

/// Throws ConfigError on missing/extra layers or shape mismatch and
/// FormatError on values outside the declared bit width.
void validate_params(const NetworkSpec& spec, const QuantizedParams& params);

/// Little-endian "RSNN" container:
///   magic "RSNN", version u16, layer count u16,
///   per layer: index u16, bits u8, rank u8, dims u32 x rank, values i8.
void save_params(const QuantizedParams& params, std::ostream& out);
void save_params(const QuantizedParams& params, const std::filesystem::path& path);

/// Reads and validates against `spec`. Throws FormatError on malformed input.
QuantizedParams load_params(std::istream& in, const NetworkSpec& spec);
QuantizedParams load_params(const std::filesystem::path& path, const NetworkSpec& spec);

inline constexpr std::uint16_t kParamFormatVersion = 1;

}  // namespace rsnn
