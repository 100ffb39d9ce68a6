#pragma once

#include "rsnn/tensor.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rsnn {

struct ConvLayerSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_rows = 0;
  int kernel_cols = 0;
  int stride = 1;
  int pad = 0;
  int requant_shift = 0;
  bool apply_relu = true;
  Shape in;
  Shape out;

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Average pooling realized as a window sum followed by a right shift.
struct PoolLayerSpec {
  int window = 2;
  int stride = 2;
  int divisor_shift = 2;
  Shape in;
  Shape out;

  friend bool operator==(const PoolLayerSpec&, const PoolLayerSpec&) = default;
};

struct FlattenSpec {
  Shape in;
  Shape out;

  friend bool operator==(const FlattenSpec&, const FlattenSpec&) = default;
};

struct LinearLayerSpec {
  int in_features = 0;
  int out_features = 0;
  int requant_shift = 0;
  bool apply_relu = true;
  Shape in;
  Shape out;

  friend bool operator==(const LinearLayerSpec&,
                         const LinearLayerSpec&) = default;
};

using LayerSpec =
    std::variant<ConvLayerSpec, PoolLayerSpec, FlattenSpec, LinearLayerSpec>;

/// Short layer kind name: "conv", "pool", "flatten" or "linear".
std::string_view layer_kind(const LayerSpec& layer);
Shape layer_input(const LayerSpec& layer);
Shape layer_output(const LayerSpec& layer);

/// A validated, shape-inferred network. Construct through build_network or
/// parse_network; every instance satisfies:
///  - exactly one Flatten, after the last 2-D layer and before the first
///    Linear layer,
///  - the last layer is Linear and emits raw logits (no ReLU, shift 0).
struct NetworkSpec {
  Shape input;
  std::vector<LayerSpec> layers;

  int conv_layers() const;
  int linear_layers() const;
  int flatten_index() const;
  Shape output_shape() const { return layer_output(layers.back()); }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Infers shapes, fills derived fields (in/out shapes, channel counts,
/// pooling divisor shift), inserts a Flatten before the first Linear layer if
/// none is present and validates the result. Throws ConfigError.
NetworkSpec build_network(Shape input, std::vector<LayerSpec> layers);

/// Parses either the compact notation
///   "32x32x1 - 6C5 - P2 - 16C5 - P2 - 120C5 - L120 - L84 - L10"
/// or the structured key/value form (see README). Throws ConfigError with
/// the offending token or line.
NetworkSpec parse_network(std::string_view text);

/// Compact notation with every field spelled out; parse_network of the
/// result yields an equal spec.
std::string to_compact(const NetworkSpec& spec);

/// Copy of `spec` with the requantization shift of each conv/linear layer
/// replaced by shifts[layer index]. Entries for other layers are ignored.
NetworkSpec with_requant_shifts(const NetworkSpec& spec,
                                const std::vector<int>& shifts);

}  // namespace rsnn
