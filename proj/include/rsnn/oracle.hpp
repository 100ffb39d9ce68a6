#pragma once

// Brute-force integer reference inference. Written independently of the
// processing-unit models in simunits so that the two can check each other.

#include "rsnn/encoding.hpp"
#include "rsnn/netmodel.hpp"
#include "rsnn/params.hpp"

#include <vector>

namespace rsnn::oracle {

/// out[o,i,j] = sum_c sum_y sum_x act[c, i*stride+y-pad, j*stride+x-pad] * k[o,c,y,x]
/// with zero reads outside the input.
IntTensor ref_conv2d(const IntTensor& act, const QuantizedTensor& kernel,
                     int stride, int pad);

/// Window sums shifted right by divisor_shift (floor). Requires
/// window^2 == 2^divisor_shift.
IntTensor ref_avgpool(const IntTensor& act, int window, int stride,
                      int divisor_shift);

/// out[o] = sum_i w[o,i] * act[i] over the flattened input.
IntTensor ref_linear(const IntTensor& act, const QuantizedTensor& weights);

struct ForwardResult {
  IntTensor logits;
  /// Output of every layer after its epilogue; the last entry equals logits.
  std::vector<IntTensor> per_layer;
  /// Accumulators before ReLU/requantization, one per layer.
  std::vector<IntTensor> pre_activation;
};

/// Runs the whole network. Non-final layers apply optional ReLU, then
/// clamp(v >> requant_shift, 0, 2^T-1). The final layer returns raw
/// accumulators.
ForwardResult ref_forward(const NetworkSpec& spec, const QuantizedParams& params,
                          const IntTensor& input_levels,
                          const EncodingConfig& cfg);

}  // namespace rsnn::oracle
