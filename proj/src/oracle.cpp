#include "rsnn/oracle.hpp"

#include "rsnn/errors.hpp"

#include <algorithm>

namespace rsnn::oracle {

IntTensor ref_conv2d(const IntTensor& act, const QuantizedTensor& kernel,
                     int stride, int pad) {
  const Shape in = act.shape();
  if (kernel.rank() != 4 || kernel.dims[1] != in.channels) {
    throw ConfigError("ref_conv2d: kernel does not match input channels");
  }
  if (stride < 1 || pad < 0) throw ConfigError("ref_conv2d: invalid stride/pad");
  const int out_ch = kernel.dims[0];
  const int kr = kernel.dims[2];
  const int kc = kernel.dims[3];
  if (in.height + 2 * pad < kr || in.width + 2 * pad < kc) {
    throw ConfigError("ref_conv2d: kernel larger than padded input");
  }
  const Shape out{out_ch, (in.height + 2 * pad - kr) / stride + 1,
                  (in.width + 2 * pad - kc) / stride + 1};
  IntTensor result(out);
  for (int o = 0; o < out.channels; ++o) {
    for (int i = 0; i < out.height; ++i) {
      for (int j = 0; j < out.width; ++j) {
        std::int64_t sum = 0;
        for (int c = 0; c < in.channels; ++c) {
          for (int y = 0; y < kr; ++y) {
            const int row = i * stride + y - pad;
            if (row < 0 || row >= in.height) continue;
            for (int x = 0; x < kc; ++x) {
              const int col = j * stride + x - pad;
              if (col < 0 || col >= in.width) continue;
              sum += act(c, row, col) * kernel.at(o, c, y, x);
            }
          }
        }
        result(o, i, j) = sum;
      }
    }
  }
  return result;
}

IntTensor ref_avgpool(const IntTensor& act, int window, int stride,
                      int divisor_shift) {
  if (window < 1 || stride < 1 || divisor_shift < 0 ||
      (std::int64_t{1} << divisor_shift) != std::int64_t{window} * window) {
    throw ConfigError("ref_avgpool: window^2 must equal 2^divisor_shift");
  }
  const Shape in = act.shape();
  if (in.height < window || in.width < window) {
    throw ConfigError("ref_avgpool: window larger than input");
  }
  const Shape out{in.channels, (in.height - window) / stride + 1,
                  (in.width - window) / stride + 1};
  IntTensor result(out);
  for (int c = 0; c < out.channels; ++c) {
    const auto plane = act.channel(c);
    for (int i = 0; i < out.height; ++i) {
      for (int j = 0; j < out.width; ++j) {
        const std::int64_t sum =
            plane.block(i * stride, j * stride, window, window).sum();
        result(c, i, j) = sum >> divisor_shift;
      }
    }
  }
  return result;
}

IntTensor ref_linear(const IntTensor& act, const QuantizedTensor& weights) {
  if (weights.rank() != 2 || weights.dims[1] != act.size()) {
    throw ConfigError("ref_linear: weights do not match input features");
  }
  const Vector<std::int64_t> out =
      weights.matrix().cast<std::int64_t>() * act.data();
  return IntTensor(Shape{weights.dims[0], 1, 1}, out);
}

namespace {

IntTensor epilogue(const IntTensor& acc, bool relu, int shift,
                   std::int64_t max_level) {
  IntTensor out(acc.shape());
  out.data() = acc.data().unaryExpr([=](std::int64_t v) {
    if (relu) v = std::max<std::int64_t>(v, 0);
    return std::clamp<std::int64_t>(v >> shift, 0, max_level);
  });
  return out;
}

}  // namespace

ForwardResult ref_forward(const NetworkSpec& spec, const QuantizedParams& params,
                          const IntTensor& input_levels,
                          const EncodingConfig& cfg) {
  cfg.validate();
  if (input_levels.shape() != spec.input) {
    throw ConfigError("ref_forward: input shape does not match network");
  }
  const auto& v = input_levels.data();
  if (v.size() > 0 && (v.minCoeff() < 0 || v.maxCoeff() > cfg.max_level())) {
    throw ConfigError("ref_forward: input level outside [0, 2^T - 1]");
  }

  ForwardResult result;
  IntTensor cur = input_levels;
  const std::size_t last = spec.layers.size() - 1;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const int index = static_cast<int>(i);
    IntTensor acc;
    bool relu = false;
    int shift = 0;
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
      acc = ref_conv2d(cur, params.at(index), c->stride, c->pad);
      relu = c->apply_relu;
      shift = c->requant_shift;
    } else if (const auto* p = std::get_if<PoolLayerSpec>(&layer)) {
      acc = ref_avgpool(cur, p->window, p->stride, p->divisor_shift);
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      acc = cur.flattened();
    } else {
      const auto& l = std::get<LinearLayerSpec>(layer);
      acc = ref_linear(cur, params.at(index));
      relu = l.apply_relu;
      shift = l.requant_shift;
    }
    result.pre_activation.push_back(acc);
    cur = i == last ? acc : epilogue(acc, relu, shift, cfg.max_level());
    result.per_layer.push_back(cur);
  }
  result.logits = cur;
  return result;
}

}  // namespace rsnn::oracle
