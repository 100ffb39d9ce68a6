#include "rsnn/simunits.hpp"

#include "rsnn/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace rsnn {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::span<const std::uint8_t> row_span(const BitTensor& plane, int c, int row) {
  const Shape& s = plane.shape();
  return {plane.data().data() + (Eigen::Index(c) * s.height + row) * s.width,
          static_cast<std::size_t>(s.width)};
}

std::vector<int> select_channels(std::span<const int> requested, int count) {
  std::vector<int> channels(requested.begin(), requested.end());
  if (channels.empty()) {
    channels.resize(count);
    std::iota(channels.begin(), channels.end(), 0);
  }
  for (int c : channels) {
    if (c < 0 || c >= count) {
      throw ConfigError("output channel " + std::to_string(c) + " out of range");
    }
  }
  return channels;
}

void check_planes(const SpikePlanes& spikes, Shape expected, const char* unit) {
  if (spikes.time_steps() < 1 || spikes.time_steps() > kMaxTimeSteps) {
    throw ConfigError(std::string(unit) + ": invalid number of time steps");
  }
  for (const auto& p : spikes.planes) {
    if (p.shape() != expected) {
      throw ConfigError(std::string(unit) + ": input planes do not match layer input shape");
    }
  }
}

}  // namespace

void UnitGeometry::validate() const {
  if (columns < 1 || rows < 1) {
    throw ConfigError("unit geometry must have X >= 1 and Y >= 1");
  }
}

void CostModel::validate() const {
  if (row_fetch_cycles < 0 || output_write_cycles < 0) {
    throw ConfigError("cost model cycles must be non-negative");
  }
  if (linear_parallel_outputs < 1) {
    throw ConfigError("linear_parallel_outputs must be >= 1");
  }
}

ShiftRegister::ShiftRegister(int length) : bits_(static_cast<std::size_t>(length), 0) {}

void ShiftRegister::load(std::span<const std::uint8_t> row, int pad) {
  assert(pad >= 0 && pad + static_cast<int>(row.size()) <= length());
  std::fill(bits_.begin(), bits_.end(), 0);
  std::copy(row.begin(), row.end(), bits_.begin() + pad);
  offset_ = 0;
}

void ShiftRegister::clear() {
  std::fill(bits_.begin(), bits_.end(), 0);
  offset_ = 0;
}

std::vector<std::vector<int>> tap_trace(int columns, int stride, int kernel_cols,
                                        int register_length) {
  ShiftRegister reg(register_length);
  reg.clear();
  std::vector<std::vector<int>> trace;
  for (int k = 0; k < kernel_cols; ++k) {
    std::vector<int> taps(static_cast<std::size_t>(columns));
    for (int x = 0; x < columns; ++x) taps[x] = reg.source(stride * x);
    trace.push_back(std::move(taps));
    reg.shift();
  }
  return trace;
}

// --- Convolution unit -------------------------------------------------------

int conv_channel_parallel(const UnitGeometry& geom, const ConvLayerSpec& layer) {
  return std::max(1, geom.columns / layer.out.width);
}

void check_conv_capacity(const UnitGeometry& geom, const ConvLayerSpec& layer) {
  geom.validate();
  if (geom.columns < layer.out.width || geom.rows < layer.kernel_rows) {
    throw CapacityError("convolution layer needs X >= " +
                        std::to_string(layer.out.width) + " and Y >= " +
                        std::to_string(layer.kernel_rows) +
                        " (tiling unsupported), unit has X=" +
                        std::to_string(geom.columns) +
                        ", Y=" + std::to_string(geom.rows));
  }
}

std::int64_t conv_pass_cycles(const ConvLayerSpec& layer, int time_steps,
                              const CostModel& cost) {
  const std::int64_t rows_out = layer.out.height;
  const std::int64_t kc = layer.kernel_cols;
  const std::int64_t per_input =
      rows_out * (kc + cost.row_fetch_cycles) + kc * (layer.kernel_rows - 1);
  return std::int64_t{time_steps} * layer.in_channels * per_input +
         cost.output_write_cycles * rows_out;
}

ConvRunResult conv_unit_run(const UnitGeometry& geom, const ConvLayerSpec& layer,
                            const SpikePlanes& spikes,
                            const QuantizedTensor& kernels,
                            const CostModel& cost,
                            std::span<const int> out_channels) {
  cost.validate();
  check_conv_capacity(geom, layer);
  check_planes(spikes, layer.in, "conv unit");
  if (kernels.dims != expected_dims(layer)) {
    throw ConfigError("conv unit: kernel shape does not match layer");
  }

  const auto channels = select_channels(out_channels, layer.out_channels);
  const int time_steps = spikes.time_steps();
  const int kr = layer.kernel_rows;
  const int kc = layer.kernel_cols;
  const int h_out = layer.out.height;
  const int w_out = layer.out.width;
  const int stride = layer.stride;
  const int pad = layer.pad;

  ConvRunResult result;
  result.channel_parallel = conv_channel_parallel(geom, layer);

  // One register per active adder row. With stride 1 every row holds the
  // same input row at any step, as in a single shared register.
  std::vector<ShiftRegister> regs(kr, ShiftRegister(layer.in.width + 2 * pad));
  const int max_cols = result.channel_parallel * w_out;
  Plane<std::int64_t> pipe(kr, max_cols);
  Vector<std::int64_t> sums(max_cols);

  for (std::size_t first = 0; first < channels.size();
       first += result.channel_parallel) {
    const std::size_t last =
        std::min(channels.size(), first + result.channel_parallel);
    const std::span<const int> group(channels.data() + first, last - first);
    const int group_cols = static_cast<int>(group.size()) * w_out;
    ++result.passes;

    for (int t = 0; t < time_steps; ++t) {
      const BitTensor& plane = spikes.planes[t];
      for (int c = 0; c < layer.in_channels; ++c) {
        std::vector<Plane<std::int64_t>> outs(
            group.size(), Plane<std::int64_t>::Zero(h_out, w_out));
        pipe.setZero();

        // Step s: adder row y works on output row s - y and hands its
        // partial sums to row y + 1 for the next step.
        for (int s = 0; s < h_out + kr - 1; ++s) {
          if (s < h_out) result.cycles += cost.row_fetch_cycles;
          for (int y = kr - 1; y >= 0; --y) {
            const int i = s - y;
            if (i < 0 || i >= h_out) continue;
            ShiftRegister& reg = regs[y];
            const int row = i * stride + y - pad;
            if (row < 0 || row >= layer.in.height) {
              reg.clear();
            } else {
              reg.load(row_span(plane, c, row), pad);
            }

            if (y == 0) {
              sums.head(group_cols).setZero();
            } else {
              sums.head(group_cols) = pipe.row(y - 1).head(group_cols).transpose();
            }
            for (int k = 0; k < kc; ++k) {
              for (std::size_t g = 0; g < group.size(); ++g) {
                const std::int64_t w = kernels.at(group[g], c, y, k);
                std::int64_t* out = sums.data() + g * w_out;
                for (int x = 0; x < w_out; ++x) {
                  // Multiplexer: the kernel value enters the adder only on a spike.
                  if (reg.tap(stride * x)) out[x] += w;
                }
              }
              reg.shift();
            }
            pipe.row(y).head(group_cols) = sums.head(group_cols).transpose();
            if (y == kr - 1) {
              for (std::size_t g = 0; g < group.size(); ++g) {
                outs[g].row(i) = sums.segment(g * w_out, w_out).transpose();
              }
            }
          }
          result.cycles += kc;
        }

        for (std::size_t g = 0; g < group.size(); ++g) {
          result.stream.push_back({t, c, group[g], std::move(outs[g])});
        }
      }
    }
    result.cycles += cost.output_write_cycles * h_out;
  }
  return result;
}

// --- Output logic -----------------------------------------------------------

OutputLogic::OutputLogic(Shape out, int in_channels, int time_steps)
    : out_(out),
      in_channels_(in_channels),
      time_steps_(time_steps),
      acc_(out),
      step_sum_(out),
      state_(static_cast<std::size_t>(out.channels)) {
  if (in_channels < 1 || time_steps < 1) {
    throw ConfigError("output logic needs at least one input channel and time step");
  }
}

void OutputLogic::accumulate(const PartialSums& partial) {
  const int o = partial.out_channel;
  if (o < 0 || o >= out_.channels) {
    throw ProtocolError("output logic: output channel " + std::to_string(o) + " out of range");
  }
  if (partial.sums.rows() != out_.height || partial.sums.cols() != out_.width) {
    throw ProtocolError("output logic: partial sum plane has wrong shape");
  }
  ChannelState& st = state_[o];
  if (st.time_step >= time_steps_ || partial.time_step != st.time_step ||
      partial.in_channel != st.next_in_channel) {
    throw ProtocolError(
        "output logic: channel " + std::to_string(o) + " expected (t=" +
        std::to_string(st.time_step) + ", in=" + std::to_string(st.next_in_channel) +
        "), got (t=" + std::to_string(partial.time_step) +
        ", in=" + std::to_string(partial.in_channel) + ")");
  }
  step_sum_.channel(o) += partial.sums;
  if (++st.next_in_channel == in_channels_) {
    acc_.channel(o) = acc_.channel(o) * 2 + step_sum_.channel(o);
    step_sum_.channel(o).setZero();
    st.next_in_channel = 0;
    ++st.time_step;
  }
}

bool OutputLogic::complete() const {
  return std::all_of(state_.begin(), state_.end(),
                     [this](const ChannelState& s) { return s.time_step == time_steps_; });
}

const IntTensor& OutputLogic::accumulators() const {
  if (!complete()) throw ProtocolError("output logic: partial sum stream incomplete");
  return acc_;
}

IntTensor requantize(const IntTensor& acc, const Epilogue& epilogue,
                     const EncodingConfig& cfg) {
  const std::int64_t max_level = cfg.max_level();
  IntTensor out(acc.shape());
  out.data() = acc.data().unaryExpr([&](std::int64_t v) {
    if (epilogue.relu && v < 0) v = 0;
    return std::clamp<std::int64_t>(v >> epilogue.requant_shift, 0, max_level);
  });
  return out;
}

SpikePlanes output_logic_accumulate(std::span<const PartialSums> stream,
                                    Shape out, int in_channels,
                                    const EncodingConfig& cfg,
                                    const Epilogue& epilogue) {
  OutputLogic logic(out, in_channels, cfg.time_steps);
  for (const auto& p : stream) logic.accumulate(p);
  return encode_planes(requantize(logic.accumulators(), epilogue, cfg), cfg);
}

// --- Pooling unit -----------------------------------------------------------

int pool_channel_parallel(const UnitGeometry& geom, const PoolLayerSpec& layer) {
  return std::max(1, geom.columns / layer.out.width);
}

void check_pool_capacity(const UnitGeometry& geom, const PoolLayerSpec& layer) {
  geom.validate();
  if (geom.columns < layer.out.width || geom.rows < layer.window) {
    throw CapacityError("pooling layer needs X >= " + std::to_string(layer.out.width) +
                        " and Y >= " + std::to_string(layer.window) +
                        " (tiling unsupported), unit has X=" +
                        std::to_string(geom.columns) +
                        ", Y=" + std::to_string(geom.rows));
  }
}

std::int64_t pool_pass_cycles(const PoolLayerSpec& layer, int time_steps,
                              const CostModel& cost) {
  const std::int64_t rows_out = layer.out.height;
  const std::int64_t w = layer.window;
  return std::int64_t{time_steps} *
             (rows_out * (w + cost.row_fetch_cycles) + w * (w - 1)) +
         cost.output_write_cycles * rows_out;
}

PoolRunResult pool_unit_run(const UnitGeometry& geom, const PoolLayerSpec& layer,
                            const SpikePlanes& spikes, const CostModel& cost) {
  cost.validate();
  check_pool_capacity(geom, layer);
  check_planes(spikes, layer.in, "pool unit");

  const int time_steps = spikes.time_steps();
  const int window = layer.window;
  const int h_out = layer.out.height;
  const int w_out = layer.out.width;
  const int stride = layer.stride;

  PoolRunResult result;
  result.channel_parallel = pool_channel_parallel(geom, layer);
  result.window_sums = IntTensor(layer.out);

  std::vector<ShiftRegister> regs(window, ShiftRegister(layer.in.width));
  const int max_cols = result.channel_parallel * w_out;
  Plane<std::int64_t> pipe(window, max_cols);
  Vector<std::int64_t> sums(max_cols);

  for (int first = 0; first < layer.out.channels; first += result.channel_parallel) {
    const int count = std::min(result.channel_parallel, layer.out.channels - first);
    const int group_cols = count * w_out;
    ++result.passes;

    for (int t = 0; t < time_steps; ++t) {
      const BitTensor& plane = spikes.planes[t];
      pipe.setZero();
      for (int s = 0; s < h_out + window - 1; ++s) {
        if (s < h_out) result.cycles += cost.row_fetch_cycles;
        for (int y = window - 1; y >= 0; --y) {
          const int i = s - y;
          if (i < 0 || i >= h_out) continue;
          if (y == 0) {
            sums.head(group_cols).setZero();
          } else {
            sums.head(group_cols) = pipe.row(y - 1).head(group_cols).transpose();
          }
          for (int g = 0; g < count; ++g) {
            ShiftRegister& reg = regs[y];
            reg.load(row_span(plane, first + g, i * stride + y), 0);
            std::int64_t* out = sums.data() + g * w_out;
            for (int k = 0; k < window; ++k) {
              for (int x = 0; x < w_out; ++x) out[x] += reg.tap(stride * x);
              reg.shift();
            }
          }
          pipe.row(y).head(group_cols) = sums.head(group_cols).transpose();
          if (y == window - 1) {
            for (int g = 0; g < count; ++g) {
              auto acc = result.window_sums.channel(first + g).row(i);
              acc = acc * 2 + sums.segment(g * w_out, w_out).transpose();
            }
          }
        }
        result.cycles += window;
      }
    }
    result.cycles += cost.output_write_cycles * h_out;
  }

  const EncodingConfig cfg{time_steps};
  result.output = encode_planes(
      requantize(result.window_sums, Epilogue{false, layer.divisor_shift}, cfg), cfg);
  return result;
}

// --- Linear unit ------------------------------------------------------------

std::int64_t linear_cycles(const LinearLayerSpec& layer, int time_steps,
                           const CostModel& cost) {
  return std::int64_t{time_steps} * layer.in_features *
         ceil_div(layer.out_features, cost.linear_parallel_outputs);
}

LinearRunResult linear_unit_run(const LinearLayerSpec& layer,
                                const SpikePlanes& spikes,
                                const QuantizedTensor& weights,
                                const CostModel& cost,
                                const std::optional<Epilogue>& epilogue) {
  cost.validate();
  check_planes(spikes, layer.in, "linear unit");
  if (weights.dims != expected_dims(layer)) {
    throw ConfigError("linear unit: weight shape does not match layer");
  }
  const int time_steps = spikes.time_steps();
  const int parallel = cost.linear_parallel_outputs;
  const auto matrix = weights.matrix();

  LinearRunResult result;
  result.accumulators = IntTensor(layer.out);
  auto& acc = result.accumulators.data();
  Vector<std::int64_t> step_sum(parallel);

  for (int first = 0; first < layer.out_features; first += parallel) {
    const int count = std::min(parallel, layer.out_features - first);
    for (int t = 0; t < time_steps; ++t) {
      const auto& bits = spikes.planes[t].data();
      step_sum.head(count).setZero();
      // One input neuron per cycle; its weight column is fetched every cycle.
      for (int i = 0; i < layer.in_features; ++i) {
        ++result.cycles;
        if (bits[i]) {
          step_sum.head(count) += matrix.col(i).segment(first, count).cast<std::int64_t>();
        }
      }
      acc.segment(first, count) = acc.segment(first, count) * 2 + step_sum.head(count);
    }
  }

  if (epilogue) {
    const EncodingConfig cfg{time_steps};
    result.output = encode_planes(requantize(result.accumulators, *epilogue, cfg), cfg);
  }
  return result;
}

}  // namespace rsnn
