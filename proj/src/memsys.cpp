#include "rsnn/memsys.hpp"

#include "rsnn/errors.hpp"

#include <algorithm>
#include <string>

namespace rsnn {

namespace {

std::size_t slot(BufferId id) { return static_cast<std::size_t>(id); }

BufferId other(BufferId id) {
  switch (id) {
    case BufferId::ping2d: return BufferId::pong2d;
    case BufferId::pong2d: return BufferId::ping2d;
    case BufferId::ping1d: return BufferId::pong1d;
    case BufferId::pong1d: return BufferId::ping1d;
  }
  return id;
}

bool is_flatten_boundary(const LayerPlacement& p) {
  return p.write == BufferId::ping1d &&
         (p.read == BufferId::ping2d || p.read == BufferId::pong2d);
}

}  // namespace

std::string_view buffer_name(BufferId id) {
  switch (id) {
    case BufferId::ping2d: return "ping2d";
    case BufferId::pong2d: return "pong2d";
    case BufferId::ping1d: return "ping1d";
    case BufferId::pong1d: return "pong1d";
  }
  return "?";
}

std::int64_t footprint_bits(Shape shape, int time_steps) {
  return std::int64_t{time_steps} * shape.size();
}

std::int64_t BufferPlan::buf2d_bits() const {
  return std::max(capacity(BufferId::ping2d), capacity(BufferId::pong2d));
}

std::int64_t BufferPlan::buf1d_bits() const {
  return std::max(capacity(BufferId::ping1d), capacity(BufferId::pong1d));
}

BufferPlan plan_buffers(const NetworkSpec& spec, const EncodingConfig& cfg) {
  cfg.validate();
  BufferPlan plan;
  plan.time_steps = cfg.time_steps;
  plan.input_buffer = BufferId::ping2d;
  plan.input_bits = footprint_bits(spec.input, cfg.time_steps);
  auto grow = [&plan](BufferId id, std::int64_t bits) {
    auto& cap = plan.capacity_bits[slot(id)];
    cap = std::max(cap, bits);
  };
  grow(plan.input_buffer, plan.input_bits);

  BufferId current = plan.input_buffer;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    LayerPlacement p;
    p.layer = static_cast<int>(i);
    p.read = current;
    p.write = std::holds_alternative<FlattenSpec>(layer) ? BufferId::ping1d
                                                         : other(current);
    p.footprint_bits = footprint_bits(layer_output(layer), cfg.time_steps);
    grow(p.write, p.footprint_bits);
    current = p.write;
    plan.placements.push_back(p);
  }
  return plan;
}

SpikePlanes flatten_transfer(const SpikePlanes& last2d) {
  SpikePlanes out;
  out.planes.reserve(last2d.planes.size());
  for (const auto& p : last2d.planes) out.planes.push_back(p.flattened());
  return out;
}

void MemoryMode::validate() const {
  if (kind == Kind::off_chip && (dram_latency_cycles <= 0 || dram_bytes_per_cycle <= 0)) {
    throw ConfigError("off-chip memory needs positive DRAM latency and bandwidth");
  }
}

std::int64_t weight_fetch_cycles(const MemoryMode& mode, std::int64_t param_bytes) {
  if (mode.kind == MemoryMode::Kind::on_chip) return 0;
  mode.validate();
  if (param_bytes < 0) throw ConfigError("parameter bytes must be non-negative");
  return mode.dram_latency_cycles +
         (param_bytes + mode.dram_bytes_per_cycle - 1) / mode.dram_bytes_per_cycle;
}

std::uint64_t checksum(const SpikePlanes& planes) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::uint64_t>(planes.time_steps()));
  for (const auto& p : planes.planes) {
    mix(static_cast<std::uint64_t>(p.shape().channels));
    mix(static_cast<std::uint64_t>(p.shape().height));
    mix(static_cast<std::uint64_t>(p.shape().width));
    for (Eigen::Index i = 0; i < p.size(); ++i) mix(p.data()[i]);
  }
  return h;
}

ActivationMemory::ActivationMemory(BufferPlan plan) : plan_(std::move(plan)) {}

const LayerPlacement& ActivationMemory::placement(int layer) const {
  if (layer < 0 || layer >= static_cast<int>(plan_.placements.size())) {
    throw ProtocolError("activation memory: layer " + std::to_string(layer) + " not in plan");
  }
  return plan_.placements[layer];
}

void ActivationMemory::store(BufferId id, SpikePlanes data) {
  const std::int64_t bits = footprint_bits(data.shape(), data.time_steps());
  if (bits > plan_.capacity(id)) {
    throw CapacityError("activation buffer " + std::string(buffer_name(id)) +
                        " overflow: " + std::to_string(bits) + " bits > capacity " +
                        std::to_string(plan_.capacity(id)));
  }
  buffers_[slot(id)] = std::move(data);
  last_written_ = id;
}

void ActivationMemory::load_input(SpikePlanes input) {
  if (next_layer_ != 0 || last_written_) {
    throw ProtocolError("activation memory: input loaded twice");
  }
  store(plan_.input_buffer, std::move(input));
}

const SpikePlanes& ActivationMemory::read(int layer) const {
  const auto& p = placement(layer);
  if (layer != next_layer_) {
    throw ProtocolError("activation memory: layer " + std::to_string(layer) +
                        " read out of order");
  }
  if (!last_written_ || *last_written_ != p.read || !buffers_[slot(p.read)]) {
    throw ProtocolError("activation memory: layer " + std::to_string(layer) +
                        " reads a buffer the previous layer did not write");
  }
  return *buffers_[slot(p.read)];
}

void ActivationMemory::write(int layer, SpikePlanes output) {
  const auto& p = placement(layer);
  if (is_flatten_boundary(p)) {
    throw ProtocolError("activation memory: layer " + std::to_string(layer) +
                        " must be transferred with flatten()");
  }
  commit(layer, std::move(output));
}

void ActivationMemory::commit(int layer, SpikePlanes output) {
  const auto& p = placement(layer);
  if (p.read == p.write) {
    throw ProtocolError("activation memory: layer reads and writes the same buffer");
  }
  const std::uint64_t in_sum = checksum(read(layer));
  const std::uint64_t out_sum = checksum(output);
  store(p.write, std::move(output));
  transfers_.push_back({layer, in_sum, out_sum});
  ++next_layer_;
}

void ActivationMemory::flatten(int layer) {
  const auto& p = placement(layer);
  if (flattened_) throw ProtocolError("activation memory: flatten called twice");
  if (!is_flatten_boundary(p)) {
    throw ProtocolError("activation memory: layer " + std::to_string(layer) +
                        " is not the planned flatten boundary");
  }
  SpikePlanes flat = flatten_transfer(read(layer));
  flattened_ = true;
  commit(layer, std::move(flat));
}

}  // namespace rsnn
