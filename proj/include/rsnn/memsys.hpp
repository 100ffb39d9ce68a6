#pragma once

#include "rsnn/encoding.hpp"
#include "rsnn/netmodel.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace rsnn {

enum class BufferId { ping2d, pong2d, ping1d, pong1d };

std::string_view buffer_name(BufferId id);

/// Bits needed to hold one activation tensor as T bit planes.
std::int64_t footprint_bits(Shape shape, int time_steps);

struct LayerPlacement {
  int layer = 0;
  BufferId read = BufferId::ping2d;
  BufferId write = BufferId::pong2d;
  std::int64_t footprint_bits = 0;  // of the layer's output
};

/// Capacities (in bits) of the four activation buffers and the buffer every
/// layer reads from and writes to.
struct BufferPlan {
  int time_steps = 0;
  BufferId input_buffer = BufferId::ping2d;
  std::int64_t input_bits = 0;
  std::array<std::int64_t, 4> capacity_bits{};
  std::vector<LayerPlacement> placements;

  std::int64_t capacity(BufferId id) const {
    return capacity_bits[static_cast<std::size_t>(id)];
  }
  /// Size of each buffer in a ping/pong pair.
  std::int64_t buf2d_bits() const;
  std::int64_t buf1d_bits() const;
};

/// Alternates the 2-D pair across convolution/pooling layers starting with
/// the input in ping, hands the flattened activations to the 1-D ping buffer
/// and alternates the 1-D pair across linear layers. Each buffer is sized to
/// the largest tensor placed in it.
BufferPlan plan_buffers(const NetworkSpec& spec, const EncodingConfig& cfg);

/// Channel-major, then row, then column, per time step.
SpikePlanes flatten_transfer(const SpikePlanes& last2d);

struct MemoryMode {
  enum class Kind { on_chip, off_chip };
  Kind kind = Kind::on_chip;
  std::int64_t dram_latency_cycles = 100;
  std::int64_t dram_bytes_per_cycle = 8;

  void validate() const;
  friend bool operator==(const MemoryMode&, const MemoryMode&) = default;
};

/// 0 on chip; otherwise latency + ceil(bytes / bandwidth), charged once per
/// layer before its computation.
std::int64_t weight_fetch_cycles(const MemoryMode& mode, std::int64_t param_bytes);

/// Ping-pong activation storage driven by the controller. Checks every
/// access against the plan: capacity on store, read/write alternation, and
/// a single flatten transfer at the planned layer.
class ActivationMemory {
 public:
  explicit ActivationMemory(BufferPlan plan);

  void load_input(SpikePlanes input);
  /// Activations consumed by `layer`; must be called in layer order.
  const SpikePlanes& read(int layer) const;
  void write(int layer, SpikePlanes output);
  /// Moves the last 2-D activations into the 1-D ping buffer.
  void flatten(int layer);

  const BufferPlan& plan() const { return plan_; }

  /// Checksums of data read and written by each layer, for inspection.
  struct Transfer {
    int layer;
    std::uint64_t read_checksum;
    std::uint64_t write_checksum;
  };
  const std::vector<Transfer>& transfers() const { return transfers_; }

 private:
  void store(BufferId id, SpikePlanes data);
  void commit(int layer, SpikePlanes output);
  const LayerPlacement& placement(int layer) const;

  BufferPlan plan_;
  std::array<std::optional<SpikePlanes>, 4> buffers_;
  std::optional<BufferId> last_written_;
  int next_layer_ = 0;
  bool flattened_ = false;
  std::vector<Transfer> transfers_;
};

/// FNV-1a over all planes; used to confirm hand-over between layers.
std::uint64_t checksum(const SpikePlanes& planes);

}  // namespace rsnn
