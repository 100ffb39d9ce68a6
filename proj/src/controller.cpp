#include "rsnn/controller.hpp"

#include "rsnn/errors.hpp"
#include "rsnn/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace rsnn {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& value, const std::string& where) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(where + ": invalid number '" + value + "'");
  }
  return out;
}

UnitGeometry parse_geometry(const std::string& value, const std::string& where) {
  const auto comma = value.find_first_of(",x");
  if (comma == std::string::npos) {
    throw ConfigError(where + ": expected X,Y");
  }
  return UnitGeometry{parse_number<int>(trim(value.substr(0, comma)), where),
                      parse_number<int>(trim(value.substr(comma + 1)), where)};
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::int64_t fetch_cycles(const AcceleratorConfig& accel, const QuantizedParams& params,
                          int layer) {
  auto it = params.layers.find(layer);
  if (it == params.layers.end()) return 0;
  return weight_fetch_cycles(accel.memory, it->second.packed_bytes());
}

}  // namespace

void AcceleratorConfig::validate() const {
  encoding().validate();
  if (conv_units < 1) throw ConfigError("conv_units must be >= 1");
  conv.validate();
  pool.validate();
  memory.validate();
  cost.validate();
  if (!(clock_mhz > 0.0) || !std::isfinite(clock_mhz)) {
    throw ConfigError("clock_mhz must be positive");
  }
}

AcceleratorConfig parse_accelerator_config(std::string_view text) {
  AcceleratorConfig accel;
  std::stringstream ss{std::string(text)};
  int line_no = 0;
  for (std::string raw; std::getline(ss, raw);) {
    ++line_no;
    const auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const std::string field = where + " field '" + key + "'";

    if (key == "T" || key == "time_steps") accel.time_steps = parse_number<int>(value, field);
    else if (key == "U" || key == "conv_units") accel.conv_units = parse_number<int>(value, field);
    else if (key == "conv_xy") accel.conv = parse_geometry(value, field);
    else if (key == "pool_xy") accel.pool = parse_geometry(value, field);
    else if (key == "memory_mode") {
      if (value == "on_chip") accel.memory.kind = MemoryMode::Kind::on_chip;
      else if (value == "off_chip") accel.memory.kind = MemoryMode::Kind::off_chip;
      else throw ConfigError(field + ": expected on_chip or off_chip");
    } else if (key == "dram_latency_cycles") {
      accel.memory.dram_latency_cycles = parse_number<std::int64_t>(value, field);
    } else if (key == "dram_bytes_per_cycle") {
      accel.memory.dram_bytes_per_cycle = parse_number<std::int64_t>(value, field);
    } else if (key == "row_fetch_cycles") {
      accel.cost.row_fetch_cycles = parse_number<std::int64_t>(value, field);
    } else if (key == "output_write_cycles") {
      accel.cost.output_write_cycles = parse_number<std::int64_t>(value, field);
    } else if (key == "linear_parallel_outputs") {
      accel.cost.linear_parallel_outputs = parse_number<int>(value, field);
    } else if (key == "clock_mhz") {
      accel.clock_mhz = parse_number<double>(value, field);
    } else {
      throw ConfigError(field + ": unknown key");
    }
  }
  accel.validate();
  return accel;
}

std::string to_text(const AcceleratorConfig& accel) {
  std::ostringstream os;
  os << "time_steps = " << accel.time_steps << '\n'
     << "conv_units = " << accel.conv_units << '\n'
     << "conv_xy = " << accel.conv.columns << ',' << accel.conv.rows << '\n'
     << "pool_xy = " << accel.pool.columns << ',' << accel.pool.rows << '\n'
     << "memory_mode = "
     << (accel.memory.kind == MemoryMode::Kind::on_chip ? "on_chip" : "off_chip") << '\n'
     << "dram_latency_cycles = " << accel.memory.dram_latency_cycles << '\n'
     << "dram_bytes_per_cycle = " << accel.memory.dram_bytes_per_cycle << '\n'
     << "row_fetch_cycles = " << accel.cost.row_fetch_cycles << '\n'
     << "output_write_cycles = " << accel.cost.output_write_cycles << '\n'
     << "linear_parallel_outputs = " << accel.cost.linear_parallel_outputs << '\n'
     << "clock_mhz = " << accel.clock_mhz << '\n';
  return os.str();
}

void CycleReport::add(LayerCycles layer) {
  compute_cycles += layer.compute_cycles;
  weight_fetch_cycles += layer.weight_fetch_cycles;
  total_cycles += layer.total();
  layers.push_back(std::move(layer));
}

void check_capacity(const NetworkSpec& spec, const AcceleratorConfig& accel) {
  for (const auto& layer : spec.layers) {
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
      check_conv_capacity(accel.conv, *c);
    } else if (const auto* p = std::get_if<PoolLayerSpec>(&layer)) {
      check_pool_capacity(accel.pool, *p);
    }
  }
}

CycleReport estimate_cycles(const NetworkSpec& spec, const QuantizedParams& params,
                            const AcceleratorConfig& accel) {
  accel.validate();
  check_capacity(spec, accel);
  CycleReport report;
  report.clock_mhz = accel.clock_mhz;
  const int t = accel.time_steps;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const int index = static_cast<int>(i);
    LayerCycles lc{index, std::string(layer_kind(layer)), 0,
                   fetch_cycles(accel, params, index)};
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
      const std::int64_t groups =
          ceil_div(c->out_channels, conv_channel_parallel(accel.conv, *c));
      lc.compute_cycles =
          ceil_div(groups, accel.conv_units) * conv_pass_cycles(*c, t, accel.cost);
    } else if (const auto* p = std::get_if<PoolLayerSpec>(&layer)) {
      lc.compute_cycles = ceil_div(p->out.channels, pool_channel_parallel(accel.pool, *p)) *
                          pool_pass_cycles(*p, t, accel.cost);
    } else if (const auto* l = std::get_if<LinearLayerSpec>(&layer)) {
      lc.compute_cycles = linear_cycles(*l, t, accel.cost);
    }
    report.add(std::move(lc));
  }
  return report;
}

int argmax(const IntTensor& logits) {
  Eigen::Index best = 0;
  if (logits.size() > 0) logits.data().maxCoeff(&best);
  return static_cast<int>(best);
}

InferenceResult run_inference(const NetworkSpec& spec, const QuantizedParams& params,
                              const IntTensor& input_levels,
                              const AcceleratorConfig& accel) {
  accel.validate();
  validate_params(spec, params);
  check_capacity(spec, accel);
  const EncodingConfig cfg = accel.encoding();
  if (input_levels.shape() != spec.input) {
    throw ConfigError("input shape does not match network input");
  }

  InferenceResult result;
  result.plan = plan_buffers(spec, cfg);
  result.cycles.clock_mhz = accel.clock_mhz;
  ActivationMemory memory(result.plan);
  memory.load_input(encode_planes(input_levels, cfg));

  const std::size_t last = spec.layers.size() - 1;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const int index = static_cast<int>(i);
    LayerCycles lc{index, std::string(layer_kind(layer)), 0,
                   fetch_cycles(accel, params, index)};

    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
      const SpikePlanes& in = memory.read(index);
      const auto& kernels = params.at(index);
      const int per_pass = conv_channel_parallel(accel.conv, *c);
      const int groups = static_cast<int>(ceil_div(c->out_channels, per_pass));

      // Pass groups are dealt round-robin to the units, which run
      // concurrently; the layer takes as long as the busiest unit.
      OutputLogic logic(c->out, c->in_channels, cfg.time_steps);
      for (int unit = 0; unit < accel.conv_units && unit < groups; ++unit) {
        std::vector<int> channels;
        for (int g = unit; g < groups; g += accel.conv_units) {
          for (int o = g * per_pass; o < std::min(c->out_channels, (g + 1) * per_pass); ++o) {
            channels.push_back(o);
          }
        }
        const ConvRunResult run =
            conv_unit_run(accel.conv, *c, in, kernels, accel.cost, channels);
        for (const auto& p : run.stream) logic.accumulate(p);
        lc.compute_cycles = std::max(lc.compute_cycles, run.cycles);
      }
      memory.write(index, encode_planes(requantize(logic.accumulators(),
                                                   {c->apply_relu, c->requant_shift}, cfg),
                                        cfg));
    } else if (const auto* p = std::get_if<PoolLayerSpec>(&layer)) {
      PoolRunResult run = pool_unit_run(accel.pool, *p, memory.read(index), accel.cost);
      lc.compute_cycles = run.cycles;
      memory.write(index, std::move(run.output));
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      memory.flatten(index);
    } else {
      const auto& l = std::get<LinearLayerSpec>(layer);
      const bool final_layer = i == last;
      LinearRunResult run = linear_unit_run(
          l, memory.read(index), params.at(index), accel.cost,
          final_layer ? std::nullopt
                      : std::optional<Epilogue>(Epilogue{l.apply_relu, l.requant_shift}));
      lc.compute_cycles = run.cycles;
      if (final_layer) {
        result.logits = std::move(run.accumulators);
      } else {
        memory.write(index, std::move(run.output));
      }
    }
    result.cycles.add(std::move(lc));
  }
  result.predicted = argmax(result.logits);
  return result;
}

std::vector<int> calibrate_requant(const NetworkSpec& spec,
                                   const QuantizedParams& params,
                                   std::span<const IntTensor> samples,
                                   const EncodingConfig& cfg) {
  if (samples.empty()) throw ConfigError("calibration needs at least one input");
  std::vector<int> shifts(spec.layers.size(), 0);
  NetworkSpec current = with_requant_shifts(spec, shifts);
  const std::size_t last = spec.layers.size() - 1;

  for (std::size_t i = 0; i < last; ++i) {
    const auto& layer = current.layers[i];
    bool relu = false;
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) relu = c->apply_relu;
    else if (const auto* l = std::get_if<LinearLayerSpec>(&layer)) relu = l->apply_relu;
    else continue;

    std::int64_t peak = 0;
    for (const auto& sample : samples) {
      const auto fwd = oracle::ref_forward(current, params, sample, cfg);
      const auto& acc = fwd.pre_activation[i].data();
      if (acc.size() == 0) continue;
      // Without ReLU negative values clamp to 0 regardless of the shift.
      peak = std::max(peak, relu ? std::max<std::int64_t>(acc.maxCoeff(), 0) : acc.maxCoeff());
    }
    int shift = 0;
    while ((peak >> shift) > cfg.max_level()) ++shift;
    shifts[i] = shift;
    current = with_requant_shifts(spec, shifts);
  }
  return shifts;
}

TimeStepSweep sweep_time_steps(const NetworkSpec& spec, const QuantizedParams& params,
                               const RealTensor& image, const AcceleratorConfig& accel,
                               std::span<const int> time_steps) {
  if (time_steps.empty()) throw ConfigError("time-step sweep needs at least one value");
  if (!std::is_sorted(time_steps.begin(), time_steps.end()) ||
      std::adjacent_find(time_steps.begin(), time_steps.end()) != time_steps.end()) {
    throw ConfigError("time-step sweep values must be strictly ascending");
  }
  TimeStepSweep sweep;
  for (int t : time_steps) {
    AcceleratorConfig cfg = accel;
    cfg.time_steps = t;
    const auto run = run_inference(spec, params, quantize_image(image, cfg.encoding()), cfg);
    sweep.rows.push_back({t, run.cycles.total_cycles, run.cycles.latency_us(), run.predicted});
  }
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
    sweep.increments.push_back(sweep.rows[i].cycles - sweep.rows[i - 1].cycles);
  }
  // Collinearity of consecutive points; exact in integers.
  for (std::size_t i = 2; i < sweep.rows.size(); ++i) {
    const auto& a = sweep.rows[i - 2];
    const auto& b = sweep.rows[i - 1];
    const auto& c = sweep.rows[i];
    if ((b.cycles - a.cycles) * (c.time_steps - b.time_steps) !=
        (c.cycles - b.cycles) * (b.time_steps - a.time_steps)) {
      sweep.affine = false;
    }
  }
  return sweep;
}

UnitSweep sweep_conv_units(const NetworkSpec& spec, const QuantizedParams& params,
                           const RealTensor& image, const AcceleratorConfig& accel,
                           std::span<const int> conv_units) {
  if (!std::is_sorted(conv_units.begin(), conv_units.end()) ||
      std::adjacent_find(conv_units.begin(), conv_units.end()) != conv_units.end()) {
    throw ConfigError("unit sweep values must be strictly ascending");
  }
  UnitSweep sweep;
  const IntTensor input = quantize_image(image, accel.encoding());
  IntTensor reference;
  for (int u : conv_units) {
    AcceleratorConfig cfg = accel;
    cfg.conv_units = u;
    const auto run = run_inference(spec, params, input, cfg);
    UnitRow row{u, run.cycles.total_cycles, run.cycles.latency_us(), 1.0, 1.0};
    if (sweep.rows.empty()) {
      reference = run.logits;
    } else {
      const auto& first = sweep.rows.front();
      const auto& prev = sweep.rows.back();
      row.speedup = static_cast<double>(first.cycles) / static_cast<double>(row.cycles);
      row.step_speedup = static_cast<double>(prev.cycles) / static_cast<double>(row.cycles);
      if (row.cycles > prev.cycles) sweep.monotone = false;
      if (row.step_speedup >= static_cast<double>(u) / prev.conv_units) sweep.sublinear = false;
      if (!(run.logits == reference)) sweep.logits_invariant = false;
    }
    sweep.rows.push_back(row);
  }
  return sweep;
}

EvalResult evaluate(const NetworkSpec& spec, const QuantizedParams& params,
                    std::span<const Sample> dataset, const AcceleratorConfig& accel,
                    std::int64_t limit, unsigned threads) {
  if (dataset.empty()) throw ConfigError("evaluation dataset is empty");
  const std::int64_t count =
      limit > 0 ? std::min<std::int64_t>(limit, static_cast<std::int64_t>(dataset.size()))
                : static_cast<std::int64_t>(dataset.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, count));

  EvalResult result;
  result.total = count;
  result.cycles = estimate_cycles(spec, params, accel);

  std::atomic<std::int64_t> next{0};
  std::atomic<std::int64_t> correct{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    try {
      for (std::int64_t i = next++; i < count; i = next++) {
        const auto& sample = dataset[static_cast<std::size_t>(i)];
        const auto run = run_inference(spec, params,
                                       quantize_image(sample.image, accel.encoding()), accel);
        if (!(run.cycles == result.cycles)) {
          throw ProtocolError("cycle count depends on input data");
        }
        if (run.predicted == sample.label) ++correct;
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next = count;
    }
  };

  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (error) std::rethrow_exception(error);

  result.correct = correct;
  result.accuracy = static_cast<double>(result.correct) / static_cast<double>(count);
  return result;
}

}  // namespace rsnn
