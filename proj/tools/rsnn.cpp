// Command line front end of the radix-encoded SNN accelerator simulator.

#include "rsnn/controller.hpp"
#include "rsnn/errors.hpp"
#include "rsnn/idx.hpp"
#include "rsnn/memsys.hpp"
#include "rsnn/netmodel.hpp"
#include "rsnn/oracle.hpp"
#include "rsnn/params.hpp"
#include "rsnn/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace {

using namespace rsnn;

struct CommonOptions {
  std::string net;
  std::string params;
  std::string config;
  std::string report;
  std::string format = "text";
  std::uint64_t seed = 1;
  int weight_bits = 3;
  int time_steps = 0;
  int conv_units = 0;
};

struct InputOptions {
  std::string images;
  std::string labels;
  int index = 0;
  int pad = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Context {
  NetworkSpec spec;
  QuantizedParams params;
  AcceleratorConfig accel;
  std::mt19937_64 rng;
};

Context load_context(const CommonOptions& o) {
  Context ctx;
  ctx.rng.seed(o.seed);
  ctx.spec = parse_network(read_file(o.net));
  if (!o.config.empty()) ctx.accel = parse_accelerator_config(read_file(o.config));
  if (o.time_steps > 0) ctx.accel.time_steps = o.time_steps;
  if (o.conv_units > 0) ctx.accel.conv_units = o.conv_units;
  ctx.accel.validate();
  ctx.params = o.params.empty() ? random_params(ctx.spec, o.weight_bits, ctx.rng)
                                : load_params(std::filesystem::path(o.params), ctx.spec);
  return ctx;
}

RealTensor random_image(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  RealTensor image(shape);
  for (auto& v : image.data()) v = dist(rng);
  return image;
}

/// Image from an IDX file when given, otherwise a seeded random image.
Sample load_input(const InputOptions& in, const Context& ctx, std::mt19937_64& rng) {
  if (in.images.empty()) return Sample{random_image(ctx.spec.input, rng), -1};
  const auto data = ingest_idx(in.images, in.labels, in.pad);
  if (in.index < 0 || in.index >= static_cast<int>(data.size())) {
    throw ConfigError("image index out of range");
  }
  return data[static_cast<std::size_t>(in.index)];
}

void write_report(const CommonOptions& o, Json doc, const Table& table) {
  doc["seed"] = o.seed;
  const auto format = parse_format(o.format);
  if (o.report.empty()) {
    emit_report(std::cout, format, doc, table);
    return;
  }
  std::ofstream out(o.report);
  if (!out) throw ConfigError("cannot open " + o.report + " for writing");
  emit_report(out, format, doc, table);
}

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("invalid list entry '" + item + "'");
    }
  }
  return out;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--net", o.net, "Network description file")->required();
  cmd->add_option("--params", o.params, "RSNN parameter file (random when omitted)");
  cmd->add_option("--config", o.config, "Accelerator configuration file");
  cmd->add_option("--report", o.report, "Report output file (stdout when omitted)");
  cmd->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  cmd->add_option("--seed", o.seed, "Seed for random parameters and inputs");
  cmd->add_option("--weight-bits", o.weight_bits, "Bit width of random parameters");
  cmd->add_option("-T,--time-steps", o.time_steps, "Override spike-train length");
  cmd->add_option("-U,--conv-units", o.conv_units, "Override number of convolution units");
}

void add_input(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--images", in.images, "IDX image file");
  cmd->add_option("--labels", in.labels, "IDX label file");
  cmd->add_option("--index", in.index, "Item of the IDX file to use");
  cmd->add_option("--pad", in.pad, "Zero-pad images to N x N (e.g. 32 for LeNet-5)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radix-encoded spiking neural network accelerator simulator"};
  app.require_subcommand(1);

  CommonOptions o;
  InputOptions in;
  std::int64_t limit = 0;
  unsigned threads = 0;
  std::string steps = "3,4,5,6";
  std::string units = "1,2,4,8";
  int samples = 16;
  std::string out_path;

  auto* infer = app.add_subcommand("infer", "Run one inference and report cycles");
  add_common(infer, o);
  add_input(infer, in);

  auto* eval = app.add_subcommand("evaluate", "Classify an IDX dataset");
  add_common(eval, o);
  eval->add_option("--images", in.images, "IDX image file")->required();
  eval->add_option("--labels", in.labels, "IDX label file")->required();
  eval->add_option("--pad", in.pad, "Zero-pad images to N x N");
  eval->add_option("--limit", limit, "Number of items (all when 0)");
  eval->add_option("--threads", threads, "Worker threads (hardware concurrency when 0)");

  auto* sweep_t = app.add_subcommand("sweep-t", "Latency versus spike-train length");
  add_common(sweep_t, o);
  add_input(sweep_t, in);
  sweep_t->add_option("--steps", steps, "Comma separated time steps");

  auto* sweep_u = app.add_subcommand("sweep-units", "Latency versus convolution units");
  add_common(sweep_u, o);
  add_input(sweep_u, in);
  sweep_u->add_option("--units", units, "Comma separated unit counts");

  auto* oracle_cmd = app.add_subcommand("oracle", "Reference integer inference");
  add_common(oracle_cmd, o);
  add_input(oracle_cmd, in);

  auto* calibrate = app.add_subcommand("calibrate", "Choose requantization shifts");
  add_common(calibrate, o);
  add_input(calibrate, in);
  calibrate->add_option("--samples", samples, "Random calibration inputs (without --images)");
  calibrate->add_option("--write-net", out_path, "Write the calibrated network here");

  auto* plan = app.add_subcommand("plan-buffers", "Ping-pong buffer sizing");
  add_common(plan, o);

  auto* gen = app.add_subcommand("gen-params", "Write random parameters to a file");
  add_common(gen, o);
  gen->add_option("--out", out_path, "Output parameter file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx = load_context(o);
    const EncodingConfig cfg = ctx.accel.encoding();

    if (*infer) {
      const Sample s = load_input(in, ctx, ctx.rng);
      const auto result = run_inference(ctx.spec, ctx.params, quantize_image(s.image, cfg), ctx.accel);
      Json doc = to_json(result);
      if (s.label >= 0) doc["label"] = s.label;
      write_report(o, std::move(doc), to_table(result.cycles));
    } else if (*eval) {
      const auto data = ingest_idx(in.images, in.labels, in.pad);
      const auto result = evaluate(ctx.spec, ctx.params, data, ctx.accel, limit, threads);
      write_report(o, to_json(result), to_table(result.cycles));
    } else if (*sweep_t) {
      const Sample s = load_input(in, ctx, ctx.rng);
      const auto list = parse_list(steps);
      const auto sweep = sweep_time_steps(ctx.spec, ctx.params, s.image, ctx.accel, list);
      write_report(o, to_json(sweep), to_table(sweep));
      if (!sweep.affine) return 1;
    } else if (*sweep_u) {
      const Sample s = load_input(in, ctx, ctx.rng);
      const auto list = parse_list(units);
      const auto sweep = sweep_conv_units(ctx.spec, ctx.params, s.image, ctx.accel, list);
      write_report(o, to_json(sweep), to_table(sweep));
      if (!sweep.monotone || !sweep.logits_invariant) return 1;
    } else if (*oracle_cmd) {
      const Sample s = load_input(in, ctx, ctx.rng);
      const auto fwd = oracle::ref_forward(ctx.spec, ctx.params, quantize_image(s.image, cfg), cfg);
      Json layers = Json::array();
      Table table{{"layer", "kind", "shape", "min", "max"}, {}};
      for (std::size_t i = 0; i < fwd.per_layer.size(); ++i) {
        const auto& t = fwd.per_layer[i];
        std::ostringstream shape;
        shape << t.shape();
        const auto lo = t.data().minCoeff();
        const auto hi = t.data().maxCoeff();
        layers.push_back(Json{{"layer", i},
                              {"kind", layer_kind(ctx.spec.layers[i])},
                              {"shape", shape.str()},
                              {"min", lo},
                              {"max", hi}});
        table.rows.push_back({std::to_string(i), std::string(layer_kind(ctx.spec.layers[i])),
                              shape.str(), std::to_string(lo), std::to_string(hi)});
      }
      Json doc{{"predicted", argmax(fwd.logits)},
               {"logits", std::vector<std::int64_t>(fwd.logits.data().begin(),
                                                    fwd.logits.data().end())},
               {"layers", std::move(layers)}};
      write_report(o, std::move(doc), table);
    } else if (*calibrate) {
      std::vector<IntTensor> inputs;
      if (!in.images.empty()) {
        const auto data = ingest_idx(in.images, in.labels, in.pad);
        for (std::size_t i = 0; i < data.size() && static_cast<int>(i) < samples; ++i) {
          inputs.push_back(quantize_image(data[i].image, cfg));
        }
      } else {
        for (int i = 0; i < samples; ++i) {
          inputs.push_back(quantize_image(random_image(ctx.spec.input, ctx.rng), cfg));
        }
      }
      const auto shifts = calibrate_requant(ctx.spec, ctx.params, inputs, cfg);
      const auto calibrated = with_requant_shifts(ctx.spec, shifts);
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw ConfigError("cannot open " + out_path + " for writing");
        out << to_compact(calibrated) << '\n';
      }
      Table table{{"layer", "kind", "requant_shift"}, {}};
      for (std::size_t i = 0; i < shifts.size(); ++i) {
        table.rows.push_back({std::to_string(i), std::string(layer_kind(ctx.spec.layers[i])),
                              std::to_string(shifts[i])});
      }
      write_report(o, Json{{"shifts", shifts}, {"network", to_compact(calibrated)}}, table);
    } else if (*plan) {
      const auto buffers = plan_buffers(ctx.spec, cfg);
      write_report(o, to_json(buffers), to_table(buffers));
    } else if (*gen) {
      save_params(ctx.params, std::filesystem::path(out_path));
    }
  } catch (const rsnn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::logic_error& e) {
    // domain_error, out_of_range and invalid_argument from input validation.
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
