#include "rsnn/report.hpp"

#include "rsnn/errors.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace rsnn {

namespace {

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

ReportFormat parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "text") return ReportFormat::text;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

Json to_json(const CycleReport& report) {
  Json layers = Json::array();
  for (const auto& l : report.layers) {
    layers.push_back(Json{{"layer", l.layer},
                          {"kind", l.kind},
                          {"compute_cycles", l.compute_cycles},
                          {"weight_fetch_cycles", l.weight_fetch_cycles}});
  }
  return Json{{"layers", std::move(layers)},
              {"compute_cycles", report.compute_cycles},
              {"weight_fetch_cycles", report.weight_fetch_cycles},
              {"total_cycles", report.total_cycles},
              {"clock_mhz", report.clock_mhz},
              {"latency_us", report.latency_us()},
              {"throughput_fps", report.throughput_fps()}};
}

CycleReport cycle_report_from_json(const Json& j) {
  try {
    CycleReport report;
    report.clock_mhz = j.at("clock_mhz").get<double>();
    for (const auto& l : j.at("layers")) {
      report.add(LayerCycles{l.at("layer").get<int>(), l.at("kind").get<std::string>(),
                             l.at("compute_cycles").get<std::int64_t>(),
                             l.at("weight_fetch_cycles").get<std::int64_t>()});
    }
    if (report.total_cycles != j.at("total_cycles").get<std::int64_t>()) {
      throw FormatError("cycle report: total does not equal sum of layers");
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("cycle report: ") + e.what());
  }
}

Json to_json(const BufferPlan& plan) {
  Json placements = Json::array();
  for (const auto& p : plan.placements) {
    placements.push_back(Json{{"layer", p.layer},
                              {"read", buffer_name(p.read)},
                              {"write", buffer_name(p.write)},
                              {"footprint_bits", p.footprint_bits}});
  }
  return Json{{"time_steps", plan.time_steps},
              {"input_buffer", buffer_name(plan.input_buffer)},
              {"input_bits", plan.input_bits},
              {"ping2d_bits", plan.capacity(BufferId::ping2d)},
              {"pong2d_bits", plan.capacity(BufferId::pong2d)},
              {"ping1d_bits", plan.capacity(BufferId::ping1d)},
              {"pong1d_bits", plan.capacity(BufferId::pong1d)},
              {"buf2d_bits", plan.buf2d_bits()},
              {"buf1d_bits", plan.buf1d_bits()},
              {"total_kib", static_cast<double>(2 * plan.buf2d_bits() + 2 * plan.buf1d_bits()) /
                                8.0 / 1024.0},
              {"placements", std::move(placements)}};
}

Json to_json(const InferenceResult& result) {
  return Json{{"predicted", result.predicted},
              {"logits", std::vector<std::int64_t>(result.logits.data().begin(),
                                                   result.logits.data().end())},
              {"cycles", to_json(result.cycles)},
              {"buffers", to_json(result.plan)}};
}

Json to_json(const TimeStepSweep& sweep) {
  Json rows = Json::array();
  for (const auto& r : sweep.rows) {
    rows.push_back(Json{{"time_steps", r.time_steps},
                        {"cycles", r.cycles},
                        {"latency_us", r.latency_us},
                        {"predicted", r.predicted}});
  }
  return Json{{"rows", std::move(rows)},
              {"increments", sweep.increments},
              {"affine", sweep.affine}};
}

Json to_json(const UnitSweep& sweep) {
  Json rows = Json::array();
  for (const auto& r : sweep.rows) {
    rows.push_back(Json{{"conv_units", r.conv_units},
                        {"cycles", r.cycles},
                        {"latency_us", r.latency_us},
                        {"speedup", r.speedup},
                        {"step_speedup", r.step_speedup}});
  }
  return Json{{"rows", std::move(rows)},
              {"monotone", sweep.monotone},
              {"sublinear", sweep.sublinear},
              {"logits_invariant", sweep.logits_invariant}};
}

Json to_json(const EvalResult& result) {
  return Json{{"correct", result.correct},
              {"total", result.total},
              {"accuracy", result.accuracy},
              {"cycles", to_json(result.cycles)}};
}

Table to_table(const CycleReport& report) {
  Table t{{"layer", "kind", "compute_cycles", "weight_fetch_cycles", "total_cycles"}, {}};
  for (const auto& l : report.layers) {
    t.rows.push_back({std::to_string(l.layer), l.kind, std::to_string(l.compute_cycles),
                      std::to_string(l.weight_fetch_cycles), std::to_string(l.total())});
  }
  return t;
}

Table to_table(const BufferPlan& plan) {
  Table t{{"layer", "read", "write", "footprint_bits"}, {}};
  for (const auto& p : plan.placements) {
    t.rows.push_back({std::to_string(p.layer), std::string(buffer_name(p.read)),
                      std::string(buffer_name(p.write)), std::to_string(p.footprint_bits)});
  }
  return t;
}

Table to_table(const TimeStepSweep& sweep) {
  Table t{{"time_steps", "cycles", "latency_us", "predicted"}, {}};
  for (const auto& r : sweep.rows) {
    t.rows.push_back({std::to_string(r.time_steps), std::to_string(r.cycles),
                      fixed(r.latency_us), std::to_string(r.predicted)});
  }
  return t;
}

Table to_table(const UnitSweep& sweep) {
  Table t{{"conv_units", "cycles", "latency_us", "speedup", "step_speedup"}, {}};
  for (const auto& r : sweep.rows) {
    t.rows.push_back({std::to_string(r.conv_units), std::to_string(r.cycles),
                      fixed(r.latency_us), fixed(r.speedup), fixed(r.step_speedup)});
  }
  return t;
}

void emit_report(std::ostream& out, ReportFormat format, const Json& doc,
                 const Table& table) {
  switch (format) {
    case ReportFormat::json:
      out << doc.dump(2) << '\n';
      break;
    case ReportFormat::csv: {
      auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (i) out << ',';
          out << csv_escape(cells[i]);
        }
        out << '\n';
      };
      line(table.columns);
      for (const auto& row : table.rows) line(row);
      break;
    }
    case ReportFormat::text: {
      std::vector<std::size_t> width(table.columns.size());
      for (std::size_t c = 0; c < width.size(); ++c) {
        width[c] = table.columns[c].size();
        for (const auto& row : table.rows) width[c] = std::max(width[c], row[c].size());
      }
      auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
          out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << cells[c];
        }
        out << '\n';
      };
      line(table.columns);
      for (const auto& row : table.rows) line(row);
      for (const auto& [key, value] : doc.items()) {
        if (value.is_string()) out << key << ": " << value.get<std::string>() << '\n';
        else if (value.is_primitive()) out << key << ": " << value.dump() << '\n';
      }
      break;
    }
  }
}

}  // namespace rsnn
