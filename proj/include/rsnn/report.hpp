#pragma once

#include "rsnn/controller.hpp"
#include "rsnn/memsys.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rsnn {

using Json = nlohmann::ordered_json;

enum class ReportFormat { json, csv, text };

/// Throws ConfigError for anything but "json", "csv" or "text".
ReportFormat parse_format(std::string_view name);

/// Row-oriented view of a report used for CSV and text output.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

Json to_json(const CycleReport& report);
CycleReport cycle_report_from_json(const Json& j);
Json to_json(const BufferPlan& plan);
Json to_json(const InferenceResult& result);
Json to_json(const TimeStepSweep& sweep);
Json to_json(const UnitSweep& sweep);
Json to_json(const EvalResult& result);

Table to_table(const CycleReport& report);
Table to_table(const BufferPlan& plan);
Table to_table(const TimeStepSweep& sweep);
Table to_table(const UnitSweep& sweep);

/// JSON writes `doc` (field order preserved); CSV writes the table header
/// and rows; text writes the table aligned in columns followed by the
/// top-level scalar fields of `doc`.
void emit_report(std::ostream& out, ReportFormat format, const Json& doc,
                 const Table& table);

}  // namespace rsnn
