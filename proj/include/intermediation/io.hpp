#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "intermediation/core.hpp"
#include "intermediation/engine.hpp"
#include "intermediation/harness.hpp"

namespace intermed {

/// {"sellers":[...], "buyers":[...]}
nlohmann::json instance_to_json(const Instance& inst);
/// Validates through validate_instance; malformed documents raise Error{BadParams}.
Instance instance_from_json(const nlohmann::json& doc);

Instance read_instance_file(const std::string& path);

/// {"bought":[[t,value,price],...], "sold":[...], "kappa":[...]}.
/// Unbounded prices serialize as null.
nlohmann::json trade_log_to_json(const TradeLog& log);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

/// Parameters rendered as "k=v;k=v".
std::string format_parameters(const std::vector<std::pair<std::string, double>>& params);

inline constexpr const char* kReportCsvHeader = "claim,parameters,empirical,bound,trials,pass,note";
std::string report_csv_row(const ConcentrationReport& r);
nlohmann::json report_to_json(const ConcentrationReport& r);

}  // namespace intermed
