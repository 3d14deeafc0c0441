#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "subqrag/compare.hpp"
#include "subqrag/metrics.hpp"

namespace subqrag::report {

/// Display rounding: half-up to integer percent. Raw JSON keeps full
/// precision; rounding is presentation only.
int round_half_up(double value);

nlohmann::json report_to_json(const std::vector<metrics::MetricReport>& reports,
                              metrics::Aggregation aggregation);
std::vector<metrics::MetricReport> report_from_json(const nlohmann::json& body);

void write_report_json(const std::filesystem::path& path,
                       const std::vector<metrics::MetricReport>& reports,
                       metrics::Aggregation aggregation);

/// Fixed-width scenario and metric tables; undefined metrics render as "—".
std::string render_reports(const std::vector<metrics::MetricReport>& reports);

/// Renders a report.json file; schema mismatches raise a render error.
std::string render_report_file(const std::filesystem::path& path);

nlohmann::json win_rate_to_json(const compare::WinRateMatrix& matrix);
compare::WinRateMatrix win_rate_from_json(const nlohmann::json& body);
void write_win_rate_json(const std::filesystem::path& path, const compare::WinRateMatrix& matrix);
std::string render_win_rates(const compare::WinRateMatrix& matrix);
std::string render_win_rate_file(const std::filesystem::path& path);

}  // namespace subqrag::report
