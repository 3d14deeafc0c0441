#include "subqrag/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace subqrag::report {

using nlohmann::json;

int round_half_up(double value) { return static_cast<int>(std::floor(value + 0.5)); }

namespace {

constexpr const char* kScenarioKeys[2][2] = {
    {"not_answered_not_retrieved", "not_answered_retrieved"},
    {"answered_not_retrieved", "answered_retrieved"}};

json row_to_json(const metrics::ScenarioRow& row) {
  json out{{"count", row.count}};
  for (int a = 0; a < 2; ++a)
    for (int r = 0; r < 2; ++r) out[kScenarioKeys[a][r]] = row.probs[a][r];
  return out;
}

metrics::ScenarioRow row_from_json(const json& body) {
  metrics::ScenarioRow row;
  row.count = body.at("count").get<std::size_t>();
  for (int a = 0; a < 2; ++a)
    for (int r = 0; r < 2; ++r) row.probs[a][r] = body.at(kScenarioKeys[a][r]).get<double>();
  return row;
}

void metric_to_json(json& metrics_obj, json& undefined_obj, const std::string& key,
                    const metrics::MetricValue& value) {
  if (value.defined()) {
    metrics_obj[key] = *value.value;
  } else {
    undefined_obj[key] = value.reason;
  }
}

metrics::MetricValue metric_from_json(const json& metrics_obj, const json& undefined_obj,
                                      const std::string& key) {
  metrics::MetricValue out;
  if (metrics_obj.contains(key)) {
    out.value = metrics_obj.at(key).get<double>();
  } else if (undefined_obj.contains(key)) {
    out.reason = undefined_obj.at(key).get<std::string>();
  } else {
    out.reason = "absent from report";
  }
  return out;
}

std::string type_key(SubQuestionType t) { return std::string(to_string(t)); }

}  // namespace

json report_to_json(const std::vector<metrics::MetricReport>& reports,
                    metrics::Aggregation aggregation) {
  json systems = json::object();
  json order = json::array();
  for (const auto& report : reports) {
    json scenarios = json::object();
    for (SubQuestionType t : metrics::kTypes) {
      scenarios[type_key(t)] = row_to_json(report.scenarios.row(t));
    }
    json metric_values = json::object();
    json undefined = json::object();
    for (SubQuestionType t : metrics::kTypes) {
      metric_to_json(metric_values, undefined, "metric1." + type_key(t), report.metric1.of(t));
      metric_to_json(metric_values, undefined, "metric2." + type_key(t), report.metric2.of(t));
    }
    metric_to_json(metric_values, undefined, "metric3", report.metric3);
    metric_to_json(metric_values, undefined, "metric4", report.metric4);
    metric_to_json(metric_values, undefined, "metric5", report.metric5);
    metric_to_json(metric_values, undefined, "metric6", report.metric6);

    json entry{{"scenarios", scenarios}, {"metrics", metric_values}};
    if (!undefined.empty()) entry["undefined"] = undefined;
    systems[report.system_id] = std::move(entry);
    order.push_back(report.system_id);
  }
  return json{{"aggregation",
               aggregation == metrics::Aggregation::Pooled ? "pooled" : "macro"},
              {"system_order", order},
              {"systems", systems}};
}

std::vector<metrics::MetricReport> report_from_json(const json& body) {
  try {
    const json& systems = body.at("systems");
    std::vector<std::string> order;
    if (body.contains("system_order")) {
      for (const auto& s : body.at("system_order")) order.push_back(s.get<std::string>());
    } else {
      for (auto it = systems.begin(); it != systems.end(); ++it) order.push_back(it.key());
    }
    std::vector<metrics::MetricReport> reports;
    for (const auto& system_id : order) {
      const json& entry = systems.at(system_id);
      metrics::MetricReport report;
      report.system_id = system_id;
      for (SubQuestionType t : metrics::kTypes) {
        report.scenarios.row(t) = row_from_json(entry.at("scenarios").at(type_key(t)));
      }
      const json& metric_values = entry.at("metrics");
      const json undefined = entry.value("undefined", json::object());
      for (SubQuestionType t : metrics::kTypes) {
        report.metric1.of(t) = metric_from_json(metric_values, undefined, "metric1." + type_key(t));
        report.metric2.of(t) = metric_from_json(metric_values, undefined, "metric2." + type_key(t));
      }
      report.metric3 = metric_from_json(metric_values, undefined, "metric3");
      report.metric4 = metric_from_json(metric_values, undefined, "metric4");
      report.metric5 = metric_from_json(metric_values, undefined, "metric5");
      report.metric6 = metric_from_json(metric_values, undefined, "metric6");
      reports.push_back(std::move(report));
    }
    return reports;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Render, std::string("report schema mismatch: ") + e.what());
  }
}

void write_report_json(const std::filesystem::path& path,
                       const std::vector<metrics::MetricReport>& reports,
                       metrics::Aggregation aggregation) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << report_to_json(reports, aggregation).dump(2) << "\n";
}

namespace {

std::string pad(std::string s, std::size_t width) {
  // Em dashes are 3 bytes; pad on display width, not byte length.
  const std::size_t display = s == "—" ? 1 : s.size();
  if (display < width) s.append(width - display, ' ');
  return s;
}

std::string percent_cell(const metrics::MetricValue& value, double scale) {
  if (!value.defined()) return "—";
  return std::to_string(round_half_up(*value.value * scale)) + "%";
}

}  // namespace

std::string render_reports(const std::vector<metrics::MetricReport>& reports) {
  std::ostringstream out;
  out << "Scenario occurrence per sub-question type\n";
  const char* scenario_names[2][2] = {{"not answered, not retrieved", "not answered, retrieved"},
                                      {"answered, not retrieved", "answered, retrieved"}};
  for (const auto& report : reports) {
    out << "\nSystem: " << report.system_id << "\n";
    out << "  " << pad("Scenario", 30) << pad("Core", 8) << pad("Background", 12)
        << pad("Follow-up", 10) << "\n";
    // Table rows in the canonical order: (¬a,¬r), (¬a,r), (a,¬r), (a,r).
    const std::pair<int, int> order[4] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (const auto& [a, r] : order) {
      out << "  " << pad(scenario_names[a][r], 30);
      for (SubQuestionType t : metrics::kTypes) {
        const auto& row = report.scenarios.row(t);
        const std::string cell =
            row.count == 0 ? "—" : std::to_string(round_half_up(row.probs[a][r] * 100.0)) + "%";
        out << pad(cell, t == SubQuestionType::Core ? 8 : (t == SubQuestionType::Background ? 12 : 10));
      }
      out << "\n";
    }
  }

  out << "\nMetrics\n";
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  auto collect = [&](const std::string& label, auto getter, double scale) {
    std::vector<std::string> cells;
    for (const auto& report : reports) cells.push_back(percent_cell(getter(report), scale));
    rows.emplace_back(label, std::move(cells));
  };
  collect("Metric #1 (core)", [](const auto& r) { return r.metric1.core; }, 100.0);
  collect("Metric #1 (background)", [](const auto& r) { return r.metric1.background; }, 100.0);
  collect("Metric #1 (follow-up)", [](const auto& r) { return r.metric1.follow_up; }, 100.0);
  collect("Metric #2 (core)", [](const auto& r) { return r.metric2.core; }, 100.0);
  collect("Metric #2 (background)", [](const auto& r) { return r.metric2.background; }, 100.0);
  collect("Metric #2 (follow-up)", [](const auto& r) { return r.metric2.follow_up; }, 100.0);
  collect("Metric #3", [](const auto& r) { return r.metric3; }, 100.0);
  collect("Metric #4", [](const auto& r) { return r.metric4; }, 100.0);
  collect("Metric #5", [](const auto& r) { return r.metric5; }, 100.0);
  // Addressing positions are already percentages of answer length.
  collect("Metric #6", [](const auto& r) { return r.metric6; }, 1.0);

  std::size_t label_width = 0;
  for (const auto& [label, cells] : rows) label_width = std::max(label_width, label.size());
  out << "  " << pad("Metric", label_width + 2);
  for (const auto& report : reports) out << pad(report.system_id, 14);
  out << "\n";
  for (const auto& [label, cells] : rows) {
    out << "  " << pad(label, label_width + 2);
    for (const auto& cell : cells) out << pad(cell, 14);
    out << "\n";
  }
  return out.str();
}

std::string render_report_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json body;
  try {
    in >> body;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Render, std::string("report is not valid JSON: ") + e.what());
  }
  return render_reports(report_from_json(body));
}

json win_rate_to_json(const compare::WinRateMatrix& matrix) {
  json cells = json::array();
  for (const auto& row : matrix.cells) {
    json out_row = json::array();
    for (const auto& cell : row) out_row.push_back(cell ? json(*cell) : json(nullptr));
    cells.push_back(std::move(out_row));
  }
  return json{{"methods", matrix.methods}, {"cells", cells}};
}

compare::WinRateMatrix win_rate_from_json(const json& body) {
  try {
    compare::WinRateMatrix matrix;
    matrix.methods = body.at("methods").get<std::vector<std::string>>();
    for (const auto& row : body.at("cells")) {
      std::vector<std::optional<double>> out_row;
      for (const auto& cell : row) {
        out_row.push_back(cell.is_null() ? std::optional<double>() : cell.get<double>());
      }
      matrix.cells.push_back(std::move(out_row));
    }
    if (matrix.cells.size() != matrix.methods.size()) {
      throw Error(ErrorKind::Render, "win-rate matrix shape mismatch");
    }
    return matrix;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Render, std::string("win-rate schema mismatch: ") + e.what());
  }
}

void write_win_rate_json(const std::filesystem::path& path,
                         const compare::WinRateMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << win_rate_to_json(matrix).dump(2) << "\n";
}

namespace {

std::string win_rate_cell(const std::optional<double>& cell) {
  if (!cell) return "-";
  std::ostringstream out;
  out << std::setprecision(10) << *cell;
  return out.str() + "%";
}

}  // namespace

std::string render_win_rates(const compare::WinRateMatrix& matrix) {
  std::ostringstream out;
  out << "Win rates (row beats column, %)\n";
  std::size_t width = 10;
  for (const auto& m : matrix.methods) width = std::max(width, m.size() + 2);
  out << "  " << pad("Method", width);
  for (const auto& m : matrix.methods) out << pad(m, width);
  out << "\n";
  for (std::size_t i = 0; i < matrix.methods.size(); ++i) {
    out << "  " << pad(matrix.methods[i], width);
    for (std::size_t j = 0; j < matrix.methods.size(); ++j) {
      out << pad(win_rate_cell(matrix.cells[i][j]), width);
    }
    out << "\n";
  }
  return out.str();
}

std::string render_win_rate_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json body;
  try {
    in >> body;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Render, std::string("win-rate file is not valid JSON: ") + e.what());
  }
  return render_win_rates(win_rate_from_json(body));
}

}  // namespace subqrag::report
