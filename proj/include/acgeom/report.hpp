#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace acgeom {

inline constexpr const char* report_schema = "acgeom-report/1";

enum class relation { at_most, at_least, info };

struct report_row {
  std::string check;
  std::optional<double> value;  // empty when the check could not be computed
  std::optional<double> tolerance;
  relation rel = relation::at_most;
  std::string note;

  bool pass() const {
    if (rel == relation::info) return true;
    if (!value || !tolerance || std::isnan(*value)) return false;
    return rel == relation::at_most ? *value <= *tolerance : *value >= *tolerance;
  }
  friend bool operator==(const report_row&, const report_row&) = default;
};

struct ladder_row {
  double s = 0;
  double e = 0;
  std::optional<double> slope_partial;
  friend bool operator==(const ladder_row&, const ladder_row&) = default;
};

struct report {
  std::string command;
  std::string fixture;
  std::vector<report_row> rows;
  std::vector<ladder_row> ladder;  // geodesic only

  bool pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const report_row& r) { return r.pass(); });
  }
  void check(std::string name, double value, double tol, std::string note = {}) {
    rows.push_back({std::move(name), value, tol, relation::at_most, std::move(note)});
  }
  void at_least(std::string name, double value, double bound, std::string note = {}) {
    rows.push_back({std::move(name), value, bound, relation::at_least, std::move(note)});
  }
  void info(std::string name, std::optional<double> value, std::string note = {}) {
    rows.push_back({std::move(name), value, std::nullopt, relation::info, std::move(note)});
  }
  void failure(std::string name, std::string note) {
    rows.push_back({std::move(name), std::nullopt, std::nullopt, relation::at_most, std::move(note)});
  }
  friend bool operator==(const report&, const report&) = default;
};

namespace detail {

inline const char* relation_name(relation r) {
  switch (r) {
    case relation::at_most: return "<=";
    case relation::at_least: return ">=";
    default: return "info";
  }
}

inline relation relation_from(const std::string& s) {
  if (s == "<=") return relation::at_most;
  if (s == ">=") return relation::at_least;
  if (s == "info") return relation::info;
  throw std::runtime_error("unknown relation " + s);
}

inline nlohmann::json number(std::optional<double> x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}

inline std::optional<double> number_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (auto& x : r.rows)
    rows.push_back({{"check", x.check},
                    {"value", detail::number(x.value)},
                    {"tolerance", detail::number(x.tolerance)},
                    {"relation", detail::relation_name(x.rel)},
                    {"pass", x.pass()},
                    {"note", x.note}});
  nlohmann::json j{{"schema", report_schema}, {"command", r.command}, {"fixture", r.fixture},
                   {"pass", r.pass()},        {"rows", rows}};
  if (!r.ladder.empty()) {
    nlohmann::json lad = nlohmann::json::array();
    for (auto& x : r.ladder) lad.push_back({{"s", x.s}, {"e", x.e}, {"slope_partial", detail::number(x.slope_partial)}});
    j["ladder"] = lad;
  }
  return j;
}

inline report report_from_json(const nlohmann::json& j) {
  if (j.at("schema") != report_schema) throw std::runtime_error("unsupported report schema");
  report r{j.at("command"), j.at("fixture"), {}, {}};
  for (auto& x : j.at("rows"))
    r.rows.push_back({x.at("check"), detail::number_from(x.at("value")), detail::number_from(x.at("tolerance")),
                      detail::relation_from(x.at("relation")), x.at("note")});
  if (j.contains("ladder"))
    for (auto& x : j.at("ladder")) r.ladder.push_back({x.at("s"), x.at("e"), detail::number_from(x.at("slope_partial"))});
  return r;
}

inline std::string format_number(std::optional<double> x) {
  if (!x) return "-";
  std::ostringstream os;
  os << std::setprecision(6) << *x;
  return os.str();
}

// Column-aligned table: check, value, relation, tolerance, verdict, note.
inline std::string to_text(const report& r) {
  std::vector<std::vector<std::string>> cells{{"check", "value", "rel", "tol", "result", "note"}};
  for (auto& x : r.rows)
    cells.push_back({x.check, format_number(x.value), detail::relation_name(x.rel), format_number(x.tolerance),
                     x.rel == relation::info ? "INFO" : (x.pass() ? "PASS" : "FAIL"), x.note});
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  os << r.command << " [" << r.fixture << "]\n";
  for (auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << "\n";
  }
  if (!r.ladder.empty()) {
    os << "s         e             slope\n";
    for (auto& x : r.ladder) {
      std::ostringstream l;
      l << std::left << std::setw(10) << format_number(x.s) << std::setw(14) << format_number(x.e)
        << format_number(x.slope_partial);
      os << l.str() << "\n";
    }
  }
  return os.str();
}

}  // namespace acgeom
