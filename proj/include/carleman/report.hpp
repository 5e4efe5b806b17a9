#pragma once

// Deterministic CSV / JSON serialization of verifier output.

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "carleman/errors.hpp"
#include "carleman/verifier.hpp"

namespace carleman {

/// Shortest form that keeps 17 significant digits, so every double
/// round-trips; "nan", "inf", "-inf" for non-finite values.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
  return {buf.data(), res.ptr};
}

using Cell = std::variant<std::string, double, long long, bool>;

inline std::string format_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(long long v) const { return std::to_string(v); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  };
  return std::visit(Visitor{}, c);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("Table: row width does not match header");
    rows.push_back(std::move(row));
  }
};

inline std::string join_named(const NamedValues& values) {
  std::string out;
  for (const auto& [k, v] : values) {
    if (!out.empty()) out += ';';
    out += k + '=' + format_double(v);
  }
  return out;
}

inline Table to_table(const std::vector<InequalityReport>& reports) {
  Table t{{"name", "parameters", "lhs", "rhs", "margin", "holds", "diagnostics"}, {}};
  for (const auto& r : reports)
    t.add({r.name, join_named(r.parameters), r.lhs, r.rhs, r.margin, r.holds, join_named(r.diagnostics)});
  return t;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
    nlohmann::ordered_json operator()(double d) const {
      if (!std::isfinite(d)) return format_double(d);
      return d;
    }
    nlohmann::ordered_json operator()(long long v) const { return v; }
    nlohmann::ordered_json operator()(bool b) const { return b; }
  };
  return std::visit(Visitor{}, c);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error(path.string(), "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw io_error(path.string(), "write failed");
}

} // namespace detail

inline std::string to_csv(const Table& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << detail::csv_escape(t.columns[i]);
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::csv_escape(format_cell(row[i]));
    out << '\n';
  }
  return out.str();
}

/// Array of objects keyed by column name, in column order.
inline nlohmann::ordered_json to_json(const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = detail::cell_json(row[i]);
    arr.push_back(std::move(obj));
  }
  return arr;
}

enum class ReportFormat { csv, json };

inline void emit_table(const Table& t, ReportFormat format, const std::filesystem::path& path) {
  if (t.rows.empty()) throw std::invalid_argument("emit_report: no rows");
  detail::write_text(path, format == ReportFormat::csv ? to_csv(t) : to_json(t).dump(2) + "\n");
}

inline void emit_report(const std::vector<InequalityReport>& reports, ReportFormat format,
                        const std::filesystem::path& path) {
  emit_table(to_table(reports), format, path);
}

inline nlohmann::ordered_json fit_json(const ConstantFit& f) {
  nlohmann::ordered_json j;
  j["exponent"] = f.exponent ? nlohmann::ordered_json(*f.exponent) : nlohmann::ordered_json(nullptr);
  j["constant"] = f.constant;
  j["r_squared"] = f.r_squared ? nlohmann::ordered_json(*f.r_squared) : nlohmann::ordered_json(nullptr);
  j["window"] = {f.window_lo, f.window_hi};
  j["points"] = f.points;
  return j;
}

} // namespace carleman
