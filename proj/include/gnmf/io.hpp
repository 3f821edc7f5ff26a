#pragma once

// Text formats: matrices as headerless CSV (rows = features), label files
// with one integer per line, convergence traces as CSV or JSON.

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnmf/clustering.hpp"
#include "gnmf/matrix.hpp"
#include "gnmf/solvers.hpp"

namespace gnmf {

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& cell, const std::string& where) {
  const std::string t = trim(cell);
  if (t.empty()) throw ParseError(where + ": empty cell");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError(where + ": not a finite number: '" + t + "'");
  }
  return v;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses a comma-separated numeric table. With `nonnegative` set, negative
/// entries are rejected (data matrices must satisfy X >= 0).
inline Matrix parse_csv_matrix(std::istream& in, const std::string& source,
                               bool nonnegative = true) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const std::string where = source + ":" + std::to_string(line_no);
      const double v = detail::parse_number(cell, where);
      if (nonnegative && v < 0.0) {
        throw ParseError(where + ": negative entry " + detail::trim(cell) +
                         " in a data matrix");
      }
      data.push_back(v);
      ++count;
    }
    if (!line.empty() && line.back() == ',') {
      throw ParseError(source + ":" + std::to_string(line_no) + ": trailing comma");
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(source + ": no data");
  return Matrix(rows, cols, std::move(data));
}

inline Matrix load_csv_matrix(const std::filesystem::path& path, bool nonnegative = true) {
  auto in = detail::open_input(path);
  return parse_csv_matrix(in, path.string(), nonnegative);
}

inline void write_csv_matrix(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
  auto out = detail::open_output(path);
  write_csv_matrix(out, m);
}

inline Labels load_labels(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": not an integer label: '" +
                       t + "'");
    }
    labels.push_back(v);
  }
  if (labels.empty()) throw ParseError(path.string() + ": no labels");
  return labels;
}

inline void write_labels(const std::filesystem::path& path, const Labels& labels) {
  auto out = detail::open_output(path);
  for (int l : labels) out << l << '\n';
}

inline constexpr const char* kTraceHeader =
    "iter,objective,rel_change,beta,accepted,c_k,d_k,elapsed_s";

inline void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  using detail::format_double;
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.rel_change) << ','
        << format_double(r.beta) << ',' << (r.accepted ? 1 : 0) << ',' << format_double(r.c_k)
        << ',' << format_double(r.d_k) << ',' << format_double(r.elapsed_s) << '\n';
  }
}

inline void write_trace_csv(const std::filesystem::path& path, const ConvergenceTrace& trace) {
  auto out = detail::open_output(path);
  write_trace_csv(out, trace);
}

/// Reads the columns written by write_trace_csv. Only the eight CSV columns
/// are recovered.
inline ConvergenceTrace read_trace_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kTraceHeader) {
    throw ParseError(path.string() + ":1: missing trace header '" + kTraceHeader + "'");
  }
  ConvergenceTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 8) throw ParseError(where + ": expected 8 columns");
    TraceRecord r;
    r.iter = static_cast<std::size_t>(detail::parse_number(cells[0], where));
    r.objective = detail::parse_number(cells[1], where);
    r.rel_change = detail::parse_number(cells[2], where);
    r.beta = detail::parse_number(cells[3], where);
    r.accepted = detail::parse_number(cells[4], where) != 0.0;
    r.c_k = detail::parse_number(cells[5], where);
    r.d_k = detail::parse_number(cells[6], where);
    r.elapsed_s = detail::parse_number(cells[7], where);
    trace.records.push_back(r);
  }
  return trace;
}

/// (iteration, objective) pairs for external plotting.
inline void write_plot_data(std::ostream& out, const ConvergenceTrace& trace) {
  out << "iter,objective\n";
  for (const auto& r : trace.records) out << r.iter << ',' << detail::format_double(r.objective) << '\n';
}

inline nlohmann::json to_json(const ConvergenceTrace& trace) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records) {
    records.push_back({{"iter", r.iter},
                       {"objective", r.objective},
                       {"rel_change", r.rel_change},
                       {"beta", r.beta},
                       {"accepted", r.accepted},
                       {"c_k", r.c_k},
                       {"d_k", r.d_k},
                       {"elapsed_s", r.elapsed_s},
                       {"step_norm_sq", r.step_norm_sq},
                       {"rho0", r.rho0}});
  }
  return {{"algorithm", to_string(trace.algorithm)},
          {"initial_objective", trace.initial_objective},
          {"converged", trace.converged},
          {"records", std::move(records)}};
}

inline nlohmann::json to_json(const MetricReport& m) {
  nlohmann::json j = {{"relative_error", m.relative_error}};
  if (m.nmi) j["nmi"] = *m.nmi;
  if (m.acc) j["acc"] = *m.acc;
  return j;
}

}  // namespace gnmf
