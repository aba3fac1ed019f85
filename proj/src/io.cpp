#include "gpt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace gpt::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t' && c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::int64_t parse_int(const std::string& s, int line_no) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw ValidationError("counts file line " + std::to_string(line_no) + ": '" + s + "' is not an integer");
  return v;
}

void expect_header(const std::string& line, const std::vector<std::string>& names, int line_no) {
  if (split_fields(line) != names) {
    std::string want;
    for (std::size_t i = 0; i < names.size(); ++i) want += (i ? "," : "") + names[i];
    throw ValidationError("counts file line " + std::to_string(line_no) + ": expected header '" + want + "'");
  }
}

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericalError("non-finite number in JSON output");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

bool is_scalar(const json& j) { return !j.is_array() && !j.is_object(); }

void write_json(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        write_json(it.value(), out, indent + 2);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), is_scalar);
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& el : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        write_json(el, out, indent + 2);
      }
      out += flat ? "]" : "\n" + close_pad + "]";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

synth::CountTable parse_counts_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ValidationError("counts file is empty");
  expect_header(line, {"m", "n"}, line_no);
  if (!next_line()) throw ValidationError("counts file: missing m,n values");
  auto dims = split_fields(line);
  if (dims.size() != 2) throw ValidationError("counts file line " + std::to_string(line_no) + ": expected m,n");
  synth::CountTable t;
  t.m = parse_int(dims[0], line_no);
  t.n = parse_int(dims[1], line_no);
  if (t.m < 1 || t.n < 2) throw ValidationError("counts file: need m >= 1 and n >= 2");
  if (!next_line()) throw ValidationError("counts file: missing cell header");
  expect_header(line, {"i", "j", "n0", "n1"}, line_no);

  std::set<std::pair<Index, Index>> seen;
  while (next_line()) {
    auto f = split_fields(line);
    if (f.size() != 4) throw ValidationError("counts file line " + std::to_string(line_no) + ": expected 4 fields");
    synth::CountCell c{parse_int(f[0], line_no), parse_int(f[1], line_no), parse_int(f[2], line_no),
                       parse_int(f[3], line_no)};
    const std::string where = "counts file line " + std::to_string(line_no) + ": ";
    if (c.j == 0) throw ValidationError(where + "column 0 is the implicit unit measurement and must not appear");
    if (c.i < 0 || c.i >= t.m || c.j < 0 || c.j >= t.n) throw ValidationError(where + "cell index out of range");
    if (c.n0 < 0 || c.n1 < 0) throw ValidationError(where + "negative count");
    if (c.n0 + c.n1 == 0) throw ValidationError(where + "cell with zero total counts");
    if (!seen.insert({c.i, c.j}).second) throw ValidationError(where + "duplicate cell");
    t.cells.push_back(c);
  }
  if (t.cells.empty()) throw ValidationError("counts file has no cells");
  return t;
}

synth::CountTable read_counts_csv(const std::filesystem::path& path) { return parse_counts_csv(read_file(path)); }

std::string format_counts_csv(const synth::CountTable& counts) {
  std::string out = "m,n\n" + std::to_string(counts.m) + "," + std::to_string(counts.n) + "\ni,j,n0,n1\n";
  for (const auto& c : counts.cells)
    out += std::to_string(c.i) + "," + std::to_string(c.j) + "," + std::to_string(c.n0) + "," +
           std::to_string(c.n1) + "\n";
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const json& j) {
  std::string out;
  write_json(j, out, 0);
  out += "\n";
  return out;
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of rows");
  if (j.empty()) return MatrixXd(0, 0);
  const auto cols = static_cast<Index>(j[0].size());
  MatrixXd m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ValidationError("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace gpt::io
