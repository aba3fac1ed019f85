#pragma once

// Counts files, JSON emission and atomic file writes.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "gpt/synth.hpp"

namespace gpt::io {

using nlohmann::json;

// Format:
//   m,n
//   <m>,<n>
//   i,j,n0,n1
//   <one row per measured cell, j >= 1>
// The unit column j = 0 is implicit and rejected if present.
synth::CountTable read_counts_csv(const std::filesystem::path& path);
synth::CountTable parse_counts_csv(const std::string& text);
std::string format_counts_csv(const synth::CountTable& counts);

// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Pretty JSON with every float printed as %.17g. Arrays of scalars stay on one
// line. Throws NumericalError on a non-finite number.
std::string dump_json(const json& j);

json to_json(const MatrixXd& m);
json to_json(const VectorXd& v);
MatrixXd matrix_from_json(const json& j);

}  // namespace gpt::io
