#pragma once

// JSON wire format:
//   {"factors":[{"label":"A","dim":2},...],"matrix":[[[re,im],...],...]}
// Matrices are row-major nested arrays of [re, im] pairs; pure states use
// "vector":[[re,im],...]. Doubles are written with round-trip precision.

#include <string>

#include <json.hpp>

#include "qsc/qcore.hpp"

namespace qsc::io {

using json = nlohmann::json;

json to_json(const Layout& layout);
json to_json(const Matrix& m);
json to_json(const Vector& v);
json to_json(const DensityMatrix& rho);
json to_json(const PureState& psi);
json to_json(const Channel& ch);

// Readers throw ValidationError naming the offending field.
Layout layout_from_json(const json& j, const std::string& where = "factors");
Matrix matrix_from_json(const json& j, const std::string& where = "matrix");
Vector vector_from_json(const json& j, const std::string& where = "vector");
DensityMatrix density_from_json(const json& j);
PureState pure_from_json(const json& j);
Channel channel_from_json(const json& j);

/// Parse text, reporting the line and column of syntax errors.
json parse(const std::string& text, const std::string& source = "<input>");
json read_file(const std::string& path);
void write_file(const std::string& path, const json& j);

/// Load a state file holding either "matrix" or "vector".
DensityMatrix load_state(const std::string& path);

}  // namespace qsc::io
