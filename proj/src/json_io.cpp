#include "qsc/json_io.hpp"

#include <fstream>
#include <sstream>

namespace qsc::io {

json to_json(const Layout& layout) {
  json a = json::array();
  for (const auto& f : layout.factors()) a.push_back({{"label", f.label}, {"dim", f.dim}});
  return a;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

json to_json(const DensityMatrix& rho) {
  return {{"factors", to_json(rho.layout())}, {"matrix", to_json(rho.matrix())}};
}

json to_json(const PureState& psi) {
  return {{"factors", to_json(psi.layout())}, {"vector", to_json(psi.vector())}};
}

json to_json(const Channel& ch) {
  return {{"input_factors", to_json(ch.input())},
          {"output_factors", to_json(ch.output())},
          {"env_factors", to_json(ch.env())},
          {"isometry", to_json(ch.isometry())}};
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("field '" + where + "': " + what);
}

const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(name);
  if (it == j.end()) fail(where.empty() ? name : where + "." + name, "missing");
  return *it;
}

cplx complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail(where, "expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

Layout layout_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of factors");
  std::vector<Factor> f;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string w = where + "[" + std::to_string(k) + "]";
    const auto& label = field(j[k], "label", w);
    const auto& dim = field(j[k], "dim", w);
    if (!label.is_string()) fail(w + ".label", "expected a string");
    if (!dim.is_number_integer() || dim.get<int>() < 1) fail(w + ".dim", "expected a positive integer");
    f.push_back({label.get<std::string>(), dim.get<int>()});
  }
  try {
    return Layout(std::move(f));
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    const std::string w = where + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(w, "ragged or non-array row");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = complex_from_json(row[static_cast<std::size_t>(c)], w + "[" + std::to_string(c) + "]");
  }
  return m;
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

DensityMatrix density_from_json(const json& j) {
  Layout layout = layout_from_json(field(j, "factors", ""));
  Matrix m = matrix_from_json(field(j, "matrix", ""));
  if (m.rows() != layout.total_dim() || m.cols() != layout.total_dim())
    fail("matrix", "shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       " does not match factor dimensions " + to_string(layout));
  return DensityMatrix(std::move(layout), std::move(m));
}

PureState pure_from_json(const json& j) {
  Layout layout = layout_from_json(field(j, "factors", ""));
  Vector v = vector_from_json(field(j, "vector", ""));
  if (v.size() != layout.total_dim())
    fail("vector", "length does not match factor dimensions " + to_string(layout));
  return PureState(std::move(layout), std::move(v));
}

Channel channel_from_json(const json& j) {
  return Channel(layout_from_json(field(j, "input_factors", ""), "input_factors"),
                 layout_from_json(field(j, "output_factors", ""), "output_factors"),
                 layout_from_json(field(j, "env_factors", ""), "env_factors"),
                 matrix_from_json(field(j, "isometry", ""), "isometry"));
}

json parse(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < pos; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": malformed JSON");
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(1) << "\n";
}

DensityMatrix load_state(const std::string& path) {
  const json j = read_file(path);
  try {
    if (j.is_object() && j.contains("vector")) return pure_from_json(j).density();
    return density_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace qsc::io
