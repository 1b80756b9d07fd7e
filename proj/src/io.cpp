// Copyright 2026 The dynvar authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dynvar/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dynvar {
namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                        const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw ParseError(what + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(what + ": expected " + std::to_string(cols) + " columns");
    for (Eigen::Index jc = 0; jc < cols; ++jc) {
      const json& cell = row[static_cast<size_t>(jc)];
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number())
        throw ParseError(what + ": entries must be [re, im] pairs");
      m(i, jc) = Complex(cell[0].get<double>(), cell[1].get<double>());
    }
  }
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid json: ") + e.what());
  }
}

}  // namespace

GeneratorFile parse_generator(const std::string& text) {
  const json j = parse_text(text);
  if (!j.is_object()) throw ParseError("top level must be an object");
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw ParseError("missing integer field n");
  const int n = j["n"].get<int>();
  if (n < 1 || n > 16) throw ParseError("n out of range");
  if (j.contains("vec_convention")) {
    if (!j["vec_convention"].is_string() || j["vec_convention"].get<std::string>() != "column-major")
      throw ConventionMismatch("file declares an unsupported vectorization convention");
  }
  if (!j.contains("omega")) throw ParseError("missing field omega");
  if (!j.contains("l")) throw ParseError("missing field l");

  GeneratorFile f;
  f.n = n;
  f.omega = matrix_from_json(j["omega"], n, n, "omega");
  f.l = matrix_from_json(j["l"], n * n, n * n, "l");
  if (j.contains("ground_truth")) {
    const json& g = j["ground_truth"];
    if (!g.is_object() || !g.contains("momenta") || !g.contains("v") || !g["momenta"].is_array())
      throw ParseError("ground_truth must hold momenta and v");
    GroundTruth t;
    for (const json& p : g["momenta"]) t.momenta.push_back(matrix_from_json(p, n, n, "momentum"));
    t.v = matrix_from_json(g["v"], n, n, "v");
    f.truth = std::move(t);
  }
  return f;
}

GeneratorFile load_generator(const std::string& path) {
  return parse_generator(read_file(path));
}

std::string serialize_generator(const GeneratorFile& f) {
  json j;
  j["n"] = f.n;
  j["vec_convention"] = "column-major";
  j["omega"] = matrix_to_json(f.omega);
  j["l"] = matrix_to_json(f.l);
  if (f.truth) {
    json g;
    json ps = json::array();
    for (const Matrix& p : f.truth->momenta) ps.push_back(matrix_to_json(p));
    g["momenta"] = std::move(ps);
    g["v"] = matrix_to_json(f.truth->v);
    j["ground_truth"] = std::move(g);
  }
  return j.dump(2) + "\n";
}

void save_generator(const std::string& path, const GeneratorFile& f) {
  write_file(path, serialize_generator(f));
}

CertificateFile parse_certificate(const std::string& text) {
  const json j = parse_text(text);
  if (!j.is_object() || !j.contains("n") || !j["n"].is_number_integer() || !j.contains("u"))
    throw ParseError("certificate must hold n and u");
  CertificateFile c;
  c.n = j["n"].get<int>();
  if (c.n < 1 || c.n > 16) throw ParseError("n out of range");
  c.u = matrix_from_json(j["u"], c.n, c.n, "u");
  return c;
}

CertificateFile load_certificate(const std::string& path) {
  return parse_certificate(read_file(path));
}

std::string serialize_certificate(const CertificateFile& f) {
  json j;
  j["n"] = f.n;
  j["u"] = matrix_to_json(f.u);
  return j.dump(2) + "\n";
}

}  // namespace dynvar
