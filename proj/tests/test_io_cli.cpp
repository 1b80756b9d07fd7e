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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "json.hpp"

#include "dynvar/cli.hpp"
#include "dynvar/generators.hpp"
#include "dynvar/io.hpp"

using namespace dynvar;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::string fixture(const char* name) {
  return std::string(DYNVAR_FIXTURE_DIR) + "/" + name;
}

std::string temp_path(const char* stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

Matrix pauli_z_momentum() {
  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = Complex(0.0, 1.0);
  p(1, 1) = Complex(0.0, -1.0);
  return p;
}

GeneratorFile dephasing_file() {
  GeneratorFile f;
  f.n = 2;
  f.omega = Matrix::Identity(2, 2) / 2.0;
  Matrix l = Matrix::Zero(4, 4);
  l(1, 1) = -4.0;
  l(2, 2) = -4.0;
  f.l = l;
  GroundTruth truth;
  truth.momenta = {pauli_z_momentum()};
  truth.v = Matrix::Zero(2, 2);
  f.truth = truth;
  return f;
}

}  // namespace

TEST_CASE("serialization round trips byte for byte") {
  const GeneratorFile f = dephasing_file();
  const std::string s1 = serialize_generator(f);
  const GeneratorFile g = parse_generator(s1);
  CHECK(g.n == 2);
  CHECK((g.omega - f.omega).norm() < 1e-15);
  CHECK((g.l - f.l).norm() < 1e-15);
  REQUIRE(g.truth.has_value());
  REQUIRE(g.truth->momenta.size() == 1);
  CHECK((g.truth->momenta[0] - pauli_z_momentum()).norm() < 1e-15);
  CHECK(g.truth->v.norm() == 0.0);
  CHECK(serialize_generator(g) == s1);
  CHECK(s1.back() == '\n');
  CHECK(contains(s1, "column-major"));

  CertificateFile cert;
  cert.n = 2;
  Rng rng(3);
  cert.u = rng.gaussian_matrix(2);
  const std::string c1 = serialize_certificate(cert);
  const CertificateFile cback = parse_certificate(c1);
  CHECK((cback.u - cert.u).norm() < 1e-15);
  CHECK(serialize_certificate(cback) == c1);
}

TEST_CASE("fixture contents are pinned") {
  const GeneratorFile deph = load_generator(fixture("dephasing_n2.json"));
  CHECK(deph.n == 2);
  CHECK((deph.omega - Matrix::Identity(2, 2) / 2.0).norm() < 1e-15);
  Matrix dl = Matrix::Zero(4, 4);
  dl(1, 1) = -4.0;
  dl(2, 2) = -4.0;
  CHECK((deph.l - dl).norm() < 1e-13);
  REQUIRE(deph.truth.has_value());
  REQUIRE(deph.truth->momenta.size() == 1);
  CHECK((deph.truth->momenta[0] - pauli_z_momentum()).norm() < 1e-13);
  CHECK(deph.truth->v.norm() < 1e-15);

  const GeneratorFile pot = load_generator(fixture("pure_potential_n2.json"));
  Matrix pl = Matrix::Zero(4, 4);
  pl(1, 1) = Complex(0.0, -2.0);
  pl(2, 2) = Complex(0.0, 2.0);
  CHECK((pot.l - pl).norm() < 1e-13);
  REQUIRE(pot.truth.has_value());
  CHECK(pot.truth->momenta.empty());
  CHECK((pot.truth->v - pauli_z_momentum()).norm() < 1e-13);

  const GeneratorFile fr = load_generator(fixture("free_laplacian_n3.json"));
  CHECK(fr.n == 3);
  CHECK((fr.omega - Matrix::Identity(3, 3) / 3.0).norm() < 1e-15);
  REQUIRE(fr.truth.has_value());
  REQUIRE(fr.truth->momenta.size() == 2);
  CHECK(fr.truth->v.norm() < 1e-15);
  const StateAlgebra sa3(3, fr.omega);
  MomentumSpace ms{3, fr.truth->momenta};
  CHECK_NOTHROW(validate_momentum_space(sa3, ms));
  CHECK((laplacian(sa3, ms) - Superoperator(3, fr.l)).norm() < 1e-12);

  const GeneratorFile ex = load_generator(fixture("example614_n3.json"));
  CHECK_FALSE(ex.truth.has_value());
  Matrix w = Matrix::Zero(3, 3);
  for (int k = 0; k < 3; ++k) w((k + 1) % 3, k) = 1.0;
  CHECK((ex.l - (kron(w, w) - Matrix::Identity(9, 9))).norm() < 1e-13);
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_AS(parse_generator("nonsense"), ParseError);
  CHECK_THROWS_AS(parse_generator("{}"), ParseError);
  CHECK_THROWS_AS(parse_generator("[1, 2]"), ParseError);
  CHECK_THROWS_AS(parse_generator(R"({"n": 0, "omega": [], "l": []})"), ParseError);
  CHECK_THROWS_AS(parse_generator(R"({"n": 17, "omega": [], "l": []})"), ParseError);
  // scalar entries must be [re, im] pairs
  CHECK_THROWS_AS(parse_generator(R"({"n": 1, "omega": [[1.0]], "l": [[[0.0, 0.0]]]})"),
                  ParseError);
  CHECK_NOTHROW(parse_generator(R"({"n": 1, "omega": [[[1.0, 0.0]]], "l": [[[0.0, 0.0]]]})"));
  // shape mismatches
  const std::string good = serialize_generator(dephasing_file());
  std::string resized = good;
  resized.replace(resized.find("\"n\": 2"), 6, "\"n\": 3");
  CHECK_THROWS_AS(parse_generator(resized), ParseError);
  CHECK_THROWS_AS(load_generator("/nonexistent/path.json"), ParseError);
}

TEST_CASE("vectorization convention is enforced") {
  std::string text = serialize_generator(dephasing_file());
  const auto at = text.find("column-major");
  REQUIRE(at != std::string::npos);
  text.replace(at, std::string("column-major").size(), "row-major");
  CHECK_THROWS_AS(parse_generator(text), ConventionMismatch);
}

TEST_CASE("cli analyze prints the frozen profile") {
  const CliRun r = run({"analyze", fixture("dephasing_n2.json")});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "domain: ok"));
  CHECK(contains(r.out, "elliptic: yes"));
  CHECK(contains(r.out, "exact: yes"));
  CHECK(contains(r.out, "invariant: m=1, |v|=0"));
  CHECK(contains(r.out, "mixing: yes (spectral gap 4, peripheral 2)"));
  CHECK(contains(r.out, "ground truth: span defect"));

  const CliRun e = run({"analyze", fixture("example614_n3.json")});
  CHECK(e.code == 0);
  CHECK(contains(e.out, "elliptic: yes"));
  CHECK(contains(e.out, "exact: no"));
  CHECK(contains(e.out, "invariant: not defined"));
  CHECK(contains(e.out, "mixing: yes (spectral gap 1.5, peripheral 3)"));

  const CliRun p = run({"analyze", fixture("pure_potential_n2.json")});
  CHECK(p.code == 0);
  CHECK(contains(p.out, "invariant: m=0"));
  CHECK(contains(p.out, "mixing: no (spectral gap 0, peripheral 4)"));
}

TEST_CASE("cli analyze json is machine readable") {
  const CliRun r = run({"analyze", fixture("dephasing_n2.json"), "--json"});
  REQUIRE(r.code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["domain"]["ok"] == true);
  CHECK(j["elliptic"]["verdict"] == true);
  CHECK(j["exactness"]["verdict"] == true);
  CHECK(j["invariant"]["m"] == 1);
  CHECK(j["mixing"]["mixing"] == true);
  CHECK(j["mixing"]["peripheral_count"] == 2);
  CHECK(j["ground_truth"]["declared_valid"] == true);
  CHECK(j["ground_truth"]["span_defect"].get<double>() < 1e-8);
  CHECK(j["ground_truth"]["v_defect"].get<double>() < 1e-8);
  CHECK(j["ground_truth"]["rebuild_defect"].get<double>() < 1e-8);
}

TEST_CASE("cli analyze exit codes") {
  const std::string bad_path = temp_path("dynvar_bad_domain.json");
  GeneratorFile f;
  f.n = 2;
  f.omega = Matrix::Identity(2, 2) / 2.0;
  Rng rng(5);
  f.l = left_mult(rng.gaussian_matrix(2)).mat();
  save_generator(bad_path, f);
  const CliRun r = run({"analyze", bad_path});
  CHECK(r.code == 2);
  CHECK(contains(r.out, "domain: violated"));
  std::remove(bad_path.c_str());

  const CliRun missing = run({"analyze", "/nonexistent/file.json"});
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "error:"));

  const CliRun usage = run({});
  CHECK(usage.code != 0);
}

TEST_CASE("cli random is deterministic and round trips") {
  const std::vector<std::string> args = {"random", "--n", "3",     "--omega", "diag:0.5,0.25,0.25",
                                         "--m",    "2", "--seed",  "9",       "--kind",
                                         "exact"};
  const CliRun a = run(args);
  const CliRun b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const GeneratorFile f = parse_generator(a.out);
  CHECK(f.n == 3);
  REQUIRE(f.truth.has_value());
  CHECK(f.truth->momenta.size() == 2);

  // --out writes the same bytes to disk
  const std::string out_path = temp_path("dynvar_random_roundtrip.json");
  const CliRun c = run({"random", "--n", "3", "--omega", "diag:0.5,0.25,0.25", "--m", "2",
                        "--seed", "9", "--kind", "exact", "--out", out_path});
  REQUIRE(c.code == 0);
  std::ifstream in(out_path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == a.out);

  // analyze recovers the declared data
  const CliRun an = run({"analyze", out_path, "--json"});
  REQUIRE(an.code == 0);
  const nlohmann::json j = nlohmann::json::parse(an.out);
  CHECK(j["exactness"]["verdict"] == true);
  CHECK(j["invariant"]["m"] == 2);
  CHECK(j["ground_truth"]["span_defect"].get<double>() < 1e-8);
  CHECK(j["ground_truth"]["v_defect"].get<double>() < 1e-8);
  CHECK(j["ground_truth"]["rebuild_defect"].get<double>() < 1e-8);
  std::remove(out_path.c_str());

  const CliRun el = run({"random", "--n", "2", "--kind", "elliptic", "--seed", "4"});
  CHECK(el.code == 0);
  const GeneratorFile ef = parse_generator(el.out);
  CHECK_FALSE(ef.truth.has_value());

  // the commutant bound surfaces as a gate failure
  const CliRun small =
      run({"random", "--n", "2", "--omega", "diag:0.75,0.25", "--m", "2", "--kind", "exact"});
  CHECK(small.code == 2);
  CHECK(contains(small.err, "error:"));
}

TEST_CASE("cli compare search and certificate paths") {
  const std::string path_a = temp_path("dynvar_cmp_a.json");
  const std::string path_b = temp_path("dynvar_cmp_b.json");
  const std::string path_m1 = temp_path("dynvar_cmp_m1.json");

  const StateAlgebra sa(2, Matrix::Identity(2, 2) / 2.0);
  const SampledGenerator g = sample_generator(sa, SampleKind::Exact, 2, 4);
  save_generator(path_a, GeneratorFile{2, sa.omega(), g.l.mat(), std::nullopt});

  Rng rng(31);
  const Matrix u0 = Matrix(0.5 * rng.skew_matrix(2)).exp();
  const Superoperator moved = sandwich(u0, u0.adjoint()).compose(g.l).compose(
      sandwich(u0.adjoint(), u0));
  save_generator(path_b, GeneratorFile{2, sa.omega(), moved.mat(), std::nullopt});

  const SampledGenerator h = sample_generator(sa, SampleKind::Exact, 1, 4);
  save_generator(path_m1, GeneratorFile{2, sa.omega(), h.l.mat(), std::nullopt});

  const CliRun found = run({"compare", path_a, path_b});
  CHECK(found.code == 0);
  CHECK(contains(found.out, "conjugate"));
  CHECK(contains(found.out, "\"u\""));

  const CliRun neq = run({"compare", path_a, path_m1});
  CHECK(neq.code == 4);
  CHECK(contains(neq.out, "not conjugate (fingerprints differ)"));

  // certificate validation: the identity certifies a file against itself
  const std::string cert_path = temp_path("dynvar_cert_id.json");
  CertificateFile cert;
  cert.n = 2;
  cert.u = Matrix::Identity(2, 2);
  std::ofstream(cert_path) << serialize_certificate(cert);
  const CliRun ok = run({"compare", path_a, path_a, "--certificate", cert_path});
  CHECK(ok.code == 0);
  CHECK(contains(ok.out, "certificate: accepted"));

  const CliRun rej = run({"compare", path_a, path_b, "--certificate", cert_path});
  CHECK(rej.code == 5);
  CHECK(contains(rej.out, "certificate: rejected"));

  // incompatible algebras are a usage-level failure
  const CliRun mix = run({"compare", path_a, fixture("free_laplacian_n3.json")});
  CHECK(mix.code == 1);
  CHECK(contains(mix.err, "different state algebras"));

  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
  std::remove(path_m1.c_str());
  std::remove(cert_path.c_str());
}

TEST_CASE("cli evolve reports the markov profile") {
  const CliRun r = run({"evolve", fixture("dephasing_n2.json"), "--t", "0.1,0.7,1.3"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "t=0.1"));
  CHECK(contains(r.out, "markov: ok"));
  CHECK(contains(r.out, "mixing: yes (spectral gap 4, peripheral 2)"));

  const CliRun j = run({"evolve", fixture("dephasing_n2.json"), "--t", "0.5", "--json"});
  REQUIRE(j.code == 0);
  const nlohmann::json doc = nlohmann::json::parse(j.out);
  CHECK(doc["ok"] == true);
  CHECK(doc["mixing"]["mixing"] == true);
  CHECK(doc["slices"].size() == 1);

  const CliRun neg = run({"evolve", fixture("dephasing_n2.json"), "--t", "-0.5"});
  CHECK(neg.code == 2);
  const CliRun garbled = run({"evolve", fixture("dephasing_n2.json"), "--t", "abc"});
  CHECK(garbled.code == 1);
}
