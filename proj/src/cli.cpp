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

#include "dynvar/cli.hpp"

#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dynvar/invariants.hpp"
#include "dynvar/io.hpp"
#include "dynvar/semigroup.hpp"

namespace dynvar {
namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix omega_from_spec(int n, const std::string& spec) {
  if (spec == "tracial")
    return Matrix::Identity(n, n) / static_cast<double>(n);
  const std::string prefix = "diag:";
  if (spec.rfind(prefix, 0) != 0)
    throw ParseError("omega must be 'tracial' or 'diag:w1,w2,...'");
  std::vector<double> w;
  std::stringstream ss(spec.substr(prefix.size()));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      w.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParseError("bad weight '" + item + "' in omega spec");
    }
  }
  if (static_cast<int>(w.size()) != n)
    throw ParseError("omega spec needs exactly n weights");
  Matrix om = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) om(k, k) = w[static_cast<size_t>(k)];
  return om;
}

std::vector<double> times_from_spec(const std::string& spec) {
  std::vector<double> ts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      ts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParseError("bad time '" + item + "'");
    }
  }
  if (ts.empty()) throw ParseError("at least one time is required");
  for (double t : ts)
    if (t < 0.0) throw NegativeTime("times must be nonnegative");
  return ts;
}

json mixing_json(const MixingReport& mx) {
  return json{{"mixing", mx.limit_exists},
              {"spectral_gap", mx.spectral_gap},
              {"peripheral_count", mx.peripheral_count}};
}

int do_analyze(const std::string& path, bool as_json, std::ostream& out) {
  const GeneratorFile f = load_generator(path);
  const StateAlgebra sa(f.n, f.omega);
  const Superoperator l(f.n, f.l);

  json j;
  j["command"] = "analyze";
  j["n"] = f.n;

  const ValidationReport rep = in_domain(sa, l);
  j["domain"] = json{{"ok", rep.ok()},
                     {"unital", rep.unital_residual},
                     {"invariance", rep.invariance_residual},
                     {"symmetry", rep.symmetry_residual}};
  if (!rep.ok()) {
    if (as_json) {
      out << j.dump(2) << "\n";
    } else {
      out << "domain: violated (unital " << rep.unital_residual << ", invariance "
          << rep.invariance_residual << ", symmetry " << rep.symmetry_residual << ")\n";
    }
    return 2;
  }

  const EllipticityResult er = is_elliptic_form(sa, l);
  const ChoiResult cr = is_elliptic_ccp(sa, l);
  j["elliptic"] = json{{"verdict", er.elliptic},
                       {"gram_min_eig", er.min_eig},
                       {"choi_min_eig", cr.min_eig}};
  if (er.elliptic != cr.elliptic) {
    j["error"] = "ellipticity oracles disagree";
    out << (as_json ? j.dump(2) + "\n"
                    : "error: ellipticity oracles disagree (gram " +
                          std::to_string(er.min_eig) + ", choi " + std::to_string(cr.min_eig) +
                          ")\n");
    return 3;
  }

  const ExactnessReport ex = exactness_report(sa, l);
  j["exactness"] = json{{"verdict", ex.exact},
                        {"coboundary", ex.residual_coboundary},
                        {"potential", ex.residual_potential},
                        {"derivation", ex.residual_derivation},
                        {"kms", ex.residual_kms}};

  j["invariant"] = nullptr;
  std::optional<DynamicalInvariant> inv;
  if (er.elliptic && ex.exact) {
    inv = extract_invariant(sa, l);
    const Fingerprint fp = fingerprint(sa, *inv);
    json mom = json::array();
    for (const Matrix& p : inv->p.basis) mom.push_back(matrix_json(p));
    j["invariant"] = json{{"m", inv->p.size()},
                          {"momenta", std::move(mom)},
                          {"v", matrix_json(inv->v)},
                          {"fingerprint", json{{"spec_v", fp.spec_v},
                                               {"spec_q", fp.spec_q},
                                               {"spec_c", fp.spec_c},
                                               {"spec_state", fp.spec_state}}},
                          {"source_hash", inv->source_hash}};
  }

  const MixingReport mx = mixing_analysis(sa, l);
  j["mixing"] = mixing_json(mx);

  j["ground_truth"] = nullptr;
  if (f.truth && inv) {
    json g;
    try {
      MomentumSpace declared{f.n, f.truth->momenta};
      validate_momentum_space(sa, declared);
      g["declared_valid"] = true;
      g["span_defect"] = fnorm(Matrix(momenta_span_projector(f.n, f.truth->momenta) -
                                      momenta_span_projector(f.n, inv->p.basis)));
      g["v_defect"] = fnorm(Matrix(f.truth->v - inv->v));
      const Superoperator rebuilt = laplacian(sa, declared) + ad(f.truth->v);
      g["rebuild_defect"] = (rebuilt - l).norm() / std::max(1.0, l.norm());
    } catch (const Error& e) {
      g["declared_valid"] = false;
      g["reason"] = e.what();
    }
    j["ground_truth"] = std::move(g);
  }

  if (as_json) {
    out << j.dump(2) << "\n";
  } else {
    out << "domain: ok (unital " << rep.unital_residual << ", invariance "
        << rep.invariance_residual << ", symmetry " << rep.symmetry_residual << ")\n";
    out << "elliptic: " << (er.elliptic ? "yes" : "no") << " (gram min eig " << er.min_eig
        << ", choi min eig " << cr.min_eig << ")\n";
    out << "exact: " << (ex.exact ? "yes" : "no") << " (coboundary " << ex.residual_coboundary
        << ", potential " << ex.residual_potential << ", derivation " << ex.residual_derivation
        << ", kms " << ex.residual_kms << ")\n";
    if (inv) {
      out << "invariant: m=" << inv->p.size() << ", |v|=" << fnorm(inv->v) << "\n";
    } else {
      out << "invariant: not defined\n";
    }
    out << "mixing: " << (mx.limit_exists ? "yes" : "no") << " (spectral gap "
        << mx.spectral_gap << ", peripheral " << mx.peripheral_count << ")\n";
    if (f.truth && inv && j["ground_truth"].contains("span_defect")) {
      out << "ground truth: span defect " << j["ground_truth"]["span_defect"].get<double>()
          << ", v defect " << j["ground_truth"]["v_defect"].get<double>() << ", rebuild defect "
          << j["ground_truth"]["rebuild_defect"].get<double>() << "\n";
    }
  }
  return 0;
}

int do_random(int n, const std::string& omega_spec, int m, uint64_t seed,
              const std::string& kind, const std::string& out_path, std::ostream& out) {
  const Matrix om = omega_from_spec(n, omega_spec);
  const StateAlgebra sa(n, om);
  SampleKind sk = SampleKind::Exact;
  if (kind == "elliptic")
    sk = SampleKind::EllipticGeneric;
  else if (kind == "nonexact")
    sk = SampleKind::NonexactAuto;
  const SampledGenerator sample = sample_generator(sa, sk, m, seed);

  GeneratorFile f;
  f.n = n;
  f.omega = om;
  f.l = sample.l.mat();
  if (sample.momenta && sample.v) {
    GroundTruth t;
    t.momenta = sample.momenta->basis;
    t.v = *sample.v;
    f.truth = std::move(t);
  }
  if (out_path.empty())
    out << serialize_generator(f);
  else
    save_generator(out_path, f);
  return 0;
}

int do_evolve(const std::string& path, const std::string& times_spec, bool as_json,
              std::ostream& out) {
  const GeneratorFile f = load_generator(path);
  const StateAlgebra sa(f.n, f.omega);
  const Superoperator l(f.n, f.l);
  const std::vector<double> ts = times_from_spec(times_spec);

  const ValidationReport rep = in_domain(sa, l);
  if (!rep.ok()) throw DomainViolation("generator outside the admissible domain");

  const MarkovReport mk = markov_checks(sa, l, ts);
  const MixingReport mx = mixing_analysis(sa, l);

  if (as_json) {
    json slices = json::array();
    for (const MarkovTimeSlice& s : mk.slices)
      slices.push_back(json{{"t", s.t},
                            {"unital", s.unital_defect},
                            {"invariance", s.invariance_defect},
                            {"choi_min_eig", s.choi_min_eig}});
    json j{{"command", "evolve"},
           {"slices", std::move(slices)},
           {"semigroup_defect", mk.semigroup_defect},
           {"ok", mk.ok},
           {"mixing", mixing_json(mx)}};
    out << j.dump(2) << "\n";
  } else {
    for (const MarkovTimeSlice& s : mk.slices)
      out << "t=" << s.t << ": unital " << s.unital_defect << ", invariance "
          << s.invariance_defect << ", choi min eig " << s.choi_min_eig << "\n";
    out << "semigroup defect: " << mk.semigroup_defect << "\n";
    out << "markov: " << (mk.ok ? "ok" : "violated") << "\n";
    out << "mixing: " << (mx.limit_exists ? "yes" : "no") << " (spectral gap "
        << mx.spectral_gap << ", peripheral " << mx.peripheral_count << ")\n";
  }
  return 0;
}

int do_compare(const std::string& path_a, const std::string& path_b,
               const std::string& cert_path, int budget, uint64_t seed, bool as_json,
               std::ostream& out) {
  const GeneratorFile fa = load_generator(path_a);
  const GeneratorFile fb = load_generator(path_b);
  if (fa.n != fb.n || fnorm(Matrix(fa.omega - fb.omega)) > 1e-12)
    throw IncompatibleStateAlgebras("the two files describe different state algebras");
  const StateAlgebra sa(fa.n, fa.omega);
  const DynamicalInvariant ia = extract_invariant(sa, Superoperator(fa.n, fa.l));
  const DynamicalInvariant ib = extract_invariant(sa, Superoperator(fb.n, fb.l));

  json j;
  j["command"] = "compare";

  if (!cert_path.empty()) {
    const CertificateFile cert = load_certificate(cert_path);
    if (cert.n != fa.n) throw ParseError("certificate dimension mismatch");
    const ConjugacyReport rep = check_conjugacy(sa, ia, ib, cert.u);
    j["verdict"] = rep.ok ? "conjugate" : "certificate_rejected";
    j["report"] = json{{"state_defect", rep.state_defect},
                       {"span_defect", rep.span_defect},
                       {"fit_defect", rep.fit_defect},
                       {"gram_defect", rep.gram_defect},
                       {"potential_defect", rep.potential_defect}};
    if (as_json)
      out << j.dump(2) << "\n";
    else
      out << "certificate: " << (rep.ok ? "accepted" : "rejected") << " (span "
          << rep.span_defect << ", fit " << rep.fit_defect << ", gram " << rep.gram_defect
          << ", potential " << rep.potential_defect << ")\n";
    return rep.ok ? 0 : 5;
  }

  const SearchResult sr = search_conjugacy(sa, ia, ib, budget, seed);
  j["restarts"] = sr.restarts_used;
  j["best_objective"] = sr.best_objective;
  switch (sr.verdict) {
    case ConjugacyVerdict::Conjugate: {
      j["verdict"] = "conjugate";
      j["u"] = matrix_json(*sr.u);
      out << (as_json ? j.dump(2) + "\n" : "conjugate\n");
      if (!as_json) {
        CertificateFile cert{fa.n, *sr.u};
        out << serialize_certificate(cert);
      }
      return 0;
    }
    case ConjugacyVerdict::NotConjugate:
      j["verdict"] = "not_conjugate";
      out << (as_json ? j.dump(2) + "\n" : "not conjugate (fingerprints differ)\n");
      return 4;
    case ConjugacyVerdict::Inconclusive:
    default:
      j["verdict"] = "inconclusive";
      out << (as_json ? j.dump(2) + "\n" : "inconclusive\n");
      return 5;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dynamical invariants of Markov semigroups on matrix algebras"};
  app.name("dynvar");
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "classify a generator file");
  std::string analyze_file;
  bool analyze_json = false;
  analyze->add_option("file", analyze_file, "generator file")->required();
  analyze->add_flag("--json", analyze_json, "machine-readable output");

  auto* random = app.add_subcommand("random", "sample a generator");
  int rnd_n = 2, rnd_m = 2;
  uint64_t rnd_seed = 1;
  std::string rnd_omega = "tracial", rnd_kind = "exact", rnd_out;
  random->add_option("--n", rnd_n, "algebra dimension");
  random->add_option("--omega", rnd_omega, "state: tracial or diag:w1,w2,...");
  random->add_option("--m", rnd_m, "number of momenta");
  random->add_option("--seed", rnd_seed, "random seed");
  random->add_option("--kind", rnd_kind, "exact, elliptic or nonexact")
      ->check(CLI::IsMember({"exact", "elliptic", "nonexact"}));
  random->add_option("--out", rnd_out, "output path (stdout when omitted)");

  auto* compare = app.add_subcommand("compare", "decide conjugacy of two generators");
  std::string cmp_a, cmp_b, cmp_cert;
  int cmp_budget = 12;
  uint64_t cmp_seed = 1;
  bool cmp_json = false;
  compare->add_option("a", cmp_a, "first generator file")->required();
  compare->add_option("b", cmp_b, "second generator file")->required();
  compare->add_option("--certificate", cmp_cert, "unitary certificate to validate");
  compare->add_option("--search", cmp_budget, "search restarts");
  compare->add_option("--seed", cmp_seed, "search seed");
  compare->add_flag("--json", cmp_json, "machine-readable output");

  auto* evolve_cmd = app.add_subcommand("evolve", "check the semigroup at given times");
  std::string evo_file, evo_times;
  bool evo_json = false;
  evolve_cmd->add_option("file", evo_file, "generator file")->required();
  evolve_cmd->add_option("--t", evo_times, "comma-separated times")->required();
  evolve_cmd->add_flag("--json", evo_json, "machine-readable output");

  std::vector<const char*> argv;
  argv.push_back("dynvar");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*analyze) return do_analyze(analyze_file, analyze_json, out);
    if (*random) return do_random(rnd_n, rnd_omega, rnd_m, rnd_seed, rnd_kind, rnd_out, out);
    if (*compare)
      return do_compare(cmp_a, cmp_b, cmp_cert, cmp_budget, cmp_seed, cmp_json, out);
    if (*evolve_cmd) return do_evolve(evo_file, evo_times, evo_json, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConventionMismatch& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IncompatibleStateAlgebras& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InternalInconsistency& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const NotUnitary& e) {
    err << "error: " << e.what() << "\n";
    return 5;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dynvar
