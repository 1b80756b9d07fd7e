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

// End-to-end acceptance checks. Each test case prints exactly one
// "criterion N (...): PASS|FAIL" line for the release checklist.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "json.hpp"

#include "dynvar/cli.hpp"
#include "dynvar/invariants.hpp"
#include "dynvar/io.hpp"
#include "dynvar/semigroup.hpp"

using namespace dynvar;

namespace {

StateAlgebra tracial(int n) { return StateAlgebra(n, Matrix::Identity(n, n) / double(n)); }

StateAlgebra diag_state(const std::vector<double>& w) {
  const int n = static_cast<int>(w.size());
  Matrix om = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) om(i, i) = w[i];
  return StateAlgebra(n, om);
}

std::string fixture(const char* name) {
  return std::string(DYNVAR_FIXTURE_DIR) + "/" + name;
}

std::string temp_path(const std::string& stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

bool guarded(const char* label, const std::function<bool()>& body, std::string* note) {
  try {
    return body();
  } catch (const std::exception& e) {
    *note = std::string(label) + " threw: " + e.what();
    return false;
  }
}

void verdict_line(int criterion, const char* label, bool ok) {
  std::printf("criterion %d (%s): %s\n", criterion, label, ok ? "PASS" : "FAIL");
  std::fflush(stdout);
}

OneForm random_form(const KermuBasis& basis, Rng& rng) {
  Vector c(basis.size());
  for (int r = 0; r < basis.size(); ++r) c(r) = rng.cgaussian();
  return kermu_combine(basis, c);
}

// Random centered skew matrices; at a tracial state every one of them is an
// admissible momentum.
std::vector<Matrix> random_tracial_momenta(int n, int m, Rng& rng) {
  std::vector<Matrix> out;
  for (int k = 0; k < m; ++k) {
    Matrix p = rng.skew_matrix(n);
    p -= (p.trace() / double(n)) * Matrix::Identity(n, n);
    out.push_back(p);
  }
  return out;
}

// Fits target momenta in the real span of a reference basis and reports the
// worst fit residual together with the orthogonality defect of the
// coefficient matrix.
struct OrthogonalRelation {
  double fit_residual = 0.0;
  double orth_defect = 0.0;
};

OrthogonalRelation orthogonal_relation(int n, const std::vector<Matrix>& ref,
                                       const std::vector<Matrix>& target) {
  const int m = static_cast<int>(ref.size());
  RealMatrix stacked(2 * n * n, m);
  for (int r = 0; r < m; ++r) {
    const Vector v = vec(ref[r]);
    stacked.col(r) << v.real(), v.imag();
  }
  const auto qr = stacked.colPivHouseholderQr();
  RealMatrix o(m, m);
  OrthogonalRelation rel;
  for (int s = 0; s < m; ++s) {
    const Vector t = vec(target[s]);
    RealVector rhs(2 * n * n);
    rhs << t.real(), t.imag();
    const RealVector c = qr.solve(rhs);
    o.col(s) = c;
    rel.fit_residual =
        std::max(rel.fit_residual, (stacked * c - rhs).norm() / std::max(1.0, rhs.norm()));
  }
  rel.orth_defect = (o.transpose() * o - RealMatrix::Identity(m, m)).norm();
  return rel;
}

struct CliRun {
  int code = 0;
  std::string out;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  return r;
}

}  // namespace

TEST_CASE("round-trip classification") {
  std::string note;
  const auto t0 = std::chrono::steady_clock::now();
  const bool ok = guarded("round trip", [&] {
    const std::vector<StateAlgebra> states = {tracial(2), tracial(3),
                                              diag_state({0.5, 0.25, 0.25})};
    int cfg = 0;
    for (const StateAlgebra& sa : states) {
      for (int m = 1; m <= 3; ++m) {
        if (m > commutant_skew_dim(sa)) continue;
        ++cfg;
        for (int k = 0; k < 50; ++k) {
          const std::uint64_t seed = 10000 + cfg * 100 + k;
          const SampledGenerator g = sample_generator(sa, SampleKind::Exact, m, seed);
          const DynamicalInvariant inv = extract_invariant(sa, g.l);

          const double v_norm = g.v->norm();
          if ((inv.v - *g.v).norm() > 1e-8 * std::max(v_norm, 1e-6)) {
            note = "potential mismatch at seed " + std::to_string(seed);
            return false;
          }
          const Matrix pt = momenta_span_projector(sa.dim(), g.momenta->basis);
          const Matrix pr = momenta_span_projector(sa.dim(), inv.p.basis);
          if (fnorm(Matrix(pt - pr)) > 1e-8) {
            note = "span mismatch at seed " + std::to_string(seed);
            return false;
          }
          const Superoperator rebuilt = make_generator(sa, inv.p, inv.v);
          if ((rebuilt - g.l).norm() > 1e-8 * g.l.norm()) {
            note = "reconstruction mismatch at seed " + std::to_string(seed);
            return false;
          }
        }
      }
    }
    if (cfg != 9) {
      note = "expected 9 configurations, saw " + std::to_string(cfg);
      return false;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (elapsed > 60.0) {
      note = "runtime " + std::to_string(elapsed) + " s exceeds budget";
      return false;
    }
    return true;
  }, &note);
  verdict_line(1, "round-trip classification", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("uniqueness up to orthogonal change of basis") {
  std::string note;
  const bool ok = guarded("orthogonal uniqueness", [&] {
    struct Probe {
      StateAlgebra sa;
      Superoperator l;
    };
    std::vector<Probe> probes;
    {
      const GeneratorFile f = load_generator(fixture("free_laplacian_n3.json"));
      probes.push_back({StateAlgebra(f.n, f.omega), Superoperator(f.n, f.l)});
    }
    {
      const GeneratorFile f = load_generator(fixture("dephasing_n2.json"));
      probes.push_back({StateAlgebra(f.n, f.omega), Superoperator(f.n, f.l)});
    }
    {
      const StateAlgebra sa = diag_state({0.5, 0.25, 0.25});
      probes.push_back({sa, sample_generator(sa, SampleKind::Exact, 2, 77).l});
    }
    for (const Probe& pb : probes) {
      const KmsMetric g = metric_from_generator(pb.sa, pb.l);
      const MomentumSpace base = decompose_metric(pb.sa, g);
      for (std::uint64_t perm : {3ull, 7ull, 19ull}) {
        DecomposeOptions opts;
        opts.perm_seed = perm;
        const MomentumSpace alt = decompose_metric(pb.sa, g, opts);
        if (alt.size() != base.size()) {
          note = "momentum count changed under permuted input";
          return false;
        }
        const OrthogonalRelation rel =
            orthogonal_relation(pb.sa.dim(), base.basis, alt.basis);
        if (rel.fit_residual > 1e-7 || rel.orth_defect > 1e-7) {
          note = "bases not orthogonally related (fit " +
                 std::to_string(rel.fit_residual) + ", orth " +
                 std::to_string(rel.orth_defect) + ")";
          return false;
        }
      }
    }
    return true;
  }, &note);
  verdict_line(2, "uniqueness up to orthogonal change", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("ellipticity oracle agreement") {
  std::string note;
  const bool ok = guarded("oracle agreement", [&] {
    for (int n : {2, 3, 4}) {
      std::vector<double> weights(n);
      for (int i = 0; i < n; ++i) weights[i] = 2.0 * (i + 1) / double(n * (n + 1));
      const StateAlgebra tr = tracial(n);
      const StateAlgebra sk = diag_state(weights);
      int negatives = 0;
      for (int k = 0; k < 100; ++k) {
        Superoperator l;
        bool expect_elliptic = true;
        switch (k % 4) {
          case 0:
            l = sample_generator(tr, SampleKind::Exact,
                                 1 + static_cast<int>(k / 4) % 3, 900 + k)
                    .l;
            break;
          case 1:
            l = sample_generator(sk, SampleKind::EllipticGeneric, 1 + k % 2, 900 + k).l;
            break;
          case 2: {
            Rng rng(1700 + k);
            MomentumSpace ms;
            ms.n = n;
            ms.basis = random_tracial_momenta(n, 1 + k % 2, rng);
            l = laplacian(tr, ms) * Complex(-1.0);
            expect_elliptic = false;
            ++negatives;
            break;
          }
          default:
            l = sample_generator(tr, SampleKind::EllipticGeneric, 2, 900 + k).l;
            break;
        }
        const StateAlgebra& home = (k % 4 == 1) ? sk : tr;
        const EllipticityResult form = is_elliptic_form(home, l);
        const ChoiResult ccp = is_elliptic_ccp(home, l);
        if (form.elliptic != ccp.elliptic) {
          note = "verdicts disagree at n=" + std::to_string(n) + " k=" + std::to_string(k);
          return false;
        }
        if (form.elliptic != expect_elliptic) {
          note = "unexpected verdict at n=" + std::to_string(n) + " k=" + std::to_string(k);
          return false;
        }
        if (!form.elliptic) {
          if (!form.witness.has_value()) {
            note = "missing witness at n=" + std::to_string(n) + " k=" + std::to_string(k);
            return false;
          }
          const Complex val =
              symbol_apply(home, l, wedge(star(*form.witness), *form.witness));
          if (!(val.real() > 0.0)) {
            note = "witness unsound at n=" + std::to_string(n) + " k=" + std::to_string(k);
            return false;
          }
        }
      }
      if (negatives < 20) {
        note = "not enough negative probes";
        return false;
      }
    }
    return true;
  }, &note);
  verdict_line(3, "ellipticity oracle agreement", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("four-way exactness agreement") {
  std::string note;
  const bool ok = guarded("exactness agreement", [&] {
    const std::vector<StateAlgebra> states = {tracial(2), tracial(3),
                                              diag_state({2.0 / 3.0, 1.0 / 3.0}),
                                              diag_state({0.5, 0.25, 0.25})};
    int exact_seen = 0, inexact_seen = 0;
    for (int k = 0; k < 200; ++k) {
      const StateAlgebra& sa = states[static_cast<size_t>(k) % states.size()];
      Superoperator l;
      if (k == 199) {
        l = sample_generator(tracial(3), SampleKind::NonexactAuto, 0, 1).l;
      } else {
        switch (k % 4) {
          case 0:
            l = sample_generator(sa, SampleKind::Exact,
                                 1 + k % commutant_skew_dim(sa), 3000 + k)
                    .l;
            break;
          case 1:
            l = sample_generator(sa, SampleKind::EllipticGeneric, 1 + k % 3, 3000 + k).l;
            break;
          case 2: {
            const SampledGenerator g =
                sample_generator(sa, SampleKind::Exact, 1, 3000 + k);
            l = ad(*g.v);
            break;
          }
          default: {
            const SampledGenerator g =
                sample_generator(sa, SampleKind::Exact, 2 > commutant_skew_dim(sa) ? 1 : 2,
                                 3000 + k);
            l = g.l - ad(*g.v);
            break;
          }
        }
      }
      const StateAlgebra& home = (k == 199) ? tracial(3) : sa;
      const ExactnessReport rep = exactness_report(home, l);
      const bool all_same = rep.coboundary_solve == rep.potential_solve &&
                            rep.potential_solve == rep.derivation_difference &&
                            rep.derivation_difference == rep.kms_symbol;
      if (!all_same) {
        note = "four-way disagreement at k=" + std::to_string(k);
        return false;
      }
      (rep.exact ? exact_seen : inexact_seen) += 1;
    }
    if (exact_seen < 50 || inexact_seen < 50) {
      note = "population not mixed: " + std::to_string(exact_seen) + " exact, " +
             std::to_string(inexact_seen) + " inexact";
      return false;
    }

    const GeneratorFile f = load_generator(fixture("example614_n3.json"));
    const StateAlgebra sa(f.n, f.omega);
    const Superoperator l(f.n, f.l);
    if (!is_elliptic_form(sa, l).elliptic || !is_elliptic_ccp(sa, l).elliptic) {
      note = "cycle fixture should be elliptic";
      return false;
    }
    const ExactnessReport rep = exactness_report(sa, l);
    if (rep.exact || rep.coboundary_solve || rep.potential_solve ||
        rep.derivation_difference || rep.kms_symbol) {
      note = "cycle fixture should be inexact on all four criteria";
      return false;
    }
    return true;
  }, &note);
  verdict_line(4, "four-way exactness agreement", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("structural identities") {
  std::string note;
  const bool ok = guarded("structural identities", [&] {
    const double bound = 1e-9;
    const std::vector<StateAlgebra> states = {tracial(2), diag_state({2.0 / 3.0, 1.0 / 3.0}),
                                              diag_state({0.5, 0.3, 0.2})};
    Rng rng(4242);
    for (const StateAlgebra& sa : states) {
      const int n = sa.dim();
      const KermuBasis& basis = kermu_basis(n);

      for (int rep = 0; rep < 6; ++rep) {
        const Matrix a = rng.gaussian_matrix(n), b = rng.gaussian_matrix(n);
        // defining identity of the modular map
        if (sa.delta_defining_residual(a, b) > bound * std::max(1.0, a.norm() * b.norm())) {
          note = "modular defining identity";
          return false;
        }
        // star exchanges the map with its inverse
        if ((sa.delta(a).adjoint() - sa.delta_inv(a.adjoint())).norm() >
            bound * std::max(1.0, a.norm())) {
          note = "modular star exchange";
          return false;
        }
      }

      // coboundary formula and square-zero on scalar functionals
      for (int rep = 0; rep < 3; ++rep) {
        Matrix p = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) p(i, i) = rng.cgaussian();
        Vector t0(n * n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            t0(unit_index(n, i, j)) = -sa.rho(unit_matrix(n, i, j) * p);
        const ModularCochain psi = ModularCochain::make(sa, 0, t0);
        const ModularCochain bpsi = coboundary(sa, psi);
        if (coboundary(sa, bpsi).tensor().norm() > bound * std::max(1.0, p.norm())) {
          note = "coboundary square";
          return false;
        }
        double worst = 0.0;
        for (int rep2 = 0; rep2 < 4; ++rep2) {
          const Matrix x = rng.gaussian_matrix(n), y = rng.gaussian_matrix(n);
          worst = std::max(worst, std::abs(bpsi.apply({x, y}) -
                                           sa.rho(x * (p * y - y * p))));
        }
        if (worst > bound * std::max(1.0, p.norm())) {
          note = "degree-zero coboundary formula";
          return false;
        }
      }

      // symbol shifts arguments through the modular map, for arbitrary maps
      for (int rep = 0; rep < 3; ++rep) {
        const Superoperator l(n, rng.gaussian_matrix(n * n));
        const Matrix a = rng.gaussian_matrix(n);
        const Matrix id = Matrix::Identity(n, n);
        const OneForm w1 = random_form(basis, rng), w2 = random_form(basis, rng);
        const Complex lhs = symbol_apply(sa, l, wedge(mod_act(a, w1, id), w2));
        const Complex rhs = symbol_apply(sa, l, wedge(w1, mod_act(id, w2, sa.delta(a))));
        if (std::abs(lhs - rhs) > bound * std::max(1.0, std::abs(lhs))) {
          note = "symbol argument shift";
          return false;
        }
      }

      // adjoint symbol identity for admissible generators
      for (int rep = 0; rep < 2; ++rep) {
        const SampledGenerator g = sample_generator(
            sa, rep == 0 ? SampleKind::Exact : SampleKind::EllipticGeneric, 1,
            5000 + rep);
        const Superoperator lstar = adjoint_gns(sa, g.l);
        const OneForm w1 = random_form(basis, rng), w2 = random_form(basis, rng);
        const Complex lhs = symbol_apply(sa, g.l, wedge(w1, w2));
        const Complex rhs =
            symbol_apply(sa, lstar, wedge(w2, mod_lift(sa, w1, Complex(0.0, 1.0))));
        if (std::abs(lhs - rhs) > bound * std::max(1.0, std::abs(lhs))) {
          note = "adjoint symbol identity";
          return false;
        }
      }

      // laplacian invariance, symmetric/antisymmetric split, symbol value
      const int m = std::min(2, commutant_skew_dim(sa));
      const SampledGenerator g = sample_generator(sa, SampleKind::Exact, m, 6000 + n);
      const Superoperator lap = laplacian(sa, *g.momenta);
      if (m == 2) {
        const double c = std::cos(0.9), s = std::sin(0.9);
        MomentumSpace rot;
        rot.n = n;
        rot.basis = {c * g.momenta->basis[0] + s * g.momenta->basis[1],
                     -s * g.momenta->basis[0] + c * g.momenta->basis[1]};
        if ((laplacian(sa, rot) - lap).norm() > bound * std::max(1.0, lap.norm())) {
          note = "laplacian basis independence";
          return false;
        }
      }
      const Superoperator lstar = adjoint_gns(sa, g.l);
      if (((g.l + lstar) * 0.5 - lap).norm() > bound * std::max(1.0, g.l.norm())) {
        note = "symmetric part is the laplacian";
        return false;
      }
      if (((g.l - lstar) * 0.5 - ad(*g.v)).norm() > bound * std::max(1.0, g.l.norm())) {
        note = "antisymmetric part is the potential";
        return false;
      }
      for (int rep = 0; rep < 4; ++rep) {
        const Matrix x = rng.gaussian_matrix(n), y = rng.gaussian_matrix(n);
        const Complex lhs = symbol_apply(sa, lap, wedge(d(x), d(y)));
        const Complex rhs = -2.0 * sa.rho(lap.apply(x) * y);
        if (std::abs(lhs - rhs) > bound * std::max(1.0, std::abs(rhs))) {
          note = "laplacian symbol value";
          return false;
        }
      }

      // metric is modular invariant and sharp-symmetric
      const KmsMetric gm = metric_from_generator(sa, g.l);
      for (int rep = 0; rep < 3; ++rep) {
        const OneForm w1 = random_form(basis, rng), w2 = random_form(basis, rng);
        const TwoForm xi = wedge(w1, w2);
        const Complex base = gm.eval(xi);
        const Complex z(rng.gaussian(), rng.gaussian());
        if (std::abs(gm.eval(mod_lift(sa, xi, z)) - base) >
            bound * std::max(1.0, std::abs(base)) * 10.0) {
          note = "metric modular invariance";
          return false;
        }
        const Complex lhs = gm.eval(wedge(star(w2), w1));
        const Complex rhs = gm.eval(wedge(star(sharp(sa, w1)), sharp(sa, w2)));
        if (std::abs(lhs - rhs) > bound * std::max(1.0, std::abs(lhs))) {
          note = "metric sharp symmetry";
          return false;
        }
      }
    }

    for (int n : {2, 3, 4}) {
      if (kermu_basis(n).size() != n * n * n * n - n * n) {
        note = "kernel dimension";
        return false;
      }
    }
    return true;
  }, &note);
  verdict_line(5, "structural identities", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("markov axioms on the elliptic fixtures") {
  std::string note;
  const bool ok = guarded("markov axioms", [&] {
    for (const char* name : {"dephasing_n2.json", "pure_potential_n2.json",
                             "free_laplacian_n3.json", "example614_n3.json"}) {
      const GeneratorFile f = load_generator(fixture(name));
      const StateAlgebra sa(f.n, f.omega);
      const Superoperator l(f.n, f.l);
      if (!is_elliptic_ccp(sa, l).elliptic) {
        note = std::string(name) + " is not elliptic";
        return false;
      }
      const MarkovReport rep = markov_checks(sa, l, {0.1, 0.7, 1.3});
      if (!rep.ok) {
        note = std::string(name) + " fails the markov report";
        return false;
      }
      for (const MarkovTimeSlice& s : rep.slices) {
        if (s.unital_defect > 1e-8 || s.invariance_defect > 1e-8 ||
            s.choi_min_eig < -1e-10) {
          note = std::string(name) + " slice defect at t=" + std::to_string(s.t);
          return false;
        }
      }
      if (rep.semigroup_defect > 1e-8) {
        note = std::string(name) + " semigroup law defect";
        return false;
      }
    }
    return true;
  }, &note);
  verdict_line(6, "markov axioms", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("mixing verdict against brute force") {
  std::string note;
  const bool ok = guarded("mixing verdict", [&] {
    int checked = 0;
    for (const char* name : {"dephasing_n2.json", "pure_potential_n2.json",
                             "free_laplacian_n3.json", "example614_n3.json"}) {
      const GeneratorFile f = load_generator(fixture(name));
      const StateAlgebra sa(f.n, f.omega);
      const Superoperator l(f.n, f.l);
      const MixingReport mx = mixing_analysis(sa, l);
      if (mx.spectral_gap < 0.1) continue;
      ++checked;
      const Superoperator phi100 = evolve(l, 100.0);
      const Superoperator phi200 = evolve(l, 200.0);
      const bool brute = (phi100 - phi200).norm() <= 1e-6;
      if (mx.limit_exists != brute) {
        note = std::string(name) + " verdict disagrees with the long-time flow";
        return false;
      }
      if (mx.limit_exists && (phi200 - *mx.limit).norm() > 1e-6) {
        note = std::string(name) + " limit map differs from the long-time flow";
        return false;
      }
    }
    if (checked < 3) {
      note = "expected at least three fixtures with a spectral gap";
      return false;
    }
    return true;
  }, &note);
  verdict_line(7, "mixing verdict vs brute force", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("compression of invariant corners") {
  std::string note;
  const bool ok = guarded("compression", [&] {
    const int n = 4;
    const StateAlgebra sa = tracial(n);
    Rng rng(88);
    Matrix u = Matrix::Zero(n, n);
    u.block(0, 0, 2, 2) = Matrix(0.8 * rng.skew_matrix(2)).exp();
    u.block(2, 2, 2, 2) = Matrix(0.8 * rng.skew_matrix(2)).exp();
    const Superoperator l = sandwich(u, u.adjoint()) - Superoperator::identity(n);

    Matrix state = Matrix::Zero(n, n);
    state(0, 0) = 0.5;
    state(1, 1) = 0.5;
    const CompressionResult res = compress(sa, l, state, {0.1, 0.7, 1.3});
    if (res.rank != 2 || res.trivial) {
      note = "expected a rank-two corner";
      return false;
    }
    if (res.semigroup_defect > 1e-9) {
      note = "corner deviation " + std::to_string(res.semigroup_defect);
      return false;
    }
    if (res.monotone_defect > 1e-9) {
      note = "monotonicity defect " + std::to_string(res.monotone_defect);
      return false;
    }

    Matrix w = Matrix::Identity(n, n);
    Matrix cyc = Matrix::Zero(3, 3);
    for (int k = 0; k < 3; ++k) cyc((k + 1) % 3, k) = 1.0;
    w.block(1, 1, 3, 3) = cyc;
    const Superoperator l1 = sandwich(w, w.adjoint()) - Superoperator::identity(n);
    Matrix pure = Matrix::Zero(n, n);
    pure(0, 0) = 1.0;
    const CompressionResult res1 = compress(sa, l1, pure, {0.5, 1.0});
    if (res1.rank != 1 || !res1.trivial) {
      note = "expected the trivial rank-one corner";
      return false;
    }
    return true;
  }, &note);
  verdict_line(8, "compression sanity", ok);
  CHECK_MESSAGE(ok, note);
}

TEST_CASE("cli determinism and round trip") {
  std::string note;
  const bool ok = guarded("cli round trip", [&] {
    struct Cfg {
      std::vector<std::string> args;
      bool has_truth;
    };
    const std::vector<Cfg> cfgs = {
        {{"random", "--n", "2", "--m", "2", "--seed", "11", "--kind", "exact"}, true},
        {{"random", "--n", "3", "--omega", "diag:0.5,0.25,0.25", "--m", "2", "--seed", "12",
          "--kind", "exact"},
         true},
        {{"random", "--n", "3", "--m", "3", "--seed", "13", "--kind", "exact"}, true},
        {{"random", "--n", "3", "--omega", "diag:0.5,0.3,0.2", "--m", "2", "--seed", "14",
          "--kind", "elliptic"},
         false},
        {{"random", "--n", "3", "--m", "0", "--seed", "15", "--kind", "nonexact"}, false},
    };
    int idx = 0;
    for (const Cfg& cfg : cfgs) {
      ++idx;
      const CliRun first = cli(cfg.args);
      const CliRun second = cli(cfg.args);
      if (first.code != 0 || first.out != second.out) {
        note = "sampling not byte-deterministic for config " + std::to_string(idx);
        return false;
      }
      if (!cfg.has_truth) continue;

      const std::string path = temp_path("dynvar_accept_" + std::to_string(idx) + ".json");
      std::ofstream(path) << first.out;
      const std::vector<std::string> an_args = {"analyze", path, "--json"};
      const CliRun an1 = cli(an_args);
      const CliRun an2 = cli(an_args);
      std::remove(path.c_str());
      if (an1.code != 0 || an1.out != an2.out) {
        note = "analysis not byte-deterministic for config " + std::to_string(idx);
        return false;
      }
      const nlohmann::json j = nlohmann::json::parse(an1.out);
      if (j["exactness"]["verdict"] != true) {
        note = "sampled generator not exact for config " + std::to_string(idx);
        return false;
      }
      const GeneratorFile f = parse_generator(first.out);
      const double v_norm = f.truth->v.norm();
      if (j["ground_truth"]["declared_valid"] != true ||
          j["ground_truth"]["span_defect"].get<double>() > 1e-8 ||
          j["ground_truth"]["v_defect"].get<double>() > 1e-8 * std::max(v_norm, 1e-6) ||
          j["ground_truth"]["rebuild_defect"].get<double>() > 1e-8) {
        note = "ground truth not recovered for config " + std::to_string(idx);
        return false;
      }
    }
    return true;
  }, &note);
  verdict_line(9, "cli determinism and round trip", ok);
  CHECK_MESSAGE(ok, note);
}
