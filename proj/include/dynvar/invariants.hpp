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

#pragma once

#include <optional>
#include <string>

#include "dynvar/cohomology.hpp"

namespace dynvar {

// Positive modular-invariant metric on one-forms, represented by its kernel
// K on matrix-unit pairs: g(a dx dy) = rho(a K(x, y)).
class KmsMetric {
 public:
  // kernel[I * n^2 + J] = K(E_I, E_J). Gated on positivity of the induced
  // Gram matrix over ker mu (NotPositiveDefinite) and on the modular pair
  // identity g(w1 w2) = g(w2 lift(w1)) (NotKms).
  static KmsMetric from_kernel(const StateAlgebra& sa, std::vector<Matrix> kernel);
  static KmsMetric raw(const StateAlgebra& sa, std::vector<Matrix> kernel);

  int dim() const { return sa_.dim(); }
  const StateAlgebra& algebra() const { return sa_; }
  const Matrix& kernel(int i1, int j1, int i2, int j2) const;
  Complex eval_triple(const Matrix& a, const Matrix& x, const Matrix& y) const;
  Complex eval(const TwoForm& xi) const;
  // Largest kernel entry magnitude, the natural scale of the metric.
  double scale() const;

 private:
  KmsMetric(StateAlgebra sa, std::vector<Matrix> kernel);
  StateAlgebra sa_;
  std::vector<Matrix> kernel_;
  std::vector<Matrix> kernel_omega_;  // kernel entries right-multiplied by omega
};

// Gram matrix of the metric over the orthonormal basis of ker mu, whose
// positive semidefiniteness is the positivity of the metric.
RealVector metric_gram_spectrum(const StateAlgebra& sa, const std::vector<Matrix>& kernel);

// The metric of an elliptic exact generator: g = -1/2 (symbol of L), with
// kernel K(x, y) = -1/2 (L(xy) - L(x) y - x L(y)). Gates: in_domain
// (DomainViolation), both ellipticity oracles (NotElliptic, or
// InternalInconsistency if they disagree), exactness (NotExact).
KmsMetric metric_from_generator(const StateAlgebra& sa, const Superoperator& l);

// The unique map with rho(Delta(x) y) = g(dx dy) for all x, y.
Superoperator reconstruct_laplacian(const StateAlgebra& sa, const KmsMetric& g);

struct DecomposeOptions {
  // When set, the positive matrix whose eigenvectors seed the extraction is
  // conjugated by a seeded coordinate permutation first. Results must agree
  // with the unpermuted run up to a real orthogonal change of basis.
  std::optional<uint64_t> perm_seed;
};

// Recovers a momentum space inducing the metric:
//   g(a dx dy) = -sum_k rho(a [p_k, x] [p_k, y]),
// with the returned basis orthonormal for the pairing carried by the metric
// and each momentum centered and commuting with the density. Throws NotKms,
// SkewExtractionFailure, SingularPairing, ReconstructionMismatch.
MomentumSpace decompose_metric(const StateAlgebra& sa, const KmsMetric& g,
                               const DecomposeOptions& opts = {});

// Complete classification datum of an elliptic exact generator.
struct DynamicalInvariant {
  int n = 0;
  MomentumSpace p;
  Matrix v;  // skew, centered, fixed by the modular map; L - L* = 2 ad(v)
  std::string source_hash;
};

// L = sum_k ad(p_k)^2 + ad(v) up to a relative defect of tol().eq; throws
// DomainViolation, NotElliptic, NotExact, ReconstructionMismatch.
DynamicalInvariant extract_invariant(const StateAlgebra& sa, const Superoperator& l);

// Basis-independent spectral data of an invariant; equality is necessary
// for conjugacy.
struct Fingerprint {
  int m = 0;
  std::vector<double> spec_v;      // eigenvalues of -i v, ascending
  std::vector<double> spec_q;      // eigenvalues of sum_k p_k^2, ascending
  std::vector<double> spec_c;      // nonzero spectrum of the span projector seed
  std::vector<double> spec_state;  // eigenvalues of the density, descending
};

Fingerprint fingerprint(const StateAlgebra& sa, const DynamicalInvariant& inv);
bool fingerprints_match(const Fingerprint& a, const Fingerprint& b, double tolerance = 1e-6);

// Orthogonal projector onto the complex span of the trace-centered momenta,
// acting on stacked coordinates. Basis-choice independent.
Matrix momenta_span_projector(int n, const std::vector<Matrix>& basis);

struct ConjugacyReport {
  bool ok = false;
  double state_defect = 0.0;      // |u omega - omega u|
  double span_defect = 0.0;       // projector mismatch of transported spans
  double fit_defect = 0.0;        // residual of coordinates of u p_k u^* in the target basis
  double gram_defect = 0.0;       // departure of those coordinates from orthogonality
  double potential_defect = 0.0;  // |u v1 u^* - v2|
};

// Validates u as a conjugacy certificate from a to b. Throws NotUnitary when
// u fails unitarity; all other failures are reported, not thrown.
ConjugacyReport check_conjugacy(const StateAlgebra& sa, const DynamicalInvariant& a,
                                const DynamicalInvariant& b, const Matrix& u);

enum class ConjugacyVerdict { Conjugate, NotConjugate, Inconclusive };

struct SearchResult {
  ConjugacyVerdict verdict = ConjugacyVerdict::Inconclusive;
  std::optional<Matrix> u;
  double best_objective = 0.0;
  int restarts_used = 0;
};

// Random-restart least-squares search for a state-preserving unitary
// conjugating a to b. A fingerprint mismatch certifies NotConjugate; running
// out of budget yields Inconclusive, never a negative certificate.
SearchResult search_conjugacy(const StateAlgebra& sa, const DynamicalInvariant& a,
                              const DynamicalInvariant& b, int budget_restarts = 12,
                              uint64_t seed = 1);

}  // namespace dynvar
