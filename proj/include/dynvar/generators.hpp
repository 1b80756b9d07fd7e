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
#include <vector>

#include "dynvar/forms.hpp"

namespace dynvar {

// A real linear space of momenta: a declared-orthonormal basis of
// skew-adjoint matrices p with rho(p) = 0 and [p, omega] = 0. The inner
// product is the one making `basis` orthonormal.
struct MomentumSpace {
  int n = 0;
  std::vector<Matrix> basis;
  int size() const { return static_cast<int>(basis.size()); }
};

// Validates skewness, centering, commutation with omega and real linear
// independence; throws InvalidMomentumSpace.
void validate_momentum_space(const StateAlgebra& sa, const MomentumSpace& p);

// Validates v* = -v, rho(v) = 0, [v, omega] = 0; throws InvalidPotential.
void validate_potential(const StateAlgebra& sa, const Matrix& v);

// Membership in the admissible generator class: unital (L(1) = 0),
// state-preserving (rho o L = 0) and symmetric (L(x*) = L(x)*).
struct ValidationReport {
  double unital_residual = 0.0;
  double invariance_residual = 0.0;
  double symmetry_residual = 0.0;
  bool unital = false;
  bool invariant = false;
  bool symmetric = false;
  bool ok() const { return unital && invariant && symmetric; }
};

ValidationReport in_domain(const StateAlgebra& sa, const Superoperator& l);

// Laplacian of a momentum space: sum_k ad(p_k)^2 over the declared
// orthonormal basis. Independent of the basis choice.
Superoperator laplacian(const StateAlgebra& sa, const MomentumSpace& p);

// L = laplacian(P) + ad(v).
Superoperator make_generator(const StateAlgebra& sa, const MomentumSpace& p,
                             const Matrix& v);

// Ellipticity: sigma_L(omega* omega) <= 0 for every one-form omega.
struct EllipticityResult {
  bool elliptic = false;
  double min_eig = 0.0;  // of the symbol Gram matrix; >= 0 iff elliptic
  std::optional<OneForm> witness;  // on failure: sigma_L(w* w) > 0
};

// Form-level oracle: the Gram matrix M[r,s] = -sigma_L(kappa_r* kappa_s)
// over the kermu basis must be PSD.
EllipticityResult is_elliptic_form(const StateAlgebra& sa, const Superoperator& l);

// Independent Choi-compression oracle: Q J(L) Q >= 0 with
// J(L) = sum_ij E_ij (x) L(E_ij) and Q the complement of the maximally
// entangled vector.
struct ChoiResult {
  bool elliptic = false;
  double min_eig = 0.0;
};
ChoiResult is_elliptic_ccp(const StateAlgebra& sa, const Superoperator& l);

// Choi matrix J(L) = sum_ij kron(E_ij, L(E_ij)).
Matrix choi_matrix(const Superoperator& l);

double derivation_residual(const Superoperator& l);
bool is_derivation(const Superoperator& l);

// For a symmetric derivation D, recover the skew-adjoint, centered v with
// D = ad(v) via v0 = sum_j D(E_j1) E_1j. Throws NotADerivation.
Matrix extract_inner_potential(const StateAlgebra& sa, const Superoperator& dd);

// Sampling.
enum class SampleKind { Exact, EllipticGeneric, NonexactAuto };

struct SampledGenerator {
  Superoperator l;
  // Present for Exact: the data L was assembled from.
  std::optional<MomentumSpace> momenta;
  std::optional<Matrix> v;
};

// kind=Exact: m momenta + potential sampled in the centered skew-adjoint
//   part of the commutant of omega (CommutantTooSmall if m exceeds its
//   dimension), declared orthonormal as sampled.
// kind=EllipticGeneric: Lindblad form sum_k V_k* x V_k + a x + x a* with m
//   Gaussian jumps, corrective rank-one jumps and a first-order solve that
//   land it in the admissible class. Generically not exact.
// kind=NonexactAuto: cycle-automorphism generator Ad(W) - id; requires
//   tracial omega and n >= 3.
SampledGenerator sample_generator(const StateAlgebra& sa, SampleKind kind, int m,
                                  std::uint64_t seed);

// Dimension of the centered skew-adjoint part of the commutant of omega,
// i.e. the largest admissible momentum-space dimension.
int commutant_skew_dim(const StateAlgebra& sa);

}  // namespace dynvar
