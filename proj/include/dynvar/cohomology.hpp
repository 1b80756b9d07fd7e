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

#include "dynvar/generators.hpp"

namespace dynvar {

// Multilinear functional on (d+1) algebra arguments satisfying the twisted
// cyclicity condition
//   phi(a0, ..., ad) = (-1)^d phi(deltainv(ad), a0, ..., a_{d-1}).
// Stored as a dense tensor over matrix-unit tuples; entry index is
// I0 * n^(2d) + I1 * n^(2(d-1)) + ... + Id.
class ModularCochain {
 public:
  // Gated on the cyclicity condition; throws NotACochain.
  static ModularCochain make(const StateAlgebra& sa, int degree, Vector tensor);
  static ModularCochain raw(int n, int degree, Vector tensor);

  int dim() const { return n_; }
  int degree() const { return degree_; }
  const Vector& tensor() const { return tensor_; }

  // Evaluate on arbitrary matrices by multilinear extension.
  Complex apply(const std::vector<Matrix>& args) const;

 private:
  ModularCochain(int n, int degree, Vector tensor)
      : n_(n), degree_(degree), tensor_(std::move(tensor)) {}
  int n_;
  int degree_;
  Vector tensor_;
};

// Residual of the cyclicity condition over all matrix-unit tuples.
double cochain_residual(const StateAlgebra& sa, int degree, const Vector& tensor);
bool is_cochain(const StateAlgebra& sa, int degree, const Vector& tensor);

// Twisted Hochschild-style coboundary; maps degree-d cochains to degree-
// (d+1) cochains and squares to zero. Implemented for degrees 0 and 1.
ModularCochain coboundary(const StateAlgebra& sa, const ModularCochain& phi);

// Every degree-0 cochain is a -> rho(a p) for a unique p fixed by the
// modular automorphism; returns p.
Matrix zero_cochain_rep(const StateAlgebra& sa, const ModularCochain& phi);

// The obstruction form omega_L(x, y) = rho(x L(y)) - rho(L(x) y), returned
// as its matrix over unit pairs (row = first argument).
Matrix omega_form(const StateAlgebra& sa, const Superoperator& l);

// Exactness of the obstruction: four independent criteria that provably
// agree for admissible generators and are required to agree numerically.
//   (i)   omega_L is a coboundary of a degree-0 cochain (least squares);
//   (ii)  omega_L(x, y) = rho(x [w, y]) for a skew w fixed by delta;
//   (iii) L - L* is a derivation;
//   (iv)  the symbol satisfies the KMS pair identity
//         sigma_L(w1 w2) = sigma_L(w2 delta_hat(w1)).
struct ExactnessReport {
  bool exact = false;
  bool coboundary_solve = false;
  bool potential_solve = false;
  bool derivation_difference = false;
  bool kms_symbol = false;
  double residual_coboundary = 0.0;
  double residual_potential = 0.0;
  double residual_derivation = 0.0;
  double residual_kms = 0.0;
  // On exact generators: the potential with L - L* = 2 ad(v), skew-adjoint,
  // centered, fixed by the modular automorphism.
  std::optional<Matrix> v;
};

// Throws DomainViolation if L fails in_domain, InternalInconsistency if the
// four criteria disagree.
ExactnessReport exactness_report(const StateAlgebra& sa, const Superoperator& l);

// Worst defect of F(w1, w2) = F(w2, delta_hat(w1)) over the spanning pairs
// {E dE}, for a functional on raw three-leg unit tensors
// f(a,b,c,d,e,ff) ~ value on E_ab (x) E_cd (x) E_ef. Full pair set for
// n <= 3, a seeded 2000-pair subsample for n >= 4. scale_out receives the
// largest |F| seen (for relative verdicts).
double kms_pair_defect(const StateAlgebra& sa,
                       const std::function<Complex(int, int, int, int, int, int)>& f,
                       double* scale_out);

}  // namespace dynvar
