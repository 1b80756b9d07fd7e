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
#include <utility>
#include <vector>

#include "dynvar/core.hpp"

namespace dynvar {

// One-forms live in the kernel of multiplication mu: A (x) A -> A; the
// differential is dx = 1 (x) x - x (x) 1 and the bimodule action is
// a (x (x) y) b = ax (x) yb. Stored densely: coeff(I, J) multiplies
// E_I (x) E_J in the matrix-unit basis.
class OneForm {
 public:
  // Gated on membership in ker mu; throws NotAOneForm.
  static OneForm from_coeffs(int n, Matrix coeffs);
  // Sum of simple tensors: sum_k left_k (x) right_k. Same gate.
  static OneForm from_terms(int n, const std::vector<std::pair<Matrix, Matrix>>& terms);
  static OneForm zero(int n);

  int dim() const { return n_; }
  const Matrix& coeffs() const { return coeffs_; }
  Complex coeff(int i1, int j1, int i2, int j2) const {
    return coeffs_(unit_index(n_, i1, j1), unit_index(n_, i2, j2));
  }
  double norm() const { return coeffs_.norm(); }

  OneForm operator+(const OneForm& o) const;
  OneForm operator-(const OneForm& o) const;
  OneForm operator*(Complex c) const;

  // Residual of the multiplication contraction; zero on genuine one-forms.
  static double mu_residual(int n, const Matrix& coeffs);

  // Unchecked; for internal use where membership is preserved by
  // construction.
  static OneForm raw(int n, Matrix coeffs) { return OneForm(n, std::move(coeffs)); }

 private:
  OneForm(int n, Matrix coeffs) : n_(n), coeffs_(std::move(coeffs)) {}
  int n_;
  Matrix coeffs_;  // n^2 x n^2
};

// Two-forms live in A (x) A (x) A, in the kernel of both partial
// multiplications mu2(a (x) b (x) c) = (ab (x) c, a (x) bc). Flattened
// storage: entry(I, J, K) multiplies E_I (x) E_J (x) E_K.
class TwoForm {
 public:
  static TwoForm from_tensor(int n, Vector tensor);  // gated, NotATwoForm
  static TwoForm zero(int n);

  int dim() const { return n_; }
  const Vector& tensor() const { return tensor_; }
  Complex entry(int I, int J, int K) const {
    return tensor_((static_cast<long>(I) * n_ * n_ + J) * n_ * n_ + K);
  }
  double norm() const { return tensor_.norm(); }

  TwoForm operator+(const TwoForm& o) const;
  TwoForm operator-(const TwoForm& o) const;
  TwoForm operator*(Complex c) const;

  static double mu2_residual(int n, const Vector& tensor);

  static TwoForm raw(int n, Vector tensor) { return TwoForm(n, std::move(tensor)); }

 private:
  TwoForm(int n, Vector tensor) : n_(n), tensor_(std::move(tensor)) {}
  int n_;
  Vector tensor_;  // n^6
};

// dx = 1 (x) x - x (x) 1.
OneForm d(const Matrix& x);

// a . omega . b under the bimodule action.
OneForm mod_act(const Matrix& a, const OneForm& omega, const Matrix& b);

// Involutions: (x (x) y)* = y* (x) x* and (a (x) b (x) c)* = c* (x) b* (x) a*.
OneForm star(const OneForm& omega);
TwoForm star(const TwoForm& xi);

// Product Omega^1 x Omega^1 -> Omega^2: (x (x) y)(z (x) w) = x (x) yz (x) w.
TwoForm wedge(const OneForm& w1, const OneForm& w2);

// Entrywise modular lift sigma_z (x) sigma_z (and the three-leg variant).
OneForm mod_lift(const StateAlgebra& sa, const OneForm& omega, Complex z);
TwoForm mod_lift(const StateAlgebra& sa, const TwoForm& xi, Complex z);

// omega^# = mod_lift(star(omega), i/2); an involutive conjugation.
OneForm sharp(const StateAlgebra& sa, const OneForm& omega);

// theta_L on two-forms: the unique extension of
// theta_L(a dx dy) = a L(xy) c-type data, realized on raw tensors as
// xi -> -sum xi[I,J,K] E_I L(E_J) E_K (valid on ker mu2).
Matrix theta_apply(const Superoperator& l, const TwoForm& xi);

// Symbol sigma_L = rho o theta_L.
Complex symbol_apply(const StateAlgebra& sa, const Superoperator& l, const TwoForm& xi);

// Residual of the first-order identity
// L(xay) - x L(ay) - L(xa) y + x L(a) y over matrix-unit triples.
double first_order_residual(const Superoperator& l);
bool is_first_order(const Superoperator& l);

// Orthonormal basis of ker mu. Elements are sparse combinations of
// E_ab (x) E_cd; both the dense forms and the sparse structure are exposed
// (the latter feeds the fast symbol Gram assembly).
struct KermuTerm {
  double coef;
  int a, b, c, d;  // E_ab (x) E_cd
};
struct KermuBasis {
  int n = 0;
  std::vector<OneForm> forms;
  std::vector<std::vector<KermuTerm>> sparse;
  int size() const { return static_cast<int>(sparse.size()); }
};
const KermuBasis& kermu_basis(int n);

// Linear combination sum_r c_r kappa_r of kermu basis elements.
OneForm kermu_combine(const KermuBasis& basis, const Vector& c);

}  // namespace dynvar
