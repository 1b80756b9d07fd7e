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

#include <functional>
#include <utility>
#include <vector>

#include "dynvar/common.hpp"

namespace dynvar {

// The matrix algebra M_n together with a faithful state, its GNS inner
// product and the modular flow of the state.
//
// omega is the trace-one density of the state: rho(a) = trace(omega a).
// The density with respect to the normalized trace is h = n * omega; the
// modular group is sigma_z(a) = h^{-iz} a h^{iz}, so delta = sigma_i
// conjugates by h (equivalently by omega, the normalization cancels).
class StateAlgebra {
 public:
  // Validates hermiticity, positive definiteness (faithfulness) and unit
  // trace of omega. Throws NotHermitian / NotPositiveDefinite / TraceNotOne.
  StateAlgebra(int n, const Matrix& omega);

  int dim() const { return n_; }
  const Matrix& omega() const { return omega_; }
  // h = n * omega, the density relative to the normalized trace.
  const Matrix& h() const { return h_; }
  bool tracial() const;

  // rho(a) = trace(omega a).
  Complex rho(const Matrix& a) const;

  // <a, b> = rho(b* a); linear in a, antilinear in b.
  Complex gns_inner(const Matrix& a, const Matrix& b) const;

  // sigma_z(a) = h^{-iz} a h^{iz} for complex z (entire extension of the
  // modular flow; positive spectrum, principal branch).
  Matrix modular(const Matrix& a, Complex z) const;

  Matrix delta(const Matrix& a) const;       // sigma_i: a -> h a h^{-1}
  Matrix delta_inv(const Matrix& a) const;   // sigma_{-i}
  Matrix delta_half(const Matrix& a) const;  // sigma_{i/2}: h^{1/2} a h^{-1/2}

  // h^z via the cached eigendecomposition.
  Matrix h_power(Complex z) const;

  // |rho(ab) - rho(b delta(a))|, the defining identity of the modular
  // automorphism; exposed so callers can probe it directly.
  double delta_defining_residual(const Matrix& a, const Matrix& b) const;

  // Eigenvalues of omega grouped into clusters of (numerically) equal value,
  // descending; cluster i spans columns [offset_i, offset_i + size_i) of
  // eigenbasis(). Used for commutant-constrained sampling.
  struct EigenCluster {
    double value;
    int offset;
    int size;
  };
  const std::vector<EigenCluster>& clusters() const { return clusters_; }
  const Matrix& eigenbasis() const { return eigvecs_; }

  bool same_state(const StateAlgebra& other) const;

 private:
  int n_;
  Matrix omega_;
  Matrix h_;
  Matrix eigvecs_;        // unitary, columns are eigenvectors of omega
  RealVector eigvals_;    // of omega, descending
  std::vector<EigenCluster> clusters_;
};

// A linear map on M_n stored as its n^2 x n^2 matrix acting on vec(x).
// Column (j-1)n + i of mat is vec(f(E_ij)).
class Superoperator {
 public:
  Superoperator() : n_(0) {}
  Superoperator(int n, Matrix mat);

  int dim() const { return n_; }
  const Matrix& mat() const { return mat_; }

  Matrix apply(const Matrix& x) const;
  double norm() const { return mat_.norm(); }

  Superoperator operator+(const Superoperator& o) const;
  Superoperator operator-(const Superoperator& o) const;
  Superoperator operator*(Complex c) const;
  // Composition: (this o other)(x) = this(other(x)).
  Superoperator compose(const Superoperator& o) const;

  static Superoperator identity(int n);
  static Superoperator zero(int n);

 private:
  int n_;
  Matrix mat_;  // n^2 x n^2
};

// Build from an arbitrary callable by evaluating on matrix units.
Superoperator super_from_map(int n, const std::function<Matrix(const Matrix&)>& f);

Superoperator left_mult(const Matrix& a);          // x -> a x
Superoperator right_mult(const Matrix& a);         // x -> x a
Superoperator ad(const Matrix& p);                 // x -> [p, x]
Superoperator sandwich(const Matrix& a, const Matrix& b);  // x -> a x b

// Adjoint with respect to the GNS inner product:
// gns_inner(L(a), b) = gns_inner(a, adjoint_gns(L)(b)).
// Realized as G^{-1} L^H G with the Gram matrix G[I,J] = rho(E_I* E_J).
Superoperator adjoint_gns(const StateAlgebra& sa, const Superoperator& l);

// Gram matrix of the GNS inner product in the matrix-unit basis, so that
// gns_inner(a, b) = vec(b)^H G vec(a). Exposed for convention validation.
Matrix gns_gram(const StateAlgebra& sa);

}  // namespace dynvar
