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

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynvar {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define DYNVAR_ERROR(NAME)             \
  struct NAME : Error {                \
    using Error::Error;                \
  }

DYNVAR_ERROR(NotHermitian);
DYNVAR_ERROR(NotPositiveDefinite);
DYNVAR_ERROR(TraceNotOne);
DYNVAR_ERROR(DimensionMismatch);
DYNVAR_ERROR(NotAOneForm);
DYNVAR_ERROR(NotATwoForm);
DYNVAR_ERROR(DomainViolation);
DYNVAR_ERROR(InvalidMomentumSpace);
DYNVAR_ERROR(InvalidPotential);
DYNVAR_ERROR(NotADerivation);
DYNVAR_ERROR(ReconstructionMismatch);
DYNVAR_ERROR(CommutantTooSmall);
DYNVAR_ERROR(NotACochain);
DYNVAR_ERROR(InternalInconsistency);
DYNVAR_ERROR(NotElliptic);
DYNVAR_ERROR(NotExact);
DYNVAR_ERROR(NotKms);
DYNVAR_ERROR(SkewExtractionFailure);
DYNVAR_ERROR(CommutantViolation);
DYNVAR_ERROR(SingularPairing);
DYNVAR_ERROR(NotUnitary);
DYNVAR_ERROR(NegativeTime);
DYNVAR_ERROR(NotAState);
DYNVAR_ERROR(StateNotInvariant);
DYNVAR_ERROR(ParseError);
DYNVAR_ERROR(ConventionMismatch);
DYNVAR_ERROR(IncompatibleStateAlgebras);

#undef DYNVAR_ERROR

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

// eps_eq is relative (Frobenius) and may be overridden with DYNVAR_TOL.
// eps_psd / eps_rank scale with the largest eigenvalue of the matrix under
// test; an absolute floor keeps near-zero matrices from failing on rounding.
struct Tolerances {
  double eq = 1e-9;
  double psd_rel = 1e-10;
  double rank_rel = 1e-10;
  double floor = 1e-13;
};

const Tolerances& tol();

// ---------------------------------------------------------------------------
// vec / devec, Kronecker, matrix units
// ---------------------------------------------------------------------------

// Column-stacking: vec(X)[(j-1)n + i] = X[i,j] (1-based), so
// vec(A X B) = (B^T (x) A) vec(X).
inline Vector vec(const Matrix& x) {
  return Eigen::Map<const Vector>(x.data(), x.size());
}

inline Matrix devec(const Vector& v, int n) {
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

Matrix kron(const Matrix& a, const Matrix& b);

// E_ij, 0-based indices.
inline Matrix unit_matrix(int n, int i, int j) {
  Matrix e = Matrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

// vec index of E_ij under column stacking.
inline int unit_index(int n, int i, int j) { return j * n + i; }

inline double fnorm(const Matrix& a) { return a.norm(); }

inline bool approx_zero(const Matrix& a, double scale) {
  return a.norm() <= tol().eq * std::max(scale, 1.0);
}

inline bool approx_eq(const Matrix& a, const Matrix& b) {
  double s = std::max(a.norm(), b.norm());
  return (a - b).norm() <= tol().eq * std::max(s, 1.0);
}

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

// mt19937_64 + hand-rolled Box-Muller; std::normal_distribution's bit stream
// is implementation-defined and we promise byte-identical output per seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  double uniform();          // [0, 1)
  double gaussian();         // standard normal
  Complex cgaussian();       // standard complex normal
  std::uint64_t integer(std::uint64_t bound);  // [0, bound)

  // n x n with iid standard complex normal entries.
  Matrix gaussian_matrix(int n);
  // Skew-adjoint n x n.
  Matrix skew_matrix(int n);

 private:
  std::uint64_t next_u64();
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over the raw matrix bytes; used to tag invariants with provenance.
std::string matrix_hash(const Matrix& m);

}  // namespace dynvar
