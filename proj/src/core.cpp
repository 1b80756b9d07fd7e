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

#include "dynvar/core.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <mutex>

namespace dynvar {

const Tolerances& tol() {
  static Tolerances t = [] {
    Tolerances v;
    if (const char* env = std::getenv("DYNVAR_TOL")) {
      char* end = nullptr;
      double parsed = std::strtod(env, &end);
      if (end != env && parsed > 0.0) v.eq = parsed;
    }
    return v;
  }();
  return t;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

std::uint64_t Rng::next_u64() {
  // splitmix64; a fixed, portable stream is all we need.
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Complex Rng::cgaussian() {
  double re = gaussian();
  double im = gaussian();
  return Complex(re, im) / std::sqrt(2.0);
}

std::uint64_t Rng::integer(std::uint64_t bound) {
  // Rejection-free modulo is fine here; bias is irrelevant for test draws.
  return next_u64() % bound;
}

Matrix Rng::gaussian_matrix(int n) {
  Matrix m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = cgaussian();
  return m;
}

Matrix Rng::skew_matrix(int n) {
  Matrix g = gaussian_matrix(n);
  return Matrix((g - g.adjoint()) / 2.0);
}

std::string matrix_hash(const Matrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const unsigned char* p, size_t len) {
    for (size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  mix(reinterpret_cast<const unsigned char*>(m.data()),
      sizeof(Complex) * static_cast<size_t>(m.size()));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// StateAlgebra
// ---------------------------------------------------------------------------

StateAlgebra::StateAlgebra(int n, const Matrix& omega) : n_(n), omega_(omega) {
  if (n < 1) throw DimensionMismatch("state algebra dimension must be >= 1");
  if (omega.rows() != n || omega.cols() != n)
    throw DimensionMismatch("omega must be n x n");
  if ((omega - omega.adjoint()).norm() > 1e-12 * std::max(1.0, omega.norm()))
    throw NotHermitian("omega must be hermitian");
  if (std::abs(omega.trace().real() - 1.0) > 1e-12 ||
      std::abs(omega.trace().imag()) > 1e-12)
    throw TraceNotOne("omega must have unit trace");

  Eigen::SelfAdjointEigenSolver<Matrix> es(omega);
  if (es.info() != Eigen::Success)
    throw Error("eigendecomposition of omega failed");
  // Descending order.
  RealVector ev = es.eigenvalues().reverse();
  Matrix vecs = es.eigenvectors().rowwise().reverse();
  if (ev(n - 1) <= 1e-12)
    throw NotPositiveDefinite("omega must be positive definite (faithful)");
  eigvals_ = ev;
  eigvecs_ = vecs;
  h_ = static_cast<double>(n) * omega_;

  // Cluster numerically equal eigenvalues; the commutant of omega is the
  // block algebra over these clusters.
  double cluster_tol = 1e-8 * ev(0);
  int start = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || std::abs(ev(i) - ev(start)) > cluster_tol) {
      clusters_.push_back({ev(start), start, i - start});
      start = i;
    }
  }
}

bool StateAlgebra::tracial() const {
  return clusters_.size() == 1;
}

Complex StateAlgebra::rho(const Matrix& a) const {
  return (omega_ * a).trace();
}

Complex StateAlgebra::gns_inner(const Matrix& a, const Matrix& b) const {
  return rho(b.adjoint() * a);
}

Matrix StateAlgebra::h_power(Complex z) const {
  Vector d(n_);
  for (int i = 0; i < n_; ++i) {
    double lam = n_ * eigvals_(i);  // spectrum of h, strictly positive
    d(i) = std::exp(z * std::log(lam));
  }
  return eigvecs_ * d.asDiagonal() * eigvecs_.adjoint();
}

Matrix StateAlgebra::modular(const Matrix& a, Complex z) const {
  Complex iz = Complex(0, 1) * z;
  return h_power(-iz) * a * h_power(iz);
}

Matrix StateAlgebra::delta(const Matrix& a) const {
  return h_ * a * h_power(Complex(-1, 0));
}

Matrix StateAlgebra::delta_inv(const Matrix& a) const {
  return h_power(Complex(-1, 0)) * a * h_;
}

Matrix StateAlgebra::delta_half(const Matrix& a) const {
  return h_power(Complex(0.5, 0)) * a * h_power(Complex(-0.5, 0));
}

double StateAlgebra::delta_defining_residual(const Matrix& a, const Matrix& b) const {
  return std::abs(rho(a * b) - rho(b * delta(a)));
}

bool StateAlgebra::same_state(const StateAlgebra& other) const {
  if (n_ != other.n_) return false;
  return (omega_ - other.omega_).norm() <= tol().eq * std::max(1.0, omega_.norm());
}

// ---------------------------------------------------------------------------
// Superoperator
// ---------------------------------------------------------------------------

Superoperator::Superoperator(int n, Matrix mat) : n_(n), mat_(std::move(mat)) {
  if (mat_.rows() != n * n || mat_.cols() != n * n)
    throw DimensionMismatch("superoperator matrix must be n^2 x n^2");
}

Matrix Superoperator::apply(const Matrix& x) const {
  if (x.rows() != n_ || x.cols() != n_)
    throw DimensionMismatch("superoperator applied to wrong-sized matrix");
  return devec(mat_ * vec(x), n_);
}

Superoperator Superoperator::operator+(const Superoperator& o) const {
  if (n_ != o.n_) throw DimensionMismatch("superoperator dims differ");
  return Superoperator(n_, mat_ + o.mat_);
}

Superoperator Superoperator::operator-(const Superoperator& o) const {
  if (n_ != o.n_) throw DimensionMismatch("superoperator dims differ");
  return Superoperator(n_, mat_ - o.mat_);
}

Superoperator Superoperator::operator*(Complex c) const {
  return Superoperator(n_, Matrix(mat_ * c));
}

Superoperator Superoperator::compose(const Superoperator& o) const {
  if (n_ != o.n_) throw DimensionMismatch("superoperator dims differ");
  return Superoperator(n_, mat_ * o.mat_);
}

Superoperator Superoperator::identity(int n) {
  return Superoperator(n, Matrix::Identity(n * n, n * n));
}

Superoperator Superoperator::zero(int n) {
  return Superoperator(n, Matrix::Zero(n * n, n * n));
}

Superoperator super_from_map(int n, const std::function<Matrix(const Matrix&)>& f) {
  Matrix m(n * n, n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      m.col(unit_index(n, i, j)) = vec(f(unit_matrix(n, i, j)));
  return Superoperator(n, m);
}

Superoperator left_mult(const Matrix& a) {
  int n = static_cast<int>(a.rows());
  return Superoperator(n, kron(Matrix::Identity(n, n), a));
}

Superoperator right_mult(const Matrix& a) {
  int n = static_cast<int>(a.rows());
  return Superoperator(n, kron(a.transpose(), Matrix::Identity(n, n)));
}

Superoperator ad(const Matrix& p) {
  return left_mult(p) - right_mult(p);
}

Superoperator sandwich(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionMismatch("sandwich dims differ");
  return Superoperator(static_cast<int>(a.rows()), kron(b.transpose(), a));
}

Matrix gns_gram(const StateAlgebra& sa) {
  int n = sa.dim();
  Matrix g(n * n, n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Matrix ei = unit_matrix(n, i, j);
      for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
          g(unit_index(n, i, j), unit_index(n, k, l)) =
              sa.rho(ei.adjoint() * unit_matrix(n, k, l));
    }
  return g;
}

Superoperator adjoint_gns(const StateAlgebra& sa, const Superoperator& l) {
  if (l.dim() != sa.dim())
    throw DimensionMismatch("superoperator dimension does not match algebra");
  Matrix g = gns_gram(sa);
  Matrix adj = g.partialPivLu().solve(l.mat().adjoint() * g);
  return Superoperator(sa.dim(), adj);
}

}  // namespace dynvar
