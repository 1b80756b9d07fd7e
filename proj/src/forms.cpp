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

#include "dynvar/forms.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace dynvar {

namespace {

long idx3(int n, int I, int J, int K) {
  return (static_cast<long>(I) * n * n + J) * n * n + K;
}

}  // namespace

// ---------------------------------------------------------------------------
// OneForm
// ---------------------------------------------------------------------------

double OneForm::mu_residual(int n, const Matrix& coeffs) {
  // mu(E_ab (x) E_cd) = delta_bc E_ad.
  Matrix contracted = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int d = 0; d < n; ++d) {
      Complex s = 0.0;
      for (int b = 0; b < n; ++b)
        s += coeffs(unit_index(n, a, b), unit_index(n, b, d));
      contracted(a, d) = s;
    }
  return contracted.norm();
}

OneForm OneForm::from_coeffs(int n, Matrix coeffs) {
  if (coeffs.rows() != n * n || coeffs.cols() != n * n)
    throw DimensionMismatch("one-form coefficient tensor must be n^2 x n^2");
  double r = mu_residual(n, coeffs);
  if (r > tol().eq * std::max(1.0, coeffs.norm()))
    throw NotAOneForm("tensor is not in the kernel of multiplication");
  return OneForm(n, std::move(coeffs));
}

OneForm OneForm::from_terms(int n, const std::vector<std::pair<Matrix, Matrix>>& terms) {
  Matrix coeffs = Matrix::Zero(n * n, n * n);
  for (const auto& [l, r] : terms) {
    if (l.rows() != n || r.rows() != n)
      throw DimensionMismatch("one-form term has wrong dimension");
    coeffs += vec(l) * vec(r).transpose();
  }
  return from_coeffs(n, std::move(coeffs));
}

OneForm OneForm::zero(int n) {
  return OneForm(n, Matrix::Zero(n * n, n * n));
}

OneForm OneForm::operator+(const OneForm& o) const {
  if (n_ != o.n_) throw DimensionMismatch("one-form dims differ");
  return OneForm(n_, coeffs_ + o.coeffs_);
}

OneForm OneForm::operator-(const OneForm& o) const {
  if (n_ != o.n_) throw DimensionMismatch("one-form dims differ");
  return OneForm(n_, coeffs_ - o.coeffs_);
}

OneForm OneForm::operator*(Complex c) const {
  return OneForm(n_, Matrix(coeffs_ * c));
}

// ---------------------------------------------------------------------------
// TwoForm
// ---------------------------------------------------------------------------

double TwoForm::mu2_residual(int n, const Vector& tensor) {
  // Contract legs (1,2) and (2,3); both must vanish.
  double sq = 0.0;
  int nn = n * n;
  // (ab (x) cd (x) ef) -> delta_bc (ad (x) ef)
  for (int a = 0; a < n; ++a)
    for (int d = 0; d < n; ++d)
      for (int K = 0; K < nn; ++K) {
        Complex s = 0.0;
        for (int b = 0; b < n; ++b)
          s += tensor(idx3(n, unit_index(n, a, b), unit_index(n, b, d), K));
        sq += std::norm(s);
      }
  // (ab (x) cd (x) ef) -> delta_de (ab (x) cf)
  for (int I = 0; I < nn; ++I)
    for (int c = 0; c < n; ++c)
      for (int f = 0; f < n; ++f) {
        Complex s = 0.0;
        for (int d = 0; d < n; ++d)
          s += tensor(idx3(n, I, unit_index(n, c, d), unit_index(n, d, f)));
        sq += std::norm(s);
      }
  return std::sqrt(sq);
}

TwoForm TwoForm::from_tensor(int n, Vector tensor) {
  long want = static_cast<long>(n) * n * n * n * n * n;
  if (tensor.size() != want)
    throw DimensionMismatch("two-form tensor must have n^6 entries");
  double r = mu2_residual(n, tensor);
  if (r > tol().eq * std::max(1.0, tensor.norm()))
    throw NotATwoForm("tensor is not in the kernel of both partial multiplications");
  return TwoForm(n, std::move(tensor));
}

TwoForm TwoForm::zero(int n) {
  return TwoForm(n, Vector::Zero(static_cast<long>(n) * n * n * n * n * n));
}

TwoForm TwoForm::operator+(const TwoForm& o) const {
  if (n_ != o.n_) throw DimensionMismatch("two-form dims differ");
  return TwoForm(n_, tensor_ + o.tensor_);
}

TwoForm TwoForm::operator-(const TwoForm& o) const {
  if (n_ != o.n_) throw DimensionMismatch("two-form dims differ");
  return TwoForm(n_, tensor_ - o.tensor_);
}

TwoForm TwoForm::operator*(Complex c) const {
  return TwoForm(n_, Vector(tensor_ * c));
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

OneForm d(const Matrix& x) {
  int n = static_cast<int>(x.rows());
  Matrix coeffs = Matrix::Zero(n * n, n * n);
  Vector xv = vec(x);
  for (int a = 0; a < n; ++a) {
    int ea = unit_index(n, a, a);
    // 1 (x) x
    for (int J = 0; J < n * n; ++J) coeffs(ea, J) += xv(J);
    // - x (x) 1
    for (int I = 0; I < n * n; ++I) coeffs(I, ea) -= xv(I);
  }
  return OneForm::raw(n, std::move(coeffs));
}

OneForm mod_act(const Matrix& a, const OneForm& omega, const Matrix& b) {
  int n = omega.dim();
  Matrix la = left_mult(a).mat();
  Matrix rb = right_mult(b).mat();
  return OneForm::raw(n, Matrix(la * omega.coeffs() * rb.transpose()));
}

OneForm star(const OneForm& omega) {
  int n = omega.dim();
  Matrix out(n * n, n * n);
  for (int i1 = 0; i1 < n; ++i1)
    for (int j1 = 0; j1 < n; ++j1)
      for (int i2 = 0; i2 < n; ++i2)
        for (int j2 = 0; j2 < n; ++j2)
          out(unit_index(n, j2, i2), unit_index(n, j1, i1)) =
              std::conj(omega.coeff(i1, j1, i2, j2));
  return OneForm::raw(n, std::move(out));
}

TwoForm star(const TwoForm& xi) {
  int n = xi.dim();
  int nn = n * n;
  Vector out(xi.tensor().size());
  auto flip = [n](int I) {
    int i = I % n, j = I / n;
    return unit_index(n, j, i);
  };
  for (int I = 0; I < nn; ++I)
    for (int J = 0; J < nn; ++J)
      for (int K = 0; K < nn; ++K)
        out(idx3(n, flip(K), flip(J), flip(I))) = std::conj(xi.entry(I, J, K));
  return TwoForm::raw(n, std::move(out));
}

TwoForm wedge(const OneForm& w1, const OneForm& w2) {
  if (w1.dim() != w2.dim()) throw DimensionMismatch("wedge dims differ");
  int n = w1.dim();
  int nn = n * n;
  Vector out = Vector::Zero(static_cast<long>(nn) * nn * nn);
  // (E_I (x) E_{m k})(E_{k p} (x) E_J) = E_I (x) E_{m p} (x) E_J.
  const Matrix& c1 = w1.coeffs();
  const Matrix& c2 = w2.coeffs();
  for (int I = 0; I < nn; ++I)
    for (int m = 0; m < n; ++m)
      for (int p = 0; p < n; ++p) {
        int mid = unit_index(n, m, p);
        for (int J = 0; J < nn; ++J) {
          Complex s = 0.0;
          for (int k = 0; k < n; ++k)
            s += c1(I, unit_index(n, m, k)) * c2(unit_index(n, k, p), J);
          if (s != 0.0) out(idx3(n, I, mid, J)) += s;
        }
      }
  return TwoForm::raw(n, std::move(out));
}

OneForm mod_lift(const StateAlgebra& sa, const OneForm& omega, Complex z) {
  int n = omega.dim();
  if (n != sa.dim()) throw DimensionMismatch("form and algebra dims differ");
  Matrix s = super_from_map(n, [&](const Matrix& x) { return sa.modular(x, z); }).mat();
  return OneForm::raw(n, Matrix(s * omega.coeffs() * s.transpose()));
}

TwoForm mod_lift(const StateAlgebra& sa, const TwoForm& xi, Complex z) {
  int n = xi.dim();
  if (n != sa.dim()) throw DimensionMismatch("form and algebra dims differ");
  Matrix s = super_from_map(n, [&](const Matrix& x) { return sa.modular(x, z); }).mat();
  int nn = n * n;
  // Mode products along the three legs.
  Vector cur = xi.tensor();
  Vector nxt(cur.size());
  // Leg 1.
  for (int J = 0; J < nn; ++J)
    for (int K = 0; K < nn; ++K)
      for (int I2 = 0; I2 < nn; ++I2) {
        Complex acc = 0.0;
        for (int I = 0; I < nn; ++I) acc += s(I2, I) * cur(idx3(n, I, J, K));
        nxt(idx3(n, I2, J, K)) = acc;
      }
  cur.swap(nxt);
  // Leg 2.
  for (int I = 0; I < nn; ++I)
    for (int K = 0; K < nn; ++K)
      for (int J2 = 0; J2 < nn; ++J2) {
        Complex acc = 0.0;
        for (int J = 0; J < nn; ++J) acc += s(J2, J) * cur(idx3(n, I, J, K));
        nxt(idx3(n, I, J2, K)) = acc;
      }
  cur.swap(nxt);
  // Leg 3.
  for (int I = 0; I < nn; ++I)
    for (int J = 0; J < nn; ++J)
      for (int K2 = 0; K2 < nn; ++K2) {
        Complex acc = 0.0;
        for (int K = 0; K < nn; ++K) acc += s(K2, K) * cur(idx3(n, I, J, K));
        nxt(idx3(n, I, J, K2)) = acc;
      }
  return TwoForm::raw(n, std::move(nxt));
}

OneForm sharp(const StateAlgebra& sa, const OneForm& omega) {
  return mod_lift(sa, star(omega), Complex(0, 0.5));
}

Matrix theta_apply(const Superoperator& l, const TwoForm& xi) {
  int n = xi.dim();
  if (l.dim() != n) throw DimensionMismatch("generator and form dims differ");
  int nn = n * n;
  std::vector<Matrix> table(nn);
  for (int J = 0; J < nn; ++J)
    table[J] = l.apply(unit_matrix(n, J % n, J / n));
  Matrix out = Matrix::Zero(n, n);
  // E_ab X E_ef = X[b,e] E_af.
  for (int I = 0; I < nn; ++I) {
    int a = I % n, b = I / n;
    for (int J = 0; J < nn; ++J)
      for (int K = 0; K < nn; ++K) {
        Complex c = xi.entry(I, J, K);
        if (c == 0.0) continue;
        int e = K % n, f = K / n;
        out(a, f) -= c * table[J](b, e);
      }
  }
  return out;
}

Complex symbol_apply(const StateAlgebra& sa, const Superoperator& l, const TwoForm& xi) {
  int n = xi.dim();
  if (l.dim() != n || sa.dim() != n)
    throw DimensionMismatch("symbol dims differ");
  int nn = n * n;
  std::vector<Matrix> table(nn);
  for (int J = 0; J < nn; ++J)
    table[J] = l.apply(unit_matrix(n, J % n, J / n));
  const Matrix& om = sa.omega();
  Complex out = 0.0;
  // sigma_L(E_ab (x) E_cd (x) E_ef) = -L(E_cd)[b,e] omega[f,a].
  for (int I = 0; I < nn; ++I) {
    int a = I % n, b = I / n;
    for (int J = 0; J < nn; ++J)
      for (int K = 0; K < nn; ++K) {
        Complex c = xi.entry(I, J, K);
        if (c == 0.0) continue;
        int e = K % n, f = K / n;
        out -= c * table[J](b, e) * om(f, a);
      }
  }
  return out;
}

double first_order_residual(const Superoperator& l) {
  int n = l.dim();
  int nn = n * n;
  std::vector<Matrix> table(nn);
  for (int J = 0; J < nn; ++J)
    table[J] = l.apply(unit_matrix(n, J % n, J / n));
  auto tbl = [&](int i, int j) -> const Matrix& { return table[unit_index(n, i, j)]; };
  double worst = 0.0;
  // x = E_ab, a = E_cd, y = E_ef; unit products collapse to units.
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int dd = 0; dd < n; ++dd)
          for (int e = 0; e < n; ++e)
            for (int f = 0; f < n; ++f) {
              Matrix r = Matrix::Zero(n, n);
              if (b == c && dd == e) r += tbl(a, f);                    // L(xay)
              if (dd == e) r -= unit_matrix(n, a, b) * tbl(c, f);       // x L(ay)
              if (b == c) r -= tbl(a, dd) * unit_matrix(n, e, f);       // L(xa) y
              r += unit_matrix(n, a, b) * tbl(c, dd) * unit_matrix(n, e, f);
              worst = std::max(worst, r.norm());
            }
  return worst;
}

bool is_first_order(const Superoperator& l) {
  return first_order_residual(l) <= tol().eq * std::max(1.0, l.norm());
}

// ---------------------------------------------------------------------------
// kermu basis
// ---------------------------------------------------------------------------

namespace {

KermuBasis build_kermu(int n) {
  KermuBasis basis;
  basis.n = n;
  // Off-diagonal singles E_ab (x) E_cd with b != c never hit the
  // contraction; for each (a, d) the n-dimensional family E_ab (x) E_bd
  // contributes its zero-sum subspace, spanned by the Helmert vectors.
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        if (b == c) continue;
        for (int dd = 0; dd < n; ++dd)
          basis.sparse.push_back({{1.0, a, b, c, dd}});
      }
  for (int a = 0; a < n; ++a)
    for (int dd = 0; dd < n; ++dd)
      for (int k = 1; k < n; ++k) {
        std::vector<KermuTerm> terms;
        double norm = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
        for (int b = 0; b < k; ++b) terms.push_back({norm, a, b, b, dd});
        terms.push_back({-k * norm, a, k, k, dd});
        basis.sparse.push_back(std::move(terms));
      }
  for (const auto& terms : basis.sparse) {
    Matrix coeffs = Matrix::Zero(n * n, n * n);
    for (const auto& t : terms)
      coeffs(unit_index(n, t.a, t.b), unit_index(n, t.c, t.d)) += t.coef;
    basis.forms.push_back(OneForm::raw(n, std::move(coeffs)));
  }
  return basis;
}

}  // namespace

const KermuBasis& kermu_basis(int n) {
  static std::mutex mu;
  static std::map<int, KermuBasis> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_kermu(n)).first;
  return it->second;
}

OneForm kermu_combine(const KermuBasis& basis, const Vector& c) {
  if (c.size() != basis.size())
    throw DimensionMismatch("coordinate vector does not match basis size");
  int n = basis.n;
  Matrix coeffs = Matrix::Zero(n * n, n * n);
  for (int r = 0; r < basis.size(); ++r)
    for (const auto& t : basis.sparse[r])
      coeffs(unit_index(n, t.a, t.b), unit_index(n, t.c, t.d)) += c(r) * t.coef;
  return OneForm::raw(n, std::move(coeffs));
}

}  // namespace dynvar
