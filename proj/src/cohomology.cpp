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

#include "dynvar/cohomology.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace dynvar {
namespace {

int pow_int(int base, int exp) {
  int r = 1;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Superoperator matrix of a -> h^-1 a h, used for the twisted argument.
Matrix delta_inv_mat(const StateAlgebra& sa) {
  return super_from_map(sa.dim(), [&](const Matrix& x) { return sa.delta_inv(x); }).mat();
}

}  // namespace

ModularCochain ModularCochain::make(const StateAlgebra& sa, int degree, Vector tensor) {
  if (degree < 0 || degree > 2) throw NotACochain("degree must be 0, 1 or 2");
  const int want = pow_int(sa.dim() * sa.dim(), degree + 1);
  if (tensor.size() != want) throw NotACochain("tensor has wrong size for degree");
  const double resid = cochain_residual(sa, degree, tensor);
  if (resid > tol().eq * std::max(1.0, max_abs(tensor)))
    throw NotACochain("twisted cyclicity fails, residual " + std::to_string(resid));
  return ModularCochain(sa.dim(), degree, std::move(tensor));
}

ModularCochain ModularCochain::raw(int n, int degree, Vector tensor) {
  return ModularCochain(n, degree, std::move(tensor));
}

Complex ModularCochain::apply(const std::vector<Matrix>& args) const {
  if (static_cast<int>(args.size()) != degree_ + 1)
    throw DimensionMismatch("cochain applied to wrong number of arguments");
  const int nn = n_ * n_;
  // Contract the last slot first; slot k has stride nn^(degree - k).
  Vector cur = tensor_;
  for (int k = degree_; k >= 0; --k) {
    const Matrix& a = args[static_cast<size_t>(k)];
    if (a.rows() != n_ || a.cols() != n_)
      throw DimensionMismatch("cochain argument has wrong dimension");
    const Vector coeff = vec(a);
    const int rows = static_cast<int>(cur.size()) / nn;
    Vector next(rows);
    for (int r = 0; r < rows; ++r)
      next(r) = cur.segment(static_cast<Eigen::Index>(r) * nn, nn).cwiseProduct(coeff).sum();
    cur = next;
  }
  return cur(0);
}

double cochain_residual(const StateAlgebra& sa, int degree, const Vector& tensor) {
  const int n = sa.dim();
  const int nn = n * n;
  const int want = pow_int(nn, degree + 1);
  if (tensor.size() != want) throw NotACochain("tensor has wrong size for degree");
  const Matrix dinv = delta_inv_mat(sa);
  const double sign = (degree % 2 == 0) ? 1.0 : -1.0;
  const int tail = pow_int(nn, degree);  // stride of slot 0
  double worst = 0.0;
  for (int idx = 0; idx < want; ++idx) {
    const int last = idx % nn;       // index of the final argument
    const int head = idx / nn;       // packed indices of the leading arguments
    // Twisted value: move the last argument to the front through delta_inv.
    Complex tw = 0.0;
    for (int k = 0; k < nn; ++k) {
      const Complex c = dinv(k, last);
      if (c == Complex(0.0)) continue;
      tw += c * tensor(static_cast<Eigen::Index>(k) * tail + head);
    }
    worst = std::max(worst, std::abs(tensor(idx) - sign * tw));
  }
  return worst;
}

bool is_cochain(const StateAlgebra& sa, int degree, const Vector& tensor) {
  return cochain_residual(sa, degree, tensor) <=
         tol().eq * std::max(1.0, max_abs(tensor));
}

ModularCochain coboundary(const StateAlgebra& sa, const ModularCochain& phi) {
  const int n = sa.dim();
  if (phi.dim() != n) throw DimensionMismatch("cochain dimension mismatch");
  const int nn = n * n;
  const Matrix dinv = delta_inv_mat(sa);
  const Vector& t = phi.tensor();

  if (phi.degree() == 0) {
    // b(psi)(a, x) = psi(a x) - psi(deltainv(x) a).
    Vector out(static_cast<Eigen::Index>(nn) * nn);
    for (int i = 0; i < nn; ++i) {
      const int a = i % n, b = i / n;
      for (int j = 0; j < nn; ++j) {
        const int c = j % n, d = j / n;
        Complex val = 0.0;
        if (b == c) val += t(unit_index(n, a, d));
        // deltainv(E_j) E_ab has column b equal to column a of deltainv(E_j).
        for (int r = 0; r < n; ++r) {
          const Complex x = dinv(unit_index(n, r, a), j);
          if (x != Complex(0.0)) val -= x * t(unit_index(n, r, b));
        }
        out(static_cast<Eigen::Index>(i) * nn + j) = val;
      }
    }
    return ModularCochain::make(sa, 1, std::move(out));
  }

  if (phi.degree() == 1) {
    // b(phi)(a, x, y) = phi(ax, y) - phi(a, xy) + phi(deltainv(y) a, x).
    Vector out(static_cast<Eigen::Index>(nn) * nn * nn);
    for (int i = 0; i < nn; ++i) {
      const int a = i % n, b = i / n;
      for (int j = 0; j < nn; ++j) {
        const int c = j % n, d = j / n;
        for (int k = 0; k < nn; ++k) {
          const int e = k % n, f = k / n;
          Complex val = 0.0;
          if (b == c) val += t(static_cast<Eigen::Index>(unit_index(n, a, d)) * nn + k);
          if (d == e) val -= t(static_cast<Eigen::Index>(i) * nn + unit_index(n, c, f));
          for (int r = 0; r < n; ++r) {
            const Complex x = dinv(unit_index(n, r, a), k);
            if (x != Complex(0.0))
              val += x * t(static_cast<Eigen::Index>(unit_index(n, r, b)) * nn + j);
          }
          out((static_cast<Eigen::Index>(i) * nn + j) * nn + k) = val;
        }
      }
    }
    return ModularCochain::make(sa, 2, std::move(out));
  }

  throw NotACochain("coboundary implemented for degrees 0 and 1 only");
}

Matrix zero_cochain_rep(const StateAlgebra& sa, const ModularCochain& phi) {
  if (phi.degree() != 0) throw NotACochain("representation needs a degree-0 cochain");
  const int n = sa.dim();
  if (phi.dim() != n) throw DimensionMismatch("cochain dimension mismatch");
  // psi(E_ij) = rho(E_ij p) = (p omega)[j, i], so p omega is determined
  // entrywise and omega is invertible.
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(j, i) = phi.tensor()(unit_index(n, i, j));
  Matrix p = m * sa.omega().inverse();
  const double fix = fnorm(sa.delta(p) - p);
  if (fix > tol().eq * std::max(1.0, fnorm(p)))
    throw InternalInconsistency("degree-0 representative not fixed by the modular map");
  return p;
}

Matrix omega_form(const StateAlgebra& sa, const Superoperator& l) {
  const int n = sa.dim();
  if (l.dim() != n) throw DimensionMismatch("generator dimension mismatch");
  const int nn = n * n;
  const Matrix& om = sa.omega();
  std::vector<Matrix> tab(static_cast<size_t>(nn));
  std::vector<Matrix> tab_om(static_cast<size_t>(nn));
  std::vector<Matrix> om_tab(static_cast<size_t>(nn));
  for (int j = 0; j < nn; ++j) {
    tab[static_cast<size_t>(j)] = l.apply(unit_matrix(n, j % n, j / n));
    tab_om[static_cast<size_t>(j)] = tab[static_cast<size_t>(j)] * om;
    om_tab[static_cast<size_t>(j)] = om * tab[static_cast<size_t>(j)];
  }
  Matrix w(nn, nn);
  for (int i = 0; i < nn; ++i) {
    const int a = i % n, b = i / n;
    for (int j = 0; j < nn; ++j) {
      const int c = j % n, d = j / n;
      w(i, j) = tab_om[static_cast<size_t>(j)](b, a) - om_tab[static_cast<size_t>(i)](d, c);
    }
  }
  return w;
}

double kms_pair_defect(const StateAlgebra& sa,
                       const std::function<Complex(int, int, int, int, int, int)>& f,
                       double* scale_out) {
  const int n = sa.dim();
  const int nn = n * n;
  const int np = nn * nn;  // number of spanning one-forms E_A d(E_B)

  // Sparse unit terms of each spanning form: coef * E_pq (x) E_uv.
  struct Term {
    double coef;
    int p, q, u, v;
  };
  std::vector<std::vector<Term>> terms(static_cast<size_t>(np));
  for (int A = 0; A < nn; ++A) {
    const int a = A % n, b = A / n;
    for (int B = 0; B < nn; ++B) {
      const int c = B % n, d = B / n;
      auto& list = terms[static_cast<size_t>(A * nn + B)];
      list.push_back({1.0, a, b, c, d});
      if (b == c)
        for (int e = 0; e < n; ++e) list.push_back({-1.0, a, d, e, e});
    }
  }

  Matrix s2(np, np);
  for (int P = 0; P < np; ++P) {
    for (int Q = 0; Q < np; ++Q) {
      Complex acc = 0.0;
      for (const Term& t : terms[static_cast<size_t>(P)])
        for (const Term& s : terms[static_cast<size_t>(Q)]) {
          if (t.v != s.p) continue;
          acc += t.coef * s.coef * f(t.p, t.q, t.u, s.q, s.u, s.v);
        }
      s2(P, Q) = acc;
    }
  }

  // Coordinates of the modular lift of each spanning form in the spanning
  // family itself, by least squares on raw coefficient matrices.
  Matrix fm(np, np), fd(np, np);
  const Vector one = vec(Matrix::Identity(n, n));
  for (int A = 0; A < nn; ++A) {
    const Matrix ea = unit_matrix(n, A % n, A / n);
    const Matrix da = sa.delta(ea);
    for (int B = 0; B < nn; ++B) {
      const Matrix eb = unit_matrix(n, B % n, B / n);
      const Matrix db = sa.delta(eb);
      Matrix c0 = vec(ea) * vec(eb).transpose() - vec(ea * eb) * one.transpose();
      Matrix c1 = vec(da) * vec(db).transpose() - vec(da * db) * one.transpose();
      fm.col(A * nn + B) = Eigen::Map<Vector>(c0.data(), np);
      fd.col(A * nn + B) = Eigen::Map<Vector>(c1.data(), np);
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(fm);
  Matrix w = cod.solve(fd);
  const double fit = (fm * w - fd).cwiseAbs().maxCoeff();
  if (fit > 1e-8 * std::max(1.0, max_abs(fd)))
    throw InternalInconsistency("modular lift left the one-form spanning family");

  const Matrix rhs = s2 * w;  // rhs(Q, P) = f(w_Q wedge lift(w_P))
  const double scale = std::max(1.0, max_abs(s2));
  if (scale_out) *scale_out = scale;

  double worst = 0.0;
  if (n <= 3) {
    for (int P = 0; P < np; ++P)
      for (int Q = 0; Q < np; ++Q)
        worst = std::max(worst, std::abs(s2(P, Q) - rhs(Q, P)));
  } else {
    Rng rng(0xD1CE0000ull + static_cast<uint64_t>(n));
    for (int k = 0; k < 2000; ++k) {
      const int P = static_cast<int>(rng.integer(static_cast<uint64_t>(np)));
      const int Q = static_cast<int>(rng.integer(static_cast<uint64_t>(np)));
      worst = std::max(worst, std::abs(s2(P, Q) - rhs(Q, P)));
    }
  }
  return worst;
}

namespace {

// Criterion (ii): solve rho(x [w, y]) = W(x, y) in least squares, then split
// off the scalar ambiguity and center. Returns the relative defect and the
// centered skew solution.
struct PotentialSolve {
  double defect = 0.0;
  Matrix v;
};

PotentialSolve solve_potential(const StateAlgebra& sa, const Matrix& w_omega) {
  const int n = sa.dim();
  const int nn = n * n;
  const Matrix& om = sa.omega();
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(nn) * nn, nn);
  for (int i = 0; i < nn; ++i) {
    const int ai = i % n, bi = i / n;
    for (int j = 0; j < nn; ++j) {
      const int cj = j % n, dj = j / n;
      const Eigen::Index row = static_cast<Eigen::Index>(j) * nn + i;
      a(row, unit_index(n, bi, cj)) += om(dj, ai);
      for (int s = 0; s < n; ++s)
        if (bi == cj) a(row, unit_index(n, dj, s)) -= om(s, ai);
    }
  }
  const Vector rhs = Eigen::Map<const Vector>(w_omega.data(), w_omega.size());
  Vector sol = a.completeOrthogonalDecomposition().solve(rhs);
  Matrix w = devec(sol, n);

  const double scale = std::max(1.0, max_abs(w_omega));
  double defect = (a * sol - rhs).cwiseAbs().maxCoeff() / scale;

  // Solutions are unique up to scalars; the hermitian part must be scalar.
  Matrix herm = (w + w.adjoint()) / 2.0;
  herm -= (herm.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
  defect = std::max(defect, max_abs(herm) / std::max(1.0, fnorm(w)));

  Matrix v = (w - w.adjoint()) / 2.0;
  v -= sa.rho(v) * Matrix::Identity(n, n);
  defect = std::max(defect, fnorm(sa.delta(v) - v) / std::max(1.0, fnorm(v)));
  return {defect, std::move(v)};
}

// Criterion (i): least squares for W = coboundary of a degree-0 cochain,
// parameterized over the subspace cut out by the cyclicity constraint.
double solve_coboundary(const StateAlgebra& sa, const Matrix& w_omega) {
  const int n = sa.dim();
  const int nn = n * n;
  const Matrix dinv = delta_inv_mat(sa);
  const Matrix con = Matrix::Identity(nn, nn) - dinv.transpose();
  Eigen::JacobiSVD<Matrix> svd(con, Eigen::ComputeFullV);
  const auto& sing = svd.singularValues();
  const double smax = sing.size() ? sing(0) : 0.0;
  int null_dim = 0;
  for (Eigen::Index k = sing.size() - 1; k >= 0; --k) {
    if (sing(k) <= 1e-8 * std::max(smax, 1.0))
      ++null_dim;
    else
      break;
  }
  if (null_dim == 0) throw InternalInconsistency("modular fixed subspace is empty");
  const Matrix null_basis = svd.matrixV().rightCols(null_dim);

  Matrix b = Matrix::Zero(static_cast<Eigen::Index>(nn) * nn, nn);
  for (int i = 0; i < nn; ++i) {
    const int ai = i % n, bi = i / n;
    for (int j = 0; j < nn; ++j) {
      const int cj = j % n, dj = j / n;
      const Eigen::Index row = static_cast<Eigen::Index>(j) * nn + i;
      if (bi == cj) b(row, unit_index(n, ai, dj)) += 1.0;
      for (int r = 0; r < n; ++r) b(row, unit_index(n, r, bi)) -= dinv(unit_index(n, r, ai), j);
    }
  }
  const Matrix bn = b * null_basis;
  const Vector rhs = Eigen::Map<const Vector>(w_omega.data(), w_omega.size());
  const Vector y = bn.completeOrthogonalDecomposition().solve(rhs);
  return (bn * y - rhs).cwiseAbs().maxCoeff() / std::max(1.0, max_abs(w_omega));
}

}  // namespace

ExactnessReport exactness_report(const StateAlgebra& sa, const Superoperator& l) {
  const int n = sa.dim();
  const auto rep = in_domain(sa, l);
  if (!rep.ok()) throw DomainViolation("generator outside the admissible domain");

  const Matrix w_omega = omega_form(sa, l);
  const double scale_w = std::max(1.0, max_abs(w_omega));

  ExactnessReport out;

  out.residual_coboundary = solve_coboundary(sa, w_omega);
  out.coboundary_solve = out.residual_coboundary <= tol().eq;

  PotentialSolve pot = solve_potential(sa, w_omega);
  out.residual_potential = pot.defect;
  out.potential_solve = pot.defect <= tol().eq;

  const Superoperator diff = l - adjoint_gns(sa, l);
  out.residual_derivation = derivation_residual(diff);
  out.derivation_difference =
      out.residual_derivation <= tol().eq * std::max(1.0, diff.norm());

  const Matrix& om = sa.omega();
  const int nn = n * n;
  std::vector<Matrix> tab(static_cast<size_t>(nn));
  for (int j = 0; j < nn; ++j) tab[static_cast<size_t>(j)] = l.apply(unit_matrix(n, j % n, j / n));
  double scale_kms = 1.0;
  out.residual_kms = kms_pair_defect(
      sa,
      [&](int a, int b, int c, int d, int e, int f) {
        return -tab[static_cast<size_t>(unit_index(n, c, d))](b, e) * om(f, a);
      },
      &scale_kms);
  out.kms_symbol = out.residual_kms <= tol().eq * scale_kms;

  const int yes = (out.coboundary_solve ? 1 : 0) + (out.potential_solve ? 1 : 0) +
                  (out.derivation_difference ? 1 : 0) + (out.kms_symbol ? 1 : 0);
  if (yes != 0 && yes != 4) {
    std::ostringstream msg;
    msg << "exactness criteria disagree: coboundary=" << out.residual_coboundary
        << " potential=" << out.residual_potential
        << " derivation=" << out.residual_derivation << " kms=" << out.residual_kms
        << " (scale " << scale_w << ")";
    throw InternalInconsistency(msg.str());
  }
  out.exact = yes == 4;

  if (out.exact) {
    Matrix v = pot.v / 2.0;
    const Superoperator check = diff - ad(v) * Complex(2.0);
    if (check.norm() > tol().eq * std::max(1.0, l.norm()))
      throw InternalInconsistency("potential does not reproduce the skew part");
    out.v = std::move(v);
  }
  return out;
}

}  // namespace dynvar
