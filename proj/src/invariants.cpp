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

#include "dynvar/invariants.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dynvar {
namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double kernel_scale(const std::vector<Matrix>& kernel) {
  double s = 0.0;
  for (const Matrix& k : kernel) s = std::max(s, max_abs(k));
  return s;
}

// K(x, y) = -1/2 (L(xy) - L(x) y - x L(y)) on matrix-unit pairs.
std::vector<Matrix> symbol_kernel(const StateAlgebra& sa, const Superoperator& l) {
  const int n = sa.dim();
  const int nn = n * n;
  std::vector<Matrix> tab(static_cast<size_t>(nn));
  for (int j = 0; j < nn; ++j) tab[static_cast<size_t>(j)] = l.apply(unit_matrix(n, j % n, j / n));
  std::vector<Matrix> kernel(static_cast<size_t>(nn) * nn);
  for (int i = 0; i < nn; ++i) {
    const Matrix ei = unit_matrix(n, i % n, i / n);
    for (int j = 0; j < nn; ++j) {
      const Matrix ej = unit_matrix(n, j % n, j / n);
      kernel[static_cast<size_t>(i) * nn + j] =
          -0.5 * (l.apply(ei * ej) - tab[static_cast<size_t>(i)] * ej -
                  ei * tab[static_cast<size_t>(j)]);
    }
  }
  return kernel;
}

}  // namespace

KmsMetric::KmsMetric(StateAlgebra sa, std::vector<Matrix> kernel)
    : sa_(std::move(sa)), kernel_(std::move(kernel)) {
  kernel_omega_.reserve(kernel_.size());
  for (const Matrix& k : kernel_) kernel_omega_.push_back(k * sa_.omega());
}

KmsMetric KmsMetric::raw(const StateAlgebra& sa, std::vector<Matrix> kernel) {
  return KmsMetric(sa, std::move(kernel));
}

KmsMetric KmsMetric::from_kernel(const StateAlgebra& sa, std::vector<Matrix> kernel) {
  const int n = sa.dim();
  const size_t nn = static_cast<size_t>(n) * static_cast<size_t>(n);
  if (kernel.size() != nn * nn) throw DimensionMismatch("metric kernel has wrong length");
  for (const Matrix& k : kernel)
    if (k.rows() != n || k.cols() != n)
      throw DimensionMismatch("metric kernel entry has wrong dimension");

  const double scale = kernel_scale(kernel);
  const RealVector spec = metric_gram_spectrum(sa, kernel);
  if (spec.size()) {
    const double lo = spec(0), hi = spec(spec.size() - 1);
    if (lo < -(tol().psd_rel * std::max(hi, 0.0) + tol().floor * std::max(1.0, scale)))
      throw NotPositiveDefinite("metric fails positivity, lowest gram eigenvalue " +
                                std::to_string(lo));
  }

  KmsMetric g(sa, std::move(kernel));
  double kms_scale = 1.0;
  const int nn_i = n * n;
  const double defect = kms_pair_defect(
      sa,
      [&](int a, int b, int c, int d, int e, int f) {
        return g.kernel_omega_[static_cast<size_t>(unit_index(n, c, d)) * nn_i +
                               unit_index(n, e, f)](b, a);
      },
      &kms_scale);
  if (defect > tol().eq * kms_scale)
    throw NotKms("metric fails the modular pair identity, defect " + std::to_string(defect));
  return g;
}

const Matrix& KmsMetric::kernel(int i1, int j1, int i2, int j2) const {
  const int n = sa_.dim();
  return kernel_[static_cast<size_t>(unit_index(n, i1, j1)) * (n * n) + unit_index(n, i2, j2)];
}

Complex KmsMetric::eval_triple(const Matrix& a, const Matrix& x, const Matrix& y) const {
  const int n = sa_.dim();
  if (a.rows() != n || x.rows() != n || y.rows() != n)
    throw DimensionMismatch("metric argument has wrong dimension");
  const Vector xv = vec(x), yv = vec(y);
  Matrix acc = Matrix::Zero(n, n);
  for (int i = 0; i < n * n; ++i) {
    if (xv(i) == Complex(0.0)) continue;
    for (int j = 0; j < n * n; ++j) {
      if (yv(j) == Complex(0.0)) continue;
      acc += xv(i) * yv(j) * kernel_[static_cast<size_t>(i) * (n * n) + j];
    }
  }
  return sa_.rho(a * acc);
}

Complex KmsMetric::eval(const TwoForm& xi) const {
  const int n = sa_.dim();
  if (xi.dim() != n) throw DimensionMismatch("two-form dimension mismatch");
  const int nn = n * n;
  const Vector& t = xi.tensor();
  Complex acc = 0.0;
  for (int i = 0; i < nn; ++i) {
    const int a = i % n, b = i / n;
    for (int j = 0; j < nn; ++j)
      for (int k = 0; k < nn; ++k) {
        const Complex c = t((static_cast<Eigen::Index>(i) * nn + j) * nn + k);
        if (c == Complex(0.0)) continue;
        acc += c * kernel_omega_[static_cast<size_t>(j) * nn + k](b, a);
      }
  }
  return acc;
}

double KmsMetric::scale() const { return kernel_scale(kernel_); }

RealVector metric_gram_spectrum(const StateAlgebra& sa, const std::vector<Matrix>& kernel) {
  const int n = sa.dim();
  const int nn = n * n;
  std::vector<Matrix> komega(kernel.size());
  for (size_t i = 0; i < kernel.size(); ++i) komega[i] = kernel[i] * sa.omega();
  const KermuBasis& basis = kermu_basis(n);
  const int dim = basis.size();
  Matrix h = Matrix::Zero(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int s = r; s < dim; ++s) {
      Complex acc = 0.0;
      for (const KermuTerm& t : basis.sparse[static_cast<size_t>(r)])
        for (const KermuTerm& u : basis.sparse[static_cast<size_t>(s)]) {
          if (t.a != u.a) continue;
          acc += t.coef * u.coef *
                 komega[static_cast<size_t>(unit_index(n, t.b, u.b)) * nn +
                        unit_index(n, u.c, u.d)](t.c, t.d);
        }
      h(r, s) = acc;
      if (s != r) h(s, r) = std::conj(acc);
    }
  }
  h = (h + h.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  return es.eigenvalues();
}

KmsMetric metric_from_generator(const StateAlgebra& sa, const Superoperator& l) {
  const int n = sa.dim();
  if (l.dim() != n) throw DimensionMismatch("generator dimension mismatch");
  const auto rep = in_domain(sa, l);
  if (!rep.ok()) throw DomainViolation("generator outside the admissible domain");

  const EllipticityResult er = is_elliptic_form(sa, l);
  const ChoiResult cr = is_elliptic_ccp(sa, l);
  if (er.elliptic != cr.elliptic)
    throw InternalInconsistency("ellipticity oracles disagree");
  if (!er.elliptic) throw NotElliptic("generator has an indefinite symbol");

  const ExactnessReport ex = exactness_report(sa, l);
  if (!ex.exact) throw NotExact("generator obstruction is not a coboundary");

  return KmsMetric::from_kernel(sa, symbol_kernel(sa, l));
}

Superoperator reconstruct_laplacian(const StateAlgebra& sa, const KmsMetric& g) {
  const int n = sa.dim();
  if (g.dim() != n) throw DimensionMismatch("metric dimension mismatch");
  const Matrix om_inv = sa.omega().inverse();
  Matrix mat(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Matrix c(n, n);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) c(l, k) = (sa.omega() * g.kernel(i, j, k, l)).trace();
      mat.col(unit_index(n, i, j)) = vec(om_inv * c);
    }
  return Superoperator(n, std::move(mat));
}

MomentumSpace decompose_metric(const StateAlgebra& sa, const KmsMetric& g,
                               const DecomposeOptions& opts) {
  const int n = sa.dim();
  const int nn = n * n;
  const Superoperator delta_op = reconstruct_laplacian(sa, g);
  const Matrix j = choi_matrix(delta_op);
  Vector me = vec(Matrix::Identity(n, n));
  me /= me.norm();
  const Matrix q = Matrix::Identity(nn, nn) - me * me.adjoint();
  Matrix c = 0.5 * (q * j * q);
  c = (c + c.adjoint()) / 2.0;
  const double scale = std::max(1.0, max_abs(c));

  // Eigenvectors of the seed matrix, optionally through a permuted copy so
  // that eigensolver ordering quirks cannot leak into the result.
  Matrix vecs;
  RealVector vals;
  if (opts.perm_seed) {
    Rng rng(*opts.perm_seed);
    std::vector<int> perm(static_cast<size_t>(nn));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = nn - 1; i > 0; --i) {
      const int k = static_cast<int>(rng.integer(static_cast<uint64_t>(i) + 1));
      std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(k)]);
    }
    Matrix cp(nn, nn);
    for (int a = 0; a < nn; ++a)
      for (int b = 0; b < nn; ++b) cp(a, b) = c(perm[static_cast<size_t>(a)], perm[static_cast<size_t>(b)]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(cp);
    vals = es.eigenvalues();
    vecs = Matrix(nn, nn);
    for (int a = 0; a < nn; ++a) vecs.row(perm[static_cast<size_t>(a)]) = es.eigenvectors().row(a);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  }

  const double hi = vals.size() ? vals(vals.size() - 1) : 0.0;
  const double lo = vals.size() ? vals(0) : 0.0;
  if (lo < -(tol().psd_rel * std::max(hi, 0.0) + tol().floor * scale))
    throw NotKms("metric seed matrix is not positive, lowest eigenvalue " + std::to_string(lo));

  const double rank_cut = tol().rank_rel * std::max(hi, 0.0) + tol().floor * scale;
  int m = 0;
  for (Eigen::Index k = 0; k < vals.size(); ++k)
    if (vals(k) > rank_cut) ++m;

  std::vector<Matrix> momenta;
  if (m > 0) {
    std::vector<Matrix> range(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k)
      range[static_cast<size_t>(k)] = devec(vecs.col(nn - m + k), n);

    // Real skew combinations x = sum (s_k + i t_k) X_k, found as the null
    // space of the hermitian-part map.
    RealMatrix rows(2 * nn, 2 * m);
    for (int k = 0; k < m; ++k) {
      const Vector sym = vec(Matrix(range[static_cast<size_t>(k)] +
                                    range[static_cast<size_t>(k)].adjoint()));
      const Vector asym = vec(Matrix(Complex(0.0, 1.0) *
                                     (range[static_cast<size_t>(k)] -
                                      range[static_cast<size_t>(k)].adjoint())));
      rows.col(k) << sym.real(), sym.imag();
      rows.col(m + k) << asym.real(), asym.imag();
    }
    Eigen::JacobiSVD<RealMatrix> svd(rows, Eigen::ComputeFullV);
    const auto& sing = svd.singularValues();
    const double smax = sing.size() ? sing(0) : 0.0;
    int null_dim = 0;
    for (Eigen::Index k = 0; k < sing.size(); ++k)
      if (sing(k) <= 1e-8 * std::max(smax, 1.0)) ++null_dim;
    if (null_dim != m)
      throw SkewExtractionFailure("skew subspace has dimension " + std::to_string(null_dim) +
                                  ", expected " + std::to_string(m));
    const RealMatrix null_basis = svd.matrixV().rightCols(m);
    std::vector<Matrix> raw(static_cast<size_t>(m));
    for (int jcol = 0; jcol < m; ++jcol) {
      Matrix y = Matrix::Zero(n, n);
      for (int k = 0; k < m; ++k)
        y += Complex(null_basis(k, jcol), null_basis(m + k, jcol)) * range[static_cast<size_t>(k)];
      raw[static_cast<size_t>(jcol)] = (y - y.adjoint()) / 2.0;  // exact skew projection
    }

    // Pairing carried by the metric: the pseudoinverse of the seed matrix on
    // its range. Real and positive on the recovered skew span.
    Matrix cplus = Matrix::Zero(nn, nn);
    for (int k = 0; k < m; ++k)
      cplus += vecs.col(nn - m + k) * vecs.col(nn - m + k).adjoint() / vals(nn - m + k);
    RealMatrix b(m, m);
    for (int i = 0; i < m; ++i)
      for (int jcol = 0; jcol < m; ++jcol)
        b(i, jcol) = std::real((vec(raw[static_cast<size_t>(jcol)]).adjoint() * cplus *
                                vec(raw[static_cast<size_t>(i)]))(0));
    b = (b + b.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<RealMatrix> bes(b);
    if (bes.eigenvalues()(0) <= tol().rank_rel * std::max(bes.eigenvalues()(m - 1), 0.0))
      throw SingularPairing("metric pairing is singular on the recovered span");
    RealMatrix b_inv_half = RealMatrix::Zero(m, m);
    for (int k = 0; k < m; ++k)
      b_inv_half += bes.eigenvectors().col(k) * bes.eigenvectors().col(k).transpose() /
                    std::sqrt(bes.eigenvalues()(k));

    momenta.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      Matrix p = Matrix::Zero(n, n);
      for (int jcol = 0; jcol < m; ++jcol) p += b_inv_half(jcol, i) * raw[static_cast<size_t>(jcol)];
      p -= sa.rho(p) * Matrix::Identity(n, n);
      momenta[static_cast<size_t>(i)] = std::move(p);
    }
  }

  MomentumSpace out{n, std::move(momenta)};
  for (const Matrix& p : out.basis) {
    const double resid = (p * sa.omega() - sa.omega() * p).norm();
    if (resid > tol().eq * std::max(1.0, p.norm()))
      throw CommutantViolation(
          "recovered momentum fails to commute with the density, residual " +
          std::to_string(resid));
  }
  try {
    validate_momentum_space(sa, out);
  } catch (const InvalidMomentumSpace& e) {
    throw SkewExtractionFailure(std::string("recovered momenta are invalid: ") + e.what());
  }

  // The recovered momenta must reproduce the metric kernel exactly.
  const double kscale = std::max(1.0, g.scale());
  for (int i = 0; i < nn; ++i) {
    const Matrix ei = unit_matrix(n, i % n, i / n);
    for (int jcol = 0; jcol < nn; ++jcol) {
      const Matrix ej = unit_matrix(n, jcol % n, jcol / n);
      Matrix rec = Matrix::Zero(n, n);
      for (const Matrix& p : out.basis) rec -= (p * ei - ei * p) * (p * ej - ej * p);
      if (max_abs(Matrix(rec - g.kernel(i % n, i / n, jcol % n, jcol / n))) > tol().eq * kscale)
        throw ReconstructionMismatch("recovered momenta do not reproduce the metric");
    }
  }
  return out;
}

DynamicalInvariant extract_invariant(const StateAlgebra& sa, const Superoperator& l) {
  if (!in_domain(sa, l).ok()) throw DomainViolation("generator outside the admissible domain");
  const EllipticityResult er = is_elliptic_form(sa, l);
  const ChoiResult cr = is_elliptic_ccp(sa, l);
  if (er.elliptic != cr.elliptic)
    throw InternalInconsistency("ellipticity oracles disagree");
  if (!er.elliptic) throw NotElliptic("generator has an indefinite symbol");
  if (!exactness_report(sa, l).exact)
    throw NotExact("generator obstruction is not a coboundary");

  // The skew half of an exact generator is an inner derivation carrying the
  // potential; the self-adjoint half carries the metric.
  const Superoperator lstar = adjoint_gns(sa, l);
  DynamicalInvariant inv;
  inv.n = sa.dim();
  inv.v = extract_inner_potential(sa, (l - lstar) * 0.5);
  const KmsMetric g =
      KmsMetric::from_kernel(sa, symbol_kernel(sa, (l + lstar) * 0.5));
  MomentumSpace p = decompose_metric(sa, g);
  const Superoperator rebuilt = laplacian(sa, p) + ad(inv.v);
  if ((rebuilt - l).norm() > tol().eq * std::max(1.0, l.norm()))
    throw ReconstructionMismatch("momenta and potential do not rebuild the generator");
  inv.p = std::move(p);
  inv.source_hash = matrix_hash(l.mat());
  return inv;
}

Fingerprint fingerprint(const StateAlgebra& sa, const DynamicalInvariant& inv) {
  const int n = sa.dim();
  Fingerprint f;
  f.m = inv.p.size();

  Eigen::SelfAdjointEigenSolver<Matrix> ev(Matrix(Complex(0.0, -1.0) * inv.v));
  f.spec_v.assign(ev.eigenvalues().data(), ev.eigenvalues().data() + n);

  Matrix qsum = Matrix::Zero(n, n);
  for (const Matrix& p : inv.p.basis) qsum += p * p;
  Eigen::SelfAdjointEigenSolver<Matrix> eq(qsum);
  f.spec_q.assign(eq.eigenvalues().data(), eq.eigenvalues().data() + n);

  Matrix c = Matrix::Zero(n * n, n * n);
  for (const Matrix& p : inv.p.basis) {
    const Matrix pt = p - (p.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
    c += vec(pt) * vec(pt).adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> ec(c);
  for (int k = 0; k < f.m; ++k) f.spec_c.push_back(ec.eigenvalues()(n * n - 1 - k));

  Eigen::SelfAdjointEigenSolver<Matrix> eo(sa.omega());
  for (int k = n - 1; k >= 0; --k) f.spec_state.push_back(eo.eigenvalues()(k));
  return f;
}

bool fingerprints_match(const Fingerprint& a, const Fingerprint& b, double tolerance) {
  if (a.m != b.m) return false;
  auto close = [tolerance](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (size_t k = 0; k < x.size(); ++k)
      if (std::abs(x[k] - y[k]) > tolerance) return false;
    return true;
  };
  return close(a.spec_v, b.spec_v) && close(a.spec_q, b.spec_q) &&
         close(a.spec_c, b.spec_c) && close(a.spec_state, b.spec_state);
}

Matrix momenta_span_projector(int n, const std::vector<Matrix>& ps) {
  const int m = static_cast<int>(ps.size());
  if (m == 0) return Matrix::Zero(n * n, n * n);
  Matrix a(n * n, m);
  for (int k = 0; k < m; ++k) {
    const Matrix& p = ps[static_cast<size_t>(k)];
    if (p.rows() != n || p.cols() != n)
      throw DimensionMismatch("momentum has wrong dimension");
    const Matrix pt = p - (p.trace() / static_cast<double>(n)) * Matrix::Identity(n, n);
    a.col(k) = vec(pt);
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ() * Matrix::Identity(n * n, m);
  return q * q.adjoint();
}

namespace {

// Real coordinates of each transported momentum in the target basis plus the
// least-squares residual; the coordinate matrix is orthogonal exactly when
// the pairing is preserved.
struct FitResult {
  RealMatrix coords;
  double resid = 0.0;
};

FitResult fit_coordinates(const Eigen::CompleteOrthogonalDecomposition<RealMatrix>& cod,
                          const RealMatrix& target_stack, const Matrix& u,
                          const std::vector<Matrix>& ps) {
  const int m = static_cast<int>(ps.size());
  const Eigen::Index rows = target_stack.rows();
  RealMatrix rhs(rows, m);
  for (int k = 0; k < m; ++k) {
    const Vector w = vec(Matrix(u * ps[static_cast<size_t>(k)] * u.adjoint()));
    rhs.col(k) << w.real(), w.imag();
  }
  FitResult out;
  out.coords = cod.solve(rhs);
  out.resid = (target_stack * out.coords - rhs).norm() / std::max(1.0, rhs.norm());
  return out;
}

RealMatrix stack_basis(int n, const std::vector<Matrix>& ps) {
  const int m = static_cast<int>(ps.size());
  RealMatrix a(2 * n * n, std::max(m, 1));
  a.setZero();
  for (int k = 0; k < m; ++k) {
    const Vector w = vec(ps[static_cast<size_t>(k)]);
    a.col(k) << w.real(), w.imag();
  }
  return a.leftCols(m);
}

}  // namespace

ConjugacyReport check_conjugacy(const StateAlgebra& sa, const DynamicalInvariant& a,
                                const DynamicalInvariant& b, const Matrix& u) {
  const int n = sa.dim();
  if (a.n != n || b.n != n || u.rows() != n || u.cols() != n)
    throw DimensionMismatch("conjugacy check dimension mismatch");
  const double unit_defect = fnorm(Matrix(u.adjoint() * u - Matrix::Identity(n, n)));
  if (unit_defect > tol().eq * std::max(1.0, fnorm(u)))
    throw NotUnitary("certificate is not unitary, defect " + std::to_string(unit_defect));

  ConjugacyReport rep;
  rep.state_defect = fnorm(Matrix(u * sa.omega() - sa.omega() * u));
  rep.potential_defect = fnorm(Matrix(u * a.v * u.adjoint() - b.v));

  if (a.p.size() != b.p.size()) {
    rep.span_defect = std::numeric_limits<double>::infinity();
    rep.ok = false;
    return rep;
  }
  const int m = a.p.size();

  const Matrix t = kron(u.conjugate(), u);
  const Matrix pi1 = momenta_span_projector(n, a.p.basis);
  const Matrix pi2 = momenta_span_projector(n, b.p.basis);
  rep.span_defect = fnorm(Matrix(t * pi1 * t.adjoint() - pi2));

  if (m > 0) {
    const RealMatrix stack = stack_basis(n, b.p.basis);
    Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(stack);
    const FitResult fit = fit_coordinates(cod, stack, u, a.p.basis);
    rep.fit_defect = fit.resid;
    rep.gram_defect =
        (fit.coords.transpose() * fit.coords - RealMatrix::Identity(m, m)).norm();
  }

  const double e = tol().eq;
  rep.ok = rep.state_defect <= e * std::max(1.0, fnorm(sa.omega())) &&
           rep.span_defect <= e * std::max(1.0, std::sqrt(static_cast<double>(std::max(m, 1)))) &&
           rep.fit_defect <= e && rep.gram_defect <= e * std::max(1.0, static_cast<double>(m)) &&
           rep.potential_defect <= e * std::max(1.0, fnorm(b.v));
  return rep;
}

namespace {

// Hermitian parameter directions spanning the commutant of the density, in
// the original basis. exp(i H) of any combination is a state-preserving
// unitary, and every such unitary arises this way.
std::vector<Matrix> commutant_directions(const StateAlgebra& sa) {
  const int n = sa.dim();
  const Matrix& ub = sa.eigenbasis();
  std::vector<Matrix> dirs;
  for (const auto& cl : sa.clusters()) {
    for (int x = 0; x < cl.size; ++x)
      for (int y = x; y < cl.size; ++y) {
        const int i = cl.offset + x, j = cl.offset + y;
        if (x == y) {
          dirs.push_back(ub.col(i) * ub.col(i).adjoint());
        } else {
          dirs.push_back(ub.col(i) * ub.col(j).adjoint() + ub.col(j) * ub.col(i).adjoint());
          dirs.push_back(Complex(0.0, 1.0) * ub.col(i) * ub.col(j).adjoint() -
                         Complex(0.0, 1.0) * ub.col(j) * ub.col(i).adjoint());
        }
      }
  }
  return dirs;
}

Matrix unitary_from_params(const std::vector<Matrix>& dirs, const RealVector& x) {
  const int n = static_cast<int>(dirs.front().rows());
  Matrix h = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < x.size(); ++k) h += x(k) * dirs[static_cast<size_t>(k)];
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Vector phases(n);
  for (int k = 0; k < n; ++k) phases(k) = std::exp(Complex(0.0, es.eigenvalues()(k)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

SearchResult search_conjugacy(const StateAlgebra& sa, const DynamicalInvariant& a,
                              const DynamicalInvariant& b, int budget_restarts,
                              uint64_t seed) {
  SearchResult res;
  if (!fingerprints_match(fingerprint(sa, a), fingerprint(sa, b))) {
    res.verdict = ConjugacyVerdict::NotConjugate;
    return res;
  }

  const int n = sa.dim();
  const int m = a.p.size();
  const std::vector<Matrix> dirs = commutant_directions(sa);
  const int dim = static_cast<int>(dirs.size());

  const RealMatrix stack = stack_basis(n, b.p.basis);
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(stack);

  auto residual = [&](const RealVector& x) -> RealVector {
    const Matrix u = unitary_from_params(dirs, x);
    RealVector r(2 * n * n * m + m * m + 2 * n * n);
    Eigen::Index at = 0;
    if (m > 0) {
      RealMatrix rhs(2 * n * n, m);
      for (int k = 0; k < m; ++k) {
        const Vector w = vec(Matrix(u * a.p.basis[static_cast<size_t>(k)] * u.adjoint()));
        rhs.col(k) << w.real(), w.imag();
      }
      const RealMatrix coords = cod.solve(rhs);
      const RealMatrix miss = stack * coords - rhs;
      r.segment(at, miss.size()) = Eigen::Map<const RealVector>(miss.data(), miss.size());
      at += miss.size();
      const RealMatrix og = coords.transpose() * coords - RealMatrix::Identity(m, m);
      r.segment(at, og.size()) = Eigen::Map<const RealVector>(og.data(), og.size());
      at += og.size();
    }
    const Vector pv = vec(Matrix(u * a.v * u.adjoint() - b.v));
    r.segment(at, n * n) = pv.real();
    r.segment(at + n * n, n * n) = pv.imag();
    return r;
  };

  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < std::max(budget_restarts, 1); ++attempt) {
    ++res.restarts_used;
    RealVector x(dim);
    if (attempt == 0) {
      x.setZero();
    } else {
      const double sc = 0.4 + 0.4 * static_cast<double>(attempt % 5);
      for (int k = 0; k < dim; ++k) x(k) = sc * rng.gaussian();
    }

    RealVector r = residual(x);
    double f = r.squaredNorm();
    double lambda = 1e-3;
    for (int it = 0; it < 80 && f > 1e-24; ++it) {
      RealMatrix jac(r.size(), dim);
      const double h = 1e-6;
      for (int k = 0; k < dim; ++k) {
        RealVector xp = x;
        xp(k) += h;
        jac.col(k) = (residual(xp) - r) / h;
      }
      const RealMatrix jtj = jac.transpose() * jac;
      const RealVector jtr = jac.transpose() * r;
      bool stepped = false;
      for (int tries = 0; tries < 12; ++tries) {
        const RealMatrix damped = jtj + lambda * RealMatrix::Identity(dim, dim);
        const RealVector step = damped.ldlt().solve(-jtr);
        const RealVector xn = x + step;
        const RealVector rn = residual(xn);
        const double fn = rn.squaredNorm();
        if (fn < f) {
          x = xn;
          r = rn;
          f = fn;
          lambda = std::max(lambda / 3.0, 1e-12);
          stepped = true;
          break;
        }
        lambda *= 8.0;
        if (lambda > 1e12) break;
      }
      if (!stepped) break;
    }

    best = std::min(best, f);
    if (f < 1e-18) {
      const Matrix u = unitary_from_params(dirs, x);
      const ConjugacyReport rep = check_conjugacy(sa, a, b, u);
      if (rep.ok) {
        res.verdict = ConjugacyVerdict::Conjugate;
        res.u = u;
        res.best_objective = f;
        return res;
      }
    }
  }
  res.best_objective = best;
  res.verdict = ConjugacyVerdict::Inconclusive;
  return res;
}

}  // namespace dynvar
