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

#include "dynvar/generators.hpp"

#include <cmath>

namespace dynvar {

namespace {

// sum of ||.||_F^2 over a list interpreted as one long vector.
double stack_norm(const std::vector<Matrix>& ms) {
  double sq = 0.0;
  for (const auto& m : ms) sq += m.squaredNorm();
  return std::sqrt(sq);
}

std::vector<Matrix> unit_table(const Superoperator& l) {
  int n = l.dim();
  std::vector<Matrix> table(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      table[unit_index(n, i, j)] = l.apply(unit_matrix(n, i, j));
  return table;
}

}  // namespace

void validate_momentum_space(const StateAlgebra& sa, const MomentumSpace& p) {
  int n = sa.dim();
  if (p.n != n) throw DimensionMismatch("momentum space dimension mismatch");
  for (const auto& m : p.basis) {
    if (m.rows() != n || m.cols() != n)
      throw InvalidMomentumSpace("momentum has wrong shape");
    double scale = std::max(1.0, m.norm());
    if ((m + m.adjoint()).norm() > tol().eq * scale)
      throw InvalidMomentumSpace("momentum is not skew-adjoint");
    if (std::abs(sa.rho(m)) > tol().eq * scale)
      throw InvalidMomentumSpace("momentum is not centered");
    if ((m * sa.omega() - sa.omega() * m).norm() > tol().eq * scale)
      throw InvalidMomentumSpace("momentum does not commute with omega");
  }
  if (!p.basis.empty()) {
    // Real linear independence; skew matrices are R-independent iff
    // C-independent, so the complex Gram rank decides.
    int m = p.size();
    Matrix gram(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        gram(i, j) = (p.basis[i].adjoint() * p.basis[j]).trace();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.eigenvalues()(0) <= 1e-12 * es.eigenvalues()(m - 1))
      throw InvalidMomentumSpace("momentum basis is linearly dependent");
  }
}

void validate_potential(const StateAlgebra& sa, const Matrix& v) {
  int n = sa.dim();
  if (v.rows() != n || v.cols() != n)
    throw InvalidPotential("potential has wrong shape");
  double scale = std::max(1.0, v.norm());
  if ((v + v.adjoint()).norm() > tol().eq * scale)
    throw InvalidPotential("potential is not skew-adjoint");
  if (std::abs(sa.rho(v)) > tol().eq * scale)
    throw InvalidPotential("potential is not centered");
  if ((v * sa.omega() - sa.omega() * v).norm() > tol().eq * scale)
    throw InvalidPotential("potential does not commute with omega");
}

ValidationReport in_domain(const StateAlgebra& sa, const Superoperator& l) {
  int n = sa.dim();
  if (l.dim() != n) throw DimensionMismatch("generator dimension mismatch");
  auto table = unit_table(l);
  ValidationReport rep;

  Matrix l1 = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a) l1 += table[unit_index(n, a, a)];
  rep.unital_residual = l1.norm();

  double div_sq = 0.0;
  double sym_worst = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Matrix& li = table[unit_index(n, i, j)];
      div_sq += std::norm(sa.rho(li));
      const Matrix& lstar = table[unit_index(n, j, i)];  // L(E_ij*)
      sym_worst = std::max(sym_worst, (lstar - li.adjoint()).norm());
    }
  rep.invariance_residual = std::sqrt(div_sq);
  rep.symmetry_residual = sym_worst;

  double scale = tol().eq * std::max(1.0, l.norm());
  rep.unital = rep.unital_residual <= scale;
  rep.invariant = rep.invariance_residual <= scale;
  rep.symmetric = rep.symmetry_residual <= scale;
  return rep;
}

Superoperator laplacian(const StateAlgebra& sa, const MomentumSpace& p) {
  validate_momentum_space(sa, p);
  Superoperator acc = Superoperator::zero(sa.dim());
  for (const auto& pk : p.basis) {
    Superoperator dk = ad(pk);
    acc = acc + dk.compose(dk);
  }
  return acc;
}

Superoperator make_generator(const StateAlgebra& sa, const MomentumSpace& p,
                             const Matrix& v) {
  validate_potential(sa, v);
  return laplacian(sa, p) + ad(v);
}

// ---------------------------------------------------------------------------
// Ellipticity oracles
// ---------------------------------------------------------------------------

namespace {

// PSD with a scale-aware threshold: relative slack on the top eigenvalue
// plus an absolute floor for matrices that are numerically zero.
bool psd_verdict(double min_eig, double max_eig, double scale_hint) {
  double thresh = tol().psd_rel * std::max(max_eig, 0.0) +
                  tol().floor * std::max({scale_hint, 1.0});
  return min_eig >= -thresh;
}

}  // namespace

EllipticityResult is_elliptic_form(const StateAlgebra& sa, const Superoperator& l) {
  int n = sa.dim();
  if (!in_domain(sa, l).ok())
    throw DomainViolation("ellipticity is defined for admissible generators only");
  const KermuBasis& basis = kermu_basis(n);
  auto table = unit_table(l);
  const Matrix& om = sa.omega();

  // M[r,s] = -sigma_L(kappa_r* kappa_s). For unit terms
  // kappa_r ~ E_ab (x) E_cd, kappa_s ~ E_a'b' (x) E_c'd':
  // star(E_ab (x) E_cd) = E_dc (x) E_ba, and
  // (E_dc (x) E_ba)(E_a'b' (x) E_c'd') = delta_{a a'} E_dc (x) E_bb' (x) E_c'd',
  // whose -sigma_L value is L(E_bb')[c, c'] omega[d', d].
  int m = basis.size();
  Matrix gram(m, m);
  for (int r = 0; r < m; ++r)
    for (int s = r; s < m; ++s) {
      Complex acc = 0.0;
      for (const auto& t : basis.sparse[r])
        for (const auto& u : basis.sparse[s]) {
          if (t.a != u.a) continue;
          acc += t.coef * u.coef * table[unit_index(n, t.b, u.b)](t.c, u.c) *
                 om(u.d, t.d);
        }
      gram(r, s) = acc;
      gram(s, r) = std::conj(acc);
    }

  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  EllipticityResult res;
  res.min_eig = es.eigenvalues()(0);
  double max_eig = es.eigenvalues()(m - 1);
  res.elliptic = psd_verdict(res.min_eig, max_eig, l.norm());
  if (!res.elliptic) {
    Vector c = es.eigenvectors().col(0);
    res.witness = kermu_combine(basis, c);
  }
  return res;
}

Matrix choi_matrix(const Superoperator& l) {
  int n = l.dim();
  Matrix j = Matrix::Zero(n * n, n * n);
  for (int jj = 0; jj < n; ++jj)
    for (int ii = 0; ii < n; ++ii)
      j += kron(unit_matrix(n, ii, jj), l.apply(unit_matrix(n, ii, jj)));
  return j;
}

ChoiResult is_elliptic_ccp(const StateAlgebra& sa, const Superoperator& l) {
  int n = sa.dim();
  if (!in_domain(sa, l).ok())
    throw DomainViolation("ellipticity is defined for admissible generators only");
  Matrix j = choi_matrix(l);
  Vector me = vec(Matrix::Identity(n, n)) / std::sqrt(static_cast<double>(n));
  Matrix q = Matrix::Identity(n * n, n * n) - me * me.adjoint();
  Matrix compressed = q * j * q;
  Eigen::SelfAdjointEigenSolver<Matrix> es((compressed + compressed.adjoint()) / 2.0);
  ChoiResult res;
  res.min_eig = es.eigenvalues()(0);
  double max_eig = es.eigenvalues()(n * n - 1);
  res.elliptic = psd_verdict(res.min_eig, max_eig, l.norm());
  return res;
}

// ---------------------------------------------------------------------------
// Derivations
// ---------------------------------------------------------------------------

double derivation_residual(const Superoperator& l) {
  int n = l.dim();
  auto table = unit_table(l);
  double worst = 0.0;
  Matrix l1 = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a) l1 += table[unit_index(n, a, a)];
  worst = l1.norm();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int dd = 0; dd < n; ++dd) {
          Matrix r = -unit_matrix(n, a, b) * table[unit_index(n, c, dd)] -
                     table[unit_index(n, a, b)] * unit_matrix(n, c, dd);
          if (b == c) r += table[unit_index(n, a, dd)];
          worst = std::max(worst, r.norm());
        }
  return worst;
}

bool is_derivation(const Superoperator& l) {
  return derivation_residual(l) <= tol().eq * std::max(1.0, l.norm());
}

Matrix extract_inner_potential(const StateAlgebra& sa, const Superoperator& dd) {
  int n = sa.dim();
  if (dd.dim() != n) throw DimensionMismatch("derivation dimension mismatch");
  if (!is_derivation(dd))
    throw NotADerivation("extract_inner_potential requires a derivation");
  // Symmetry makes the skew projection below lossless.
  double sym = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Matrix e = unit_matrix(n, i, j);
      sym = std::max(sym, (dd.apply(e.adjoint()) - dd.apply(e).adjoint()).norm());
    }
  if (sym > tol().eq * std::max(1.0, dd.norm()))
    throw NotADerivation("derivation is not symmetric");

  Matrix v0 = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    v0 += dd.apply(unit_matrix(n, j, 0)) * unit_matrix(n, 0, j);
  Matrix v = (v0 - v0.adjoint()) / 2.0;
  v -= sa.rho(v) * Matrix::Identity(n, n);

  // ad(v) must reproduce the input.
  double resid = (ad(v) - dd).norm();
  if (resid > tol().eq * std::max(1.0, dd.norm()))
    throw NotADerivation("derivation is not inner over the sampled form");

  // If the derivation is divergence-free the potential lies in the
  // commutant of omega.
  double div_sq = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      div_sq += std::norm(sa.rho(dd.apply(unit_matrix(n, i, j))));
  if (std::sqrt(div_sq) <= tol().eq * std::max(1.0, dd.norm())) {
    if ((v * sa.omega() - sa.omega() * v).norm() >
        tol().eq * std::max(1.0, v.norm()) * 10.0)
      throw InternalInconsistency(
          "divergence-free derivation yielded a potential outside the commutant");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

int commutant_skew_dim(const StateAlgebra& sa) {
  int dim = 0;
  for (const auto& c : sa.clusters()) dim += c.size * c.size;
  return dim - 1;  // centering removes the trace direction
}

namespace {

// Random skew-adjoint matrix commuting with omega: block diagonal over the
// eigenvalue clusters, conjugated back.
Matrix sample_commutant_skew(const StateAlgebra& sa, Rng& rng) {
  int n = sa.dim();
  Matrix b = Matrix::Zero(n, n);
  for (const auto& c : sa.clusters()) {
    Matrix g(c.size, c.size);
    for (int j = 0; j < c.size; ++j)
      for (int i = 0; i < c.size; ++i) g(i, j) = rng.cgaussian();
    b.block(c.offset, c.offset, c.size, c.size) = (g - g.adjoint()) / 2.0;
  }
  const Matrix& u = sa.eigenbasis();
  return u * b * u.adjoint();
}

Matrix center(const StateAlgebra& sa, const Matrix& m) {
  return m - sa.rho(m) * Matrix::Identity(sa.dim(), sa.dim());
}

SampledGenerator sample_exact(const StateAlgebra& sa, int m, Rng& rng) {
  int n = sa.dim();
  int avail = commutant_skew_dim(sa);
  if (m > avail)
    throw CommutantTooSmall("requested " + std::to_string(m) +
                            " momenta but the centered skew commutant has dimension " +
                            std::to_string(avail));
  MomentumSpace p;
  p.n = n;
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<Matrix> basis;
    for (int k = 0; k < m; ++k) {
      Matrix pk = center(sa, sample_commutant_skew(sa, rng));
      pk /= pk.norm();
      basis.push_back(pk);
    }
    if (m == 0) {
      p.basis = basis;
      break;
    }
    Matrix gram(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        gram(i, j) = (basis[i].adjoint() * basis[j]).trace();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    double lo = es.eigenvalues()(0), hi = es.eigenvalues()(m - 1);
    // Conditioning guard keeps downstream rank cuts far from noise.
    if (lo > 0 && hi / lo < 1e3) {
      p.basis = basis;
      break;
    }
  }
  if (static_cast<int>(p.basis.size()) != m)
    throw InternalInconsistency("failed to sample a well-conditioned momentum basis");
  Matrix v = center(sa, sample_commutant_skew(sa, rng));
  SampledGenerator out;
  out.l = make_generator(sa, p, v);
  out.momenta = p;
  out.v = v;
  return out;
}

// Lindblad form L(x) = sum_k V_k* x V_k + a x + x a* with m Gaussian jumps.
// Working in the eigenbasis of omega (omega = diag over clusters), the
// first-order coefficient must solve
//   a + a* = B1 := -sum V_k* V_k,
//   omega a + a* omega = B2 := -sum V_k omega V_k*,
// which is possible iff the per-cluster obstruction
//   xi_cl = (block of sum V_k omega V_k* - lam_cl sum V_k* V_k)
// vanishes. The obstruction traces sum to zero, so routing every eigenvalue
// of every xi_cl through one fixed hub vector with extra rank-one jumps
// cancels it exactly: kappa < 0 adds sqrt(-kappa/lam_hub) e h*, kappa > 0
// adds sqrt(kappa/lam_cl) h e*, and the hub collects sum kappa = 0. The
// remaining in-block freedom in a is a commutant Hamiltonian drift.
SampledGenerator sample_elliptic_generic(const StateAlgebra& sa, int m, Rng& rng) {
  int n = sa.dim();
  if (m < 0) throw Error("jump count must be nonnegative");
  const auto& clusters = sa.clusters();
  Matrix lam = Matrix::Zero(n, n);  // omega in its own eigenbasis
  std::vector<int> cluster_of(n);
  for (size_t g = 0; g < clusters.size(); ++g)
    for (int i = 0; i < clusters[g].size; ++i) {
      lam(clusters[g].offset + i, clusters[g].offset + i) = clusters[g].value;
      cluster_of[clusters[g].offset + i] = static_cast<int>(g);
    }

  std::vector<Matrix> kraus;
  for (int k = 0; k < m; ++k) kraus.push_back(rng.gaussian_matrix(n));

  auto totals = [&](Matrix* unital, Matrix* dual) {
    *unital = Matrix::Zero(n, n);
    *dual = Matrix::Zero(n, n);
    for (const Matrix& v : kraus) {
      *unital += v.adjoint() * v;   // sum V* V
      *dual += v * lam * v.adjoint();  // sum V omega V*
    }
  };

  Matrix svv, svov;
  totals(&svv, &svov);
  double scale = std::max(1.0, svv.norm() + svov.norm());
  const double hub_w = clusters.front().value;
  const Vector hub = Vector::Unit(n, 0);
  for (const auto& cl : clusters) {
    Matrix xi = svov.block(cl.offset, cl.offset, cl.size, cl.size) -
                cl.value * svv.block(cl.offset, cl.offset, cl.size, cl.size);
    xi = (xi + xi.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(xi);
    for (int i = 0; i < cl.size; ++i) {
      double kappa = es.eigenvalues()(i);
      if (std::abs(kappa) <= 1e-14 * scale) continue;
      Vector e = Vector::Zero(n);
      e.segment(cl.offset, cl.size) = es.eigenvectors().col(i);
      if (kappa < 0.0)
        kraus.push_back(std::sqrt(-kappa / hub_w) * e * hub.adjoint());
      else
        kraus.push_back(std::sqrt(kappa / cl.value) * hub * e.adjoint());
    }
  }

  totals(&svv, &svov);
  Matrix b1 = -svv, b2 = -svov;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (cluster_of[i] == cluster_of[j]) {
        a(i, j) = 0.5 * b1(i, j);
      } else {
        double li = clusters[cluster_of[i]].value;
        double lj = clusters[cluster_of[j]].value;
        a(i, j) = (b2(i, j) - b1(i, j) * lj) / (li - lj);
      }
    }

  const Matrix& u = sa.eigenbasis();
  Superoperator l = Superoperator::zero(n);
  for (const Matrix& vk : kraus) {
    Matrix w = u * vk * u.adjoint();
    l = l + sandwich(w.adjoint(), w);
  }
  Matrix afull = u * a * u.adjoint();
  l = l + left_mult(afull) + right_mult(afull.adjoint());
  l = l + ad(center(sa, sample_commutant_skew(sa, rng)));
  if (!in_domain(sa, l).ok())
    throw InternalInconsistency("sampled generator failed the domain re-check");
  SampledGenerator out;
  out.l = l;
  return out;
}

SampledGenerator sample_nonexact_auto(const StateAlgebra& sa) {
  int n = sa.dim();
  if (!sa.tracial() || n < 3)
    throw Error("nonexact_auto sampling requires a tracial state and n >= 3");
  Matrix w = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) w((k + 1) % n, k) = 1.0;
  SampledGenerator out;
  out.l = sandwich(w, w.adjoint()) - Superoperator::identity(n);
  return out;
}

}  // namespace

SampledGenerator sample_generator(const StateAlgebra& sa, SampleKind kind, int m,
                                  std::uint64_t seed) {
  Rng rng(seed);
  switch (kind) {
    case SampleKind::Exact:
      return sample_exact(sa, m, rng);
    case SampleKind::EllipticGeneric:
      return sample_elliptic_generic(sa, m, rng);
    case SampleKind::NonexactAuto:
      return sample_nonexact_auto(sa);
  }
  throw Error("unknown sample kind");
}

}  // namespace dynvar
