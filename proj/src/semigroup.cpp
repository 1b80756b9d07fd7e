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

#include "dynvar/semigroup.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dynvar {
namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Matrix null_basis_of(const Matrix& u, const RealVector& sing, double cut) {
  int k = 0;
  for (Eigen::Index i = 0; i < sing.size(); ++i)
    if (sing(i) <= cut) ++k;
  return u.rightCols(k);
}

}  // namespace

Superoperator evolve(const Superoperator& l, double t) {
  if (t < 0.0) throw NegativeTime("evolution time must be nonnegative");
  Matrix m = (l.mat() * t).exp();
  return Superoperator(l.dim(), std::move(m));
}

MarkovReport markov_checks(const StateAlgebra& sa, const Superoperator& l,
                           const std::vector<double>& times) {
  const int n = sa.dim();
  if (l.dim() != n) throw DimensionMismatch("generator dimension mismatch");
  const Matrix one = Matrix::Identity(n, n);

  std::map<double, Superoperator> flows;
  auto flow = [&](double t) -> const Superoperator& {
    auto it = flows.find(t);
    if (it == flows.end()) it = flows.emplace(t, evolve(l, t)).first;
    return it->second;
  };

  MarkovReport rep;
  bool ok = true;
  for (double t : times) {
    const Superoperator& phi = flow(t);
    MarkovTimeSlice slice;
    slice.t = t;
    slice.unital_defect = fnorm(phi.apply(one) - one);

    double inv = 0.0;
    for (int i = 0; i < n * n; ++i) {
      const Matrix e = unit_matrix(n, i % n, i / n);
      inv = std::max(inv, std::abs(sa.rho(phi.apply(e)) - sa.rho(e)));
    }
    slice.invariance_defect = inv;

    Matrix j = choi_matrix(phi);
    j = (j + j.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(j);
    slice.choi_min_eig = es.eigenvalues()(0);
    const double jmax = es.eigenvalues()(es.eigenvalues().size() - 1);

    const double s = std::max(1.0, phi.norm());
    ok = ok && slice.unital_defect <= tol().eq * s && slice.invariance_defect <= tol().eq * s &&
         slice.choi_min_eig >= -(tol().psd_rel * std::max(jmax, 0.0) + tol().floor);
    rep.slices.push_back(slice);
  }

  double law = 0.0;
  for (double s : times)
    for (double t : times)
      law = std::max(law, (flow(s).compose(flow(t)) - flow(s + t)).norm());
  rep.semigroup_defect = law;
  rep.ok = ok && law <= 1e-8 * std::max(1.0, 1.0 + max_abs(l.mat()));
  return rep;
}

MixingReport mixing_analysis(const StateAlgebra& sa, const Superoperator& l) {
  const int n = sa.dim();
  if (l.dim() != n) throw DimensionMismatch("generator dimension mismatch");
  const int nn = n * n;
  const Matrix& m = l.mat();
  const double scale = std::max(1.0, m.norm());
  const double peri = 1e-9 * scale;

  Eigen::ComplexEigenSolver<Matrix> es(m);
  MixingReport rep;
  int zero_count = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < nn; ++k) {
    const Complex ev = es.eigenvalues()(k);
    rep.spectrum.push_back(ev);
    if (ev.real() > -peri) {
      ++rep.peripheral_count;
      rep.peripheral.push_back(ev);
      if (std::abs(ev) <= peri) ++zero_count;
    } else {
      gap = std::min(gap, -ev.real());
    }
  }
  rep.spectral_gap = std::isfinite(gap) ? gap : 0.0;

  if (rep.peripheral_count != zero_count) {
    rep.limit_exists = false;  // rotating part on the imaginary axis
    return rep;
  }

  // The limit exists iff zero is semisimple; then it is the spectral
  // projection onto the fixed space along the range.
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double cut = 1e-10 * std::max(svd.singularValues()(0), 1.0);
  const Matrix nb = null_basis_of(svd.matrixV(), svd.singularValues(), cut);
  const Matrix kb = null_basis_of(svd.matrixU(), svd.singularValues(), cut);
  if (static_cast<int>(nb.cols()) != zero_count) {
    rep.limit_exists = false;  // geometric multiplicity deficit
    return rep;
  }
  const Matrix cross = kb.adjoint() * nb;
  Eigen::JacobiSVD<Matrix> cs(cross);
  const double smin = cs.singularValues()(cs.singularValues().size() - 1);
  if (smin < 1e-8) {
    rep.limit_exists = false;  // zero eigenvalue is defective
    return rep;
  }
  rep.limit_exists = true;
  Matrix proj = nb * cross.inverse() * kb.adjoint();
  rep.limit = Superoperator(n, proj);

  // A unique fixed point forces the limit to be the state average; anything
  // else signals a broken spectral projection.
  if (zero_count == 1) {
    const Matrix expect = vec(Matrix::Identity(n, n)) * vec(sa.omega()).adjoint();
    if (fnorm(Matrix(proj - expect)) > 1e-7 * std::max(1.0, fnorm(proj)))
      throw InternalInconsistency("unique fixed point but the limit is not the state average");
  }
  return rep;
}

Matrix support_projection(const Matrix& state) {
  const int n = static_cast<int>(state.rows());
  if (state.cols() != n) throw NotAState("density must be square");
  if (fnorm(Matrix(state - state.adjoint())) > tol().eq * std::max(1.0, fnorm(state)))
    throw NotAState("density must be hermitian");
  if (std::abs(state.trace() - Complex(1.0)) > 1e-9)
    throw NotAState("density must have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix> es((state + state.adjoint()) / 2.0);
  const double top = es.eigenvalues()(n - 1);
  if (es.eigenvalues()(0) < -(tol().psd_rel * std::max(top, 0.0) + tol().floor))
    throw NotAState("density must be positive semidefinite");
  const double cut = std::max(tol().rank_rel * std::max(top, 0.0), tol().floor);
  Matrix p = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    if (es.eigenvalues()(k) > cut) p += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
  return p;
}

CompressionResult compress(const StateAlgebra& sa, const Superoperator& l,
                           const Matrix& state, const std::vector<double>& times) {
  const int n = sa.dim();
  if (l.dim() != n || state.rows() != n) throw DimensionMismatch("compression dimension mismatch");
  const Matrix p0 = support_projection(state);

  Eigen::SelfAdjointEigenSolver<Matrix> es((state + state.adjoint()) / 2.0);
  const double top = es.eigenvalues()(n - 1);
  const double cut = std::max(tol().rank_rel * std::max(top, 0.0), tol().floor);
  int rank = 0;
  for (int k = 0; k < n; ++k)
    if (es.eigenvalues()(k) > cut) ++rank;
  Matrix v(n, rank);
  for (int k = 0, at = 0; k < n; ++k)
    if (es.eigenvalues()(k) > cut) v.col(at++) = es.eigenvectors().col(k);

  std::map<double, Superoperator> flows;
  auto flow = [&](double t) -> const Superoperator& {
    auto it = flows.find(t);
    if (it == flows.end()) it = flows.emplace(t, evolve(l, t)).first;
    return it->second;
  };

  // The state must be preserved by the dual flow at every requested time.
  for (double t : times) {
    const Superoperator& phi = flow(t);
    double worst = 0.0;
    for (int i = 0; i < n * n; ++i) {
      const Matrix e = unit_matrix(n, i % n, i / n);
      worst = std::max(worst, std::abs((state * phi.apply(e)).trace() - (state * e).trace()));
    }
    if (worst > tol().eq * std::max(1.0, phi.norm()))
      throw StateNotInvariant("density is not preserved at time " + std::to_string(t));
  }

  auto corner_of = [&](const Superoperator& phi) {
    return super_from_map(rank, [&](const Matrix& a) -> Matrix {
      return v.adjoint() * phi.apply(v * a * v.adjoint()) * v;
    });
  };

  CompressionResult out;
  out.rank = rank;
  out.isometry = v;
  Matrix cs_mat = v.adjoint() * state * v;
  cs_mat /= cs_mat.trace().real();
  out.corner_state = cs_mat;
  out.corner_generator = super_from_map(rank, [&](const Matrix& a) -> Matrix {
    return v.adjoint() * l.apply(v * a * v.adjoint()) * v;
  });
  out.trivial = rank == 1;

  double law = 0.0;
  for (double s : times)
    for (double t : times) {
      const Superoperator lhs = corner_of(flow(s)).compose(corner_of(flow(t)));
      const Superoperator rhs = corner_of(flow(s + t));
      law = std::max(law, (lhs - rhs).norm());
    }
  out.semigroup_defect = law;

  double mono = 0.0;
  for (double t : times) {
    Matrix gain = flow(t).apply(p0) - p0;
    gain = (gain + gain.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> ge(gain);
    mono = std::max(mono, std::max(0.0, -ge.eigenvalues()(0)));
  }
  out.monotone_defect = mono;
  return out;
}

}  // namespace dynvar
