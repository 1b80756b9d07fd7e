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

// exp(t L) as a map on the algebra. Throws NegativeTime.
Superoperator evolve(const Superoperator& l, double t);

// Quantitative Markov-property report for a set of times.
struct MarkovTimeSlice {
  double t = 0.0;
  double unital_defect = 0.0;     // |phi_t(1) - 1|
  double invariance_defect = 0.0; // worst |rho(phi_t(x)) - rho(x)| on units
  double choi_min_eig = 0.0;      // complete positivity of phi_t
};

struct MarkovReport {
  std::vector<MarkovTimeSlice> slices;
  double semigroup_defect = 0.0;  // worst |phi_s phi_t - phi_{s+t}| over pairs
  bool ok = false;
};

MarkovReport markov_checks(const StateAlgebra& sa, const Superoperator& l,
                           const std::vector<double>& times);

// Long-time behaviour from the spectrum of the generator. The mixing
// property is limit_exists: every orbit phi_t(x) converges as t -> infinity,
// which holds iff the peripheral spectrum is a semisimple zero.
struct MixingReport {
  std::vector<Complex> spectrum;    // all eigenvalues of the generator
  std::vector<Complex> peripheral;  // eigenvalues with vanishing real part
  bool limit_exists = false;
  std::optional<Superoperator> limit;  // spectral projection onto ker L
  double spectral_gap = 0.0;  // -max real part over non-peripheral spectrum
  int peripheral_count = 0;
};

MixingReport mixing_analysis(const StateAlgebra& sa, const Superoperator& l);

// Support projection of a possibly non-faithful density. Throws NotAState.
Matrix support_projection(const Matrix& state);

// Compression of the semigroup to the support corner of an invariant state.
struct CompressionResult {
  int rank = 0;
  Matrix isometry;                // n x rank, columns span the support
  Matrix corner_state;            // faithful density on the corner
  Superoperator corner_generator;
  double semigroup_defect = 0.0;  // failure of the corner maps to compose
  double monotone_defect = 0.0;   // worst negative part of phi_t(p) - p
  bool trivial = false;           // rank-one corner
};

// Throws NotAState when the density is invalid and StateNotInvariant when it
// is not preserved by the dual flow at the requested times.
CompressionResult compress(const StateAlgebra& sa, const Superoperator& l,
                           const Matrix& state, const std::vector<double>& times);

}  // namespace dynvar
