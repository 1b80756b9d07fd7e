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
#include <string>

#include "dynvar/common.hpp"

namespace dynvar {

// On-disk description of a generator: the density, the map in the
// column-stacking convention, and optionally the construction data.
struct GroundTruth {
  std::vector<Matrix> momenta;
  Matrix v;
};

struct GeneratorFile {
  int n = 0;
  Matrix omega;  // n x n
  Matrix l;      // n^2 x n^2
  std::optional<GroundTruth> truth;
};

// Throws ParseError on malformed input and ConventionMismatch when the file
// declares a different vectorization convention.
GeneratorFile parse_generator(const std::string& text);
GeneratorFile load_generator(const std::string& path);

// Byte-deterministic serialization: sorted keys, two-space indent, shortest
// round-trip floats, trailing newline.
std::string serialize_generator(const GeneratorFile& f);
void save_generator(const std::string& path, const GeneratorFile& f);

// Conjugacy certificate: a single unitary.
struct CertificateFile {
  int n = 0;
  Matrix u;
};

CertificateFile parse_certificate(const std::string& text);
CertificateFile load_certificate(const std::string& path);
std::string serialize_certificate(const CertificateFile& f);

}  // namespace dynvar
