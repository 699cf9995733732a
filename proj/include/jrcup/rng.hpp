// SPDX-License-Identifier: Apache-2.0
//
// jrcup - active-RIS joint calibration and user positioning toolkit
// Copyright (C) 2026 jrcup contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef JRCUP_RNG_HPP
#define JRCUP_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

#include "jrcup/common.hpp"

namespace jrcup {

/// SplitMix64 finalizer; used to derive independent child seeds so that
/// Monte-Carlo work items can run concurrently with reproducible output.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for stream `ids` under the root seed. Each distinct id tuple
/// yields a statistically independent generator.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = mix64(root ^ 0x6a09e667f3bcc909ULL);
  for (auto id : ids) s = mix64(s ^ mix64(id));
  return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> ids = {}) {
  return Rng(derive_seed(root, ids));
}

inline double uniform_phase(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * pi);
  return u(rng);
}

/// Circularly-symmetric complex Gaussian sample with E|z|^2 = variance.
inline cplx complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline VecC complex_gaussian_vector(Rng& rng, Eigen::Index n, double variance) {
  VecC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = complex_gaussian(rng, variance);
  return v;
}

}  // namespace jrcup

#endif  // JRCUP_RNG_HPP
