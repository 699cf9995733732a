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
//
// Dense third-order complex tensor with mode unfoldings and a rank-R
// canonical polyadic (CP) decomposition via alternating least squares.

#ifndef JRCUP_TENSOR_HPP
#define JRCUP_TENSOR_HPP

#include <algorithm>
#include <array>
#include <cstdint>

#include "jrcup/common.hpp"
#include "jrcup/rng.hpp"

namespace jrcup {

/// Third-order complex tensor. Storage order: entry (i1,i2,i3) lives at
/// offset i1 + I1*i2 + I1*I2*i3 (first index fastest).
class ComplexTensor3 {
 public:
  ComplexTensor3() = default;
  ComplexTensor3(Eigen::Index i1, Eigen::Index i2, Eigen::Index i3)
      : dims_{i1, i2, i3}, data_(VecC::Zero(i1 * i2 * i3)) {}

  Eigen::Index dim(int mode) const { return dims_[static_cast<std::size_t>(mode - 1)]; }
  Eigen::Index size() const { return data_.size(); }
  const VecC& data() const { return data_; }
  VecC& data() { return data_; }

  cplx& operator()(Eigen::Index i1, Eigen::Index i2, Eigen::Index i3) {
    return data_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
  }
  cplx operator()(Eigen::Index i1, Eigen::Index i2, Eigen::Index i3) const {
    return data_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
  }

  double norm() const { return data_.norm(); }

 private:
  std::array<Eigen::Index, 3> dims_{0, 0, 0};
  VecC data_;
};

/// Mode-n unfolding. Columns enumerate the remaining indices with the lower
/// mode varying fastest: mode 1 -> I1 x (I2*I3), column j = i2 + I2*i3;
/// mode 2 -> I2 x (I1*I3), column j = i1 + I1*i3; mode 3 -> I3 x (I1*I2),
/// column j = i1 + I1*i2.
inline MatC unfold(const ComplexTensor3& t, int mode) {
  const Eigen::Index i1 = t.dim(1), i2 = t.dim(2), i3 = t.dim(3);
  MatC m;
  switch (mode) {
    case 1:
      return Eigen::Map<const MatC>(t.data().data(), i1, i2 * i3);
    case 2:
      m.resize(i2, i1 * i3);
      for (Eigen::Index c = 0; c < i3; ++c)
        for (Eigen::Index b = 0; b < i2; ++b)
          for (Eigen::Index a = 0; a < i1; ++a) m(b, a + i1 * c) = t(a, b, c);
      return m;
    case 3:
      m.resize(i3, i1 * i2);
      for (Eigen::Index c = 0; c < i3; ++c)
        for (Eigen::Index b = 0; b < i2; ++b)
          for (Eigen::Index a = 0; a < i1; ++a) m(c, a + i1 * b) = t(a, b, c);
      return m;
    default:
      throw std::invalid_argument("unfold: mode must be 1, 2 or 3");
  }
}

/// Inverse of unfold for the same column ordering.
inline ComplexTensor3 fold(const MatC& m, int mode, Eigen::Index i1, Eigen::Index i2,
                           Eigen::Index i3) {
  ComplexTensor3 t(i1, i2, i3);
  switch (mode) {
    case 1:
      for (Eigen::Index c = 0; c < i3; ++c)
        for (Eigen::Index b = 0; b < i2; ++b)
          for (Eigen::Index a = 0; a < i1; ++a) t(a, b, c) = m(a, b + i2 * c);
      return t;
    case 2:
      for (Eigen::Index c = 0; c < i3; ++c)
        for (Eigen::Index b = 0; b < i2; ++b)
          for (Eigen::Index a = 0; a < i1; ++a) t(a, b, c) = m(b, a + i1 * c);
      return t;
    case 3:
      for (Eigen::Index c = 0; c < i3; ++c)
        for (Eigen::Index b = 0; b < i2; ++b)
          for (Eigen::Index a = 0; a < i1; ++a) t(a, b, c) = m(c, a + i1 * b);
      return t;
    default:
      throw std::invalid_argument("fold: mode must be 1, 2 or 3");
  }
}

/// Rank-R factorization: t = sum_r weights[r] * u1_r outer u2_r outer u3_r,
/// factor columns unit-norm with magnitudes and phases absorbed in weights.
struct CpFactors {
  MatC u1, u2, u3;  // I_n x R
  VecC weights;     // R

  Eigen::Index rank() const { return weights.size(); }
};

/// Column-wise Khatri-Rao product with B's rows varying fastest:
/// out[i + rows(B)*j, r] = B(i,r) * A(j,r).
inline MatC khatri_rao(const MatC& a, const MatC& b) {
  MatC out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r)
    for (Eigen::Index jj = 0; jj < a.rows(); ++jj)
      out.col(r).segment(jj * b.rows(), b.rows()) = a(jj, r) * b.col(r);
  return out;
}

inline ComplexTensor3 reconstruct(const CpFactors& f) {
  const Eigen::Index i1 = f.u1.rows(), i2 = f.u2.rows(), i3 = f.u3.rows();
  // mode-1 unfolding of the model: U1 * diag(w) * kr(U3, U2)^T
  const MatC m1 = f.u1 * f.weights.asDiagonal() * khatri_rao(f.u3, f.u2).transpose();
  return fold(m1, 1, i1, i2, i3);
}

/// Unit-norm columns, first significant entry of each u1 column made
/// real-positive; magnitude and phase moved into the weights.
inline void normalize_factors(CpFactors& f) {
  for (Eigen::Index r = 0; r < f.rank(); ++r) {
    for (MatC* u : {&f.u1, &f.u2, &f.u3}) {
      const double nrm = u->col(r).norm();
      if (nrm > 0) {
        u->col(r) /= nrm;
        f.weights[r] *= nrm;
      }
    }
    const double peak = f.u1.col(r).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < f.u1.rows(); ++i) {
      if (std::abs(f.u1(i, r)) > 1e-12 * peak) {
        const cplx phase = f.u1(i, r) / std::abs(f.u1(i, r));
        f.u1.col(r) *= std::conj(phase);
        f.weights[r] *= phase;
        break;
      }
    }
  }
}

struct CpOptions {
  int max_iters = 500;
  double tol = 1e-10;  // on the change of the relative residual
  int restarts = 3;
  std::uint64_t seed = 0;
};

struct CpResult {
  CpFactors factors;
  double rel_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// true when the factor columns came out (near-)collinear in every mode;
  /// downstream frequency estimation is unreliable in that case
  bool degenerate = false;
};

namespace detail {

inline MatC leading_left_singular(const MatC& m, Eigen::Index r) {
  Eigen::JacobiSVD<MatC> svd(m, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(std::min(r, svd.matrixU().cols()));
}

inline bool columns_collinear(const MatC& u, double tol) {
  for (Eigen::Index a = 0; a < u.cols(); ++a)
    for (Eigen::Index b = a + 1; b < u.cols(); ++b) {
      const double na = u.col(a).norm(), nb = u.col(b).norm();
      if (na == 0.0 || nb == 0.0) return true;
      if (std::abs(u.col(a).dot(u.col(b))) / (na * nb) > 1.0 - tol) return true;
    }
  return false;
}

}  // namespace detail

/// Alternating least squares CP decomposition. Restart 0 is seeded from the
/// leading singular vectors of the unfoldings, later restarts from random
/// factors; the best run (lowest residual) wins. Deterministic under seed.
inline CpResult cp_decompose(const ComplexTensor3& t, Eigen::Index rank,
                             const CpOptions& opts = {}) {
  const Eigen::Index i1 = t.dim(1), i2 = t.dim(2), i3 = t.dim(3);
  if (rank < 1) throw std::invalid_argument("cp_decompose: rank must be >= 1");
  if (rank > std::min({i2 * i3, i1 * i3, i1 * i2}))
    throw std::invalid_argument("cp_decompose: rank exceeds unfolding rank limit");

  const double tnorm = t.norm();
  CpResult best;
  best.rel_residual = inf;

  if (tnorm == 0.0) {
    best.factors.u1 = MatC::Zero(i1, rank);
    best.factors.u2 = MatC::Zero(i2, rank);
    best.factors.u3 = MatC::Zero(i3, rank);
    best.factors.weights = VecC::Zero(rank);
    best.rel_residual = 0.0;
    best.converged = true;
    return best;
  }

  const MatC x1 = unfold(t, 1), x2 = unfold(t, 2), x3 = unfold(t, 3);

  auto random_factor = [&](Rng& rng, Eigen::Index n) {
    MatC u(n, rank);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index r = 0; r < rank; ++r) u(i, r) = complex_gaussian(rng, 1.0);
    return u;
  };

  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    CpFactors f;
    if (attempt == 0) {
      f.u1 = detail::leading_left_singular(x1, rank);
      f.u2 = detail::leading_left_singular(x2, rank);
      f.u3 = detail::leading_left_singular(x3, rank);
      // pad if an unfolding had fewer singular vectors than rank
      auto pad = [&](MatC& u, Eigen::Index n) {
        if (u.cols() < rank) {
          MatC p(n, rank);
          p.setZero();
          p.leftCols(u.cols()) = u;
          for (Eigen::Index r = u.cols(); r < rank; ++r) p(r % n, r) = 1.0;
          u = p;
        }
      };
      pad(f.u1, i1);
      pad(f.u2, i2);
      pad(f.u3, i3);
    } else {
      Rng rng = make_rng(opts.seed, {0x437a, static_cast<std::uint64_t>(attempt)});
      f.u1 = random_factor(rng, i1);
      f.u2 = random_factor(rng, i2);
      f.u3 = random_factor(rng, i3);
    }
    f.weights = VecC::Ones(rank);

    auto solve_mode = [&](const MatC& x, const MatC& za, const MatC& zb) {
      // minimize || x^T - kr(za, zb) * B ||_F, return B^T
      const MatC z = khatri_rao(za, zb);
      return z.colPivHouseholderQr().solve(x.transpose()).transpose().eval();
    };

    double prev_res = inf;
    int iter = 0;
    bool converged = false;
    for (; iter < opts.max_iters; ++iter) {
      f.u1 = solve_mode(x1, f.u3, f.u2);
      f.u2 = solve_mode(x2, f.u3, f.u1);
      f.u3 = solve_mode(x3, f.u2, f.u1);
      f.weights = VecC::Ones(rank);
      normalize_factors(f);

      const MatC model1 = f.u1 * f.weights.asDiagonal() * khatri_rao(f.u3, f.u2).transpose();
      const double res = (x1 - model1).norm() / tnorm;
      if (std::abs(prev_res - res) < opts.tol) {
        converged = true;
        prev_res = res;
        ++iter;
        break;
      }
      prev_res = res;
    }

    if (prev_res < best.rel_residual) {
      best.factors = f;
      best.rel_residual = prev_res;
      best.iterations = iter;
      best.converged = converged;
    }
    if (best.converged && best.rel_residual < 1e-8) break;
  }

  best.degenerate = rank > 1 && detail::columns_collinear(best.factors.u1, 1e-6) &&
                    detail::columns_collinear(best.factors.u2, 1e-6) &&
                    detail::columns_collinear(best.factors.u3, 1e-6);
  return best;
}

}  // namespace jrcup

#endif  // JRCUP_TENSOR_HPP
