// Shared test oracles: an independent Taylor-series matrix exponential, a
// Runge-Kutta reference integrator, and seeded random matrix factories.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "ddctl/numkit.hpp"

namespace ddctl::testing {

using numkit::Index;
using numkit::Mat;
using numkit::Vec;

// Matrix exponential by scaling-and-squaring TAYLOR series (independent of
// the Pade implementation under test).
inline Mat expm_taylor(const Mat& A) {
  const Index n = A.rows();
  double norm = A.norm();
  int s = 0;
  while (norm > 0.5) {
    norm /= 2.0;
    ++s;
  }
  const Mat T = A / std::ldexp(1.0, s);
  Mat sum = Mat::Identity(n, n);
  Mat term = Mat::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = term * T / static_cast<double>(k);
    sum += term;
    if (term.norm() < 1e-18 * sum.norm()) break;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

// Classic fixed-step RK4 for xdot = A x + f(t), from x(t0) over [t0, t1].
inline Vec rk4(const Mat& A, const std::function<Vec(double)>& f, Vec x,
               double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  auto deriv = [&](double t, const Vec& v) -> Vec { return A * v + f(t); };
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = deriv(t, x);
    const Vec k2 = deriv(t + h / 2, x + (h / 2) * k1);
    const Vec k3 = deriv(t + h / 2, x + (h / 2) * k2);
    const Vec k4 = deriv(t + h, x + h * k3);
    x += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return x;
}

// RK4 for an autonomous linear system.
inline Vec rk4_autonomous(const Mat& A, const Vec& x0, double t1, int steps) {
  return rk4(
      A, [&](double) { return Vec::Zero(A.rows()); }, x0, 0.0, t1, steps);
}

// Deterministic random orthogonal matrix (QR of a seeded random matrix).
inline Mat random_orthogonal(Index n, std::uint64_t seed) {
  numkit::Rng rng(seed);
  Mat M = rng.uniform_matrix(n, n, -1.0, 1.0);
  Eigen::HouseholderQR<Mat> qr(M);
  Mat Q = qr.householderQ();
  return Q;
}

// Deterministic random Hurwitz matrix: random similarity of a matrix with
// eigenvalues in [-3, -0.5] plus mild rotation coupling.
inline Mat random_stable(Index n, std::uint64_t seed) {
  numkit::Rng rng(seed);
  Mat M = rng.uniform_matrix(n, n, -1.0, 1.0);
  return M - Mat::Identity(n, n) * (M.norm() + 0.5);
}

// Deterministic random permutation matrix.
inline Mat random_permutation(Index n, std::uint64_t seed) {
  numkit::Rng rng(seed);
  std::vector<Index> idx(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.uniform(0.0, i + 1.0));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  Mat P = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) P(i, idx[static_cast<size_t>(i)]) = 1.0;
  return P;
}

}  // namespace ddctl::testing
