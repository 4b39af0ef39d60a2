// Dense real linear-algebra utilities shared by the whole toolkit: matrix
// exponential, spectra, numerical rank, minimal polynomials, Kronecker
// products, Lyapunov solves, and a deterministic RNG.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace ddctl::numkit {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

/// Deterministic pseudo-random source. Draws are produced by explicit bit
/// manipulation of mt19937_64 output so that streams are reproducible across
/// standard-library implementations (std::uniform_real_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// One sample of U(lo, hi).
  double uniform(double lo, double hi);

  /// Vector with i.i.d. U(lo, hi) entries, filled in index order.
  Vec uniform_vector(Index n, double lo, double hi);

  /// Matrix with i.i.d. U(lo, hi) entries, filled row-major.
  Mat uniform_matrix(Index rows, Index cols, double lo, double hi);

  /// Raw 64-bit draw (for derived seeding).
  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// Monic polynomial s^d + c_{d-1} s^{d-1} + ... + c_1 s + c_0.
/// `coeffs` stores (c_0, ..., c_{d-1}); the leading 1 is implicit.
struct MonicPoly {
  Vec coeffs;

  Index degree() const { return coeffs.size(); }

  /// Evaluate at a complex point.
  Complex operator()(Complex s) const;
};

/// Eigenvalues listed with algebraic multiplicity, sorted by (real, imag)
/// for deterministic output.
struct Spectrum {
  CVec eigenvalues;
};

/// Result of a Hurwitz test.
struct HurwitzReport {
  bool hurwitz = false;          ///< all eigenvalues satisfy Re < -margin
  double worst_real_part = 0.0;  ///< max_i Re(lambda_i)
};

/// Throws NumericError if any entry is NaN or infinite.
void require_finite(const Mat& M, const char* what);

/// Matrix exponential expm(M * t). Uses scaling-and-squaring with Pade
/// approximation; exact to machine precision for the sizes used here.
Mat mat_exp(const Mat& M, double t = 1.0);

/// Full spectrum of a real square matrix, sorted by (real, imag).
Spectrum eigenvalues(const Mat& M);

/// Singular values in decreasing order.
std::vector<double> singular_values(const Mat& M);

/// Numerical rank: number of singular values exceeding rel_tol * sigma_max.
/// A matrix of exact zeros (or an empty matrix) has rank 0.
Index numerical_rank(const Mat& M, double rel_tol = 1e-8);

/// Monic minimal polynomial of a square matrix, found by Krylov/Arnoldi
/// iteration from two independent seeded probe vectors (results are
/// cross-checked; a disagreement keeps the larger degree). The result is
/// verified to annihilate M; failure throws NumericError.
MonicPoly minimal_polynomial(const Mat& M, std::uint64_t seed = 0);

/// Kronecker product A (x) B.
Mat kron(const Mat& A, const Mat& B);

/// Hurwitz test with a stability margin: passes iff every eigenvalue has
/// real part < -margin.
HurwitzReport is_hurwitz(const Mat& M, double margin = 1e-7);

/// Bottom-row companion matrix of a monic polynomial: superdiagonal ones,
/// last row (-c_0, ..., -c_{d-1}).
Mat companion(const MonicPoly& p);

/// Left (transposed) companion form: subdiagonal ones, last column
/// (-c_0, ..., -c_{d-1}).
Mat companion_left(const MonicPoly& p);

/// Evaluate a monic polynomial at a square matrix:
/// M^d + c_{d-1} M^{d-1} + ... + c_0 I.
Mat poly_eval(const MonicPoly& p, const Mat& M);

/// Monic polynomial with the given roots. The roots must come in conjugate
/// pairs (checked); coefficients are returned as exact reals.
MonicPoly poly_from_roots(const CVec& roots);

/// Krylov matrix [v, Mv, M^2 v, ..., M^(k-1) v].
Mat krylov_matrix(const Mat& M, const Vec& v, Index k);

/// Solve the Lyapunov equation A P + P A' + Rhs = 0 for P by Kronecker
/// vectorization. Requires that A and -A' share no eigenvalue (satisfied
/// whenever A is Hurwitz); throws NumericError otherwise.
Mat lyapunov_solve(const Mat& A, const Mat& Rhs);

}  // namespace ddctl::numkit
