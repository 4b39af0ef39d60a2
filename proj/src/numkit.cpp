#include "ddctl/numkit.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ddctl/errors.hpp"

namespace ddctl::numkit {

namespace {

// Sort complex values by (real, imag) for reproducible spectra.
void sort_complex(CVec& v) {
  std::vector<Complex> tmp(v.data(), v.data() + v.size());
  std::sort(tmp.begin(), tmp.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  for (Index i = 0; i < v.size(); ++i) v[i] = tmp[static_cast<size_t>(i)];
}

void require_square(const Mat& M, const char* what) {
  if (M.rows() != M.cols()) {
    std::ostringstream os;
    os << what << ": matrix must be square, got " << M.rows() << "x"
       << M.cols();
    throw DimensionError(os.str());
  }
}

// Characteristic polynomial of an upper Hessenberg matrix via the leading
// principal minor recurrence; returns monic coefficients (c_0..c_{d-1}).
Vec hessenberg_charpoly(const Mat& H) {
  const Index d = H.rows();
  // p[k] holds coefficients (low to high, including leading 1) of the
  // characteristic polynomial of the leading k x k block.
  std::vector<Vec> p(static_cast<size_t>(d) + 1);
  p[0] = Vec::Ones(1);
  for (Index k = 1; k <= d; ++k) {
    Vec cur = Vec::Zero(k + 1);
    // (s - h_{k-1,k-1}) * p[k-1]
    const Vec& prev = p[static_cast<size_t>(k - 1)];
    cur.segment(1, k) += prev;
    cur.head(k) -= H(k - 1, k - 1) * prev;
    // minus the trailing products over subdiagonal chains
    double chain = 1.0;
    for (Index j = k - 1; j >= 1; --j) {
      chain *= H(j, j - 1);
      const Vec& pj = p[static_cast<size_t>(j - 1)];
      cur.head(j) -= H(j - 1, k - 1) * chain * pj;
    }
    p[static_cast<size_t>(k)] = cur;
  }
  return p[static_cast<size_t>(d)].head(d);  // drop the leading 1
}

// Arnoldi iteration on M from probe b: returns (degree, Hessenberg block).
std::pair<Index, Mat> arnoldi_degree(const Mat& M, const Vec& b,
                                     double breakdown_tol) {
  const Index n = M.rows();
  Mat V(n, n + 1);
  Mat H = Mat::Zero(n + 1, n);
  V.col(0) = b / b.norm();
  for (Index k = 0; k < n; ++k) {
    Vec w = M * V.col(k);
    for (int pass = 0; pass < 2; ++pass) {  // re-orthogonalize once
      for (Index i = 0; i <= k; ++i) {
        const double hik = V.col(i).dot(w);
        H(i, k) += hik;
        w -= hik * V.col(i);
      }
    }
    const double h = w.norm();
    if (h <= breakdown_tol) return {k + 1, H.topLeftCorner(k + 1, k + 1)};
    H(k + 1, k) = h;
    V.col(k + 1) = w / h;
  }
  return {n, H.topLeftCorner(n, n)};
}

// Deterministic fallback: smallest k with I, M, ..., M^k dependent, via
// least squares on vectorized powers.
Vec power_basis_minpoly(const Mat& M) {
  const Index n = M.rows();
  std::vector<Mat> powers;
  powers.push_back(Mat::Identity(n, n));
  for (Index d = 1; d <= n; ++d) {
    powers.push_back(powers.back() * M);
    Mat basis(n * n, d);
    for (Index j = 0; j < d; ++j)
      basis.col(j) =
          Eigen::Map<const Vec>(powers[static_cast<size_t>(j)].data(), n * n);
    Vec rhs = Eigen::Map<const Vec>(powers[static_cast<size_t>(d)].data(),
                                    n * n);
    Vec c = basis.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
    double residual = (basis * c - rhs).norm();
    if (residual <= 1e-10 * std::max(1.0, rhs.norm())) return -c;
  }
  // Cayley-Hamilton guarantees we never reach this point with d <= n.
  throw NumericError("minimal_polynomial: power-basis fallback failed");
}

double annihilation_residual(const Vec& coeffs, const Mat& M) {
  MonicPoly p{coeffs};
  return poly_eval(p, M).norm();
}

}  // namespace

double Rng::uniform(double lo, double hi) {
  // 53 random bits -> [0, 1), identical on every conforming platform.
  const double u =
      static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
  return lo + (hi - lo) * u;
}

Vec Rng::uniform_vector(Index n, double lo, double hi) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
  return v;
}

Mat Rng::uniform_matrix(Index rows, Index cols, double lo, double hi) {
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
  return m;
}

Complex MonicPoly::operator()(Complex s) const {
  Complex r(1.0, 0.0);
  for (Index k = coeffs.size() - 1; k >= 0; --k) r = r * s + coeffs[k];
  return r;
}

void require_finite(const Mat& M, const char* what) {
  if (!M.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entries");
  }
}

Mat mat_exp(const Mat& M, double t) {
  require_square(M, "mat_exp");
  require_finite(M, "mat_exp");
  if (M.rows() == 0) return Mat(0, 0);
  Mat Mt = M * t;
  return Mt.exp();
}

Spectrum eigenvalues(const Mat& M) {
  require_square(M, "eigenvalues");
  require_finite(M, "eigenvalues");
  Spectrum s;
  if (M.rows() == 0) {
    s.eigenvalues = CVec(0);
    return s;
  }
  Eigen::EigenSolver<Mat> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigenvalues: QR iteration failed to converge");
  }
  s.eigenvalues = es.eigenvalues();
  sort_complex(s.eigenvalues);
  return s;
}

std::vector<double> singular_values(const Mat& M) {
  if (M.rows() == 0 || M.cols() == 0) return {};
  Eigen::BDCSVD<Mat> svd(M);
  const Vec& sv = svd.singularValues();
  return std::vector<double>(sv.data(), sv.data() + sv.size());
}

Index numerical_rank(const Mat& M, double rel_tol) {
  if (rel_tol <= 0) throw ArgumentError("numerical_rank: rel_tol must be > 0");
  const auto sv = singular_values(M);
  if (sv.empty() || sv.front() == 0.0) return 0;
  const double threshold = rel_tol * sv.front();
  Index rank = 0;
  for (double s : sv)
    if (s > threshold) ++rank;
  return rank;
}

MonicPoly minimal_polynomial(const Mat& M, std::uint64_t seed) {
  require_square(M, "minimal_polynomial");
  require_finite(M, "minimal_polynomial");
  const Index n = M.rows();
  if (n == 0)
    throw ArgumentError("minimal_polynomial: empty matrix");

  const double scale = std::max(1.0, M.norm());
  const Mat Mn = M / scale;
  constexpr double kBreakdownTol = 1e-9;
  constexpr double kResidualTol = 1e-8;

  // Two independent probes; a random vector almost surely has a cyclic
  // component, and the cross-check catches the unlucky cases.
  Vec best;
  Index best_degree = -1;
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + 0x243F6A8885A308D3ULL);
  for (int probe = 0; probe < 2; ++probe) {
    Vec b = rng.uniform_vector(n, -1.0, 1.0);
    if (b.norm() == 0.0) b = Vec::Ones(n);
    auto [degree, H] = arnoldi_degree(Mn, b, kBreakdownTol);
    Vec coeffs = hessenberg_charpoly(H);
    if (degree > best_degree) {
      best_degree = degree;
      best = coeffs;
    } else if (degree == best_degree &&
               (coeffs - best).norm() > 1e-6 * std::max(1.0, best.norm())) {
      best_degree = -1;  // probes disagree: force the deterministic path
      break;
    }
  }

  Vec coeffs;
  if (best_degree > 0 &&
      annihilation_residual(best, Mn) <= kResidualTol) {
    coeffs = best;
  } else {
    coeffs = power_basis_minpoly(Mn);
    if (annihilation_residual(coeffs, Mn) > kResidualTol) {
      throw NumericError(
          "minimal_polynomial: no annihilating polynomial within tolerance");
    }
  }

  // Undo the normalization: minpoly(M)(x) = s^d * minpoly(M/s)(x/s).
  const Index d = coeffs.size();
  Vec out(d);
  double f = scale;  // scale^(d-k)
  for (Index k = d - 1; k >= 0; --k) {
    out[k] = coeffs[k] * f;
    f *= scale;
  }
  return MonicPoly{out};
}

Mat kron(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

HurwitzReport is_hurwitz(const Mat& M, double margin) {
  if (margin < 0) throw ArgumentError("is_hurwitz: margin must be >= 0");
  const Spectrum s = eigenvalues(M);
  HurwitzReport r;
  r.worst_real_part = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < s.eigenvalues.size(); ++i)
    r.worst_real_part = std::max(r.worst_real_part, s.eigenvalues[i].real());
  r.hurwitz = M.rows() > 0 && r.worst_real_part < -margin;
  return r;
}

Mat companion(const MonicPoly& p) {
  const Index d = p.degree();
  if (d < 1) throw ArgumentError("companion: degree must be >= 1");
  Mat C = Mat::Zero(d, d);
  for (Index i = 0; i + 1 < d; ++i) C(i, i + 1) = 1.0;
  C.row(d - 1) = -p.coeffs.transpose();
  return C;
}

Mat companion_left(const MonicPoly& p) { return companion(p).transpose(); }

Mat poly_eval(const MonicPoly& p, const Mat& M) {
  require_square(M, "poly_eval");
  const Index n = M.rows();
  Mat R = Mat::Identity(n, n);
  for (Index k = p.degree() - 1; k >= 0; --k) {
    R = R * M + p.coeffs[k] * Mat::Identity(n, n);
  }
  return R;
}

MonicPoly poly_from_roots(const CVec& roots) {
  const Index d = roots.size();
  // c[k] holds the coefficient of x^k, low to high.
  CVec c = CVec::Zero(d + 1);
  c[0] = Complex(1.0, 0.0);
  Index deg = 0;
  for (Index i = 0; i < d; ++i) {
    // multiply by (x - roots[i])
    CVec next = CVec::Zero(d + 1);
    for (Index k = 0; k <= deg; ++k) {
      next[k + 1] += c[k];
      next[k] -= roots[i] * c[k];
    }
    c = next;
    ++deg;
  }
  double scale = 0.0;
  for (Index k = 0; k <= d; ++k) scale = std::max(scale, std::abs(c[k]));
  Vec out(d);
  for (Index k = 0; k < d; ++k) {
    if (std::abs(c[k].imag()) > 1e-8 * std::max(1.0, scale)) {
      throw ArgumentError(
          "poly_from_roots: roots must close under conjugation");
    }
    out[k] = c[k].real();
  }
  return MonicPoly{out};
}

Mat krylov_matrix(const Mat& M, const Vec& v, Index k) {
  require_square(M, "krylov_matrix");
  if (M.rows() != v.size())
    throw DimensionError("krylov_matrix: vector size must match matrix");
  if (k < 1) throw ArgumentError("krylov_matrix: k must be >= 1");
  Mat K(M.rows(), k);
  K.col(0) = v;
  for (Index j = 1; j < k; ++j) K.col(j) = M * K.col(j - 1);
  return K;
}

Mat lyapunov_solve(const Mat& A, const Mat& Rhs) {
  require_square(A, "lyapunov_solve");
  if (Rhs.rows() != A.rows() || Rhs.cols() != A.rows())
    throw DimensionError("lyapunov_solve: shape mismatch");
  const Index n = A.rows();
  const Mat I = Mat::Identity(n, n);
  Mat Kmat = kron(I, A) + kron(A, I);
  Eigen::FullPivLU<Mat> lu(Kmat);
  if (!lu.isInvertible()) {
    throw NumericError(
        "lyapunov_solve: A and -A' share an eigenvalue; no unique solution");
  }
  Vec rhs = -Eigen::Map<const Vec>(Rhs.data(), n * n);
  Vec x = lu.solve(rhs);
  Mat P = Eigen::Map<const Mat>(x.data(), n, n);
  const double res = (A * P + P * A.transpose() + Rhs).norm();
  if (res > 1e-8 * std::max(1.0, Rhs.norm()) * std::max(1.0, P.norm())) {
    throw NumericError("lyapunov_solve: residual beyond tolerance");
  }
  return P;
}

}  // namespace ddctl::numkit
