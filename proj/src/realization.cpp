#include "ddctl/realization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddctl/errors.hpp"

namespace ddctl::realization {

using numkit::Complex;
using numkit::CVec;

void RealizationGains::validate() const {
  if (F.rows() != F.cols() || F.rows() != mu)
    throw DimensionError("RealizationGains: F must be mu x mu");
  if (G.rows() != mu) throw DimensionError("RealizationGains: G rows != mu");
  if (L.rows() != mu) throw DimensionError("RealizationGains: L rows != mu");
}

ObservabilityProfile observability_indices(const Mat& C, const Mat& A,
                                           double rel_tol) {
  if (A.rows() != A.cols())
    throw DimensionError("observability_indices: A must be square");
  if (C.cols() != A.rows())
    throw DimensionError("observability_indices: C/A width mismatch");
  const Index n = A.rows(), p = C.rows();
  ObservabilityProfile prof;
  prof.indices.assign(static_cast<size_t>(p), 0);

  // Greedy level-by-level selection of rows c_i A^k, testing independence
  // against everything kept so far via an orthonormal basis. Once a row of
  // channel i becomes dependent, all later powers of that channel are too.
  Mat basis(n, n);  // columns: orthonormal basis of the kept row space
  Index kept = 0;
  std::vector<bool> active(static_cast<size_t>(p), true);
  Mat rows = C;  // current level: c_i A^k as rows
  for (Index level = 0; level < n && kept < n; ++level) {
    for (Index i = 0; i < p; ++i) {
      if (!active[static_cast<size_t>(i)]) continue;
      Vec r = rows.row(i).transpose();
      const double rn = r.norm();
      if (rn == 0.0) {
        active[static_cast<size_t>(i)] = false;
        continue;
      }
      r /= rn;
      // two projection passes for numerical orthogonality
      for (int pass = 0; pass < 2; ++pass)
        r -= basis.leftCols(kept) * (basis.leftCols(kept).transpose() * r);
      if (r.norm() > rel_tol) {
        basis.col(kept) = r / r.norm();
        ++kept;
        ++prof.indices[static_cast<size_t>(i)];
      } else {
        active[static_cast<size_t>(i)] = false;
      }
    }
    rows = rows * A;
  }
  prof.total = 0;
  prof.nu = 0;
  for (Index i = 0; i < p; ++i) {
    prof.total += prof.indices[static_cast<size_t>(i)];
    prof.nu = std::max(prof.nu, prof.indices[static_cast<size_t>(i)]);
  }
  prof.observable = (prof.total == n);
  prof.uniform = prof.observable && p > 0;
  for (Index i = 0; i < p; ++i)
    if (prof.indices[static_cast<size_t>(i)] != prof.nu) prof.uniform = false;
  return prof;
}

CanonicalForm observer_canonical_form(const Mat& A, const Mat& B, const Mat& C,
                                      double rel_tol) {
  const Index n = A.rows(), p = C.rows();
  const ObservabilityProfile prof = observability_indices(C, A, rel_tol);
  if (!prof.observable) {
    std::ostringstream os;
    os << "observer_canonical_form: (C, A) not observable (index sum "
       << prof.total << " of " << n << ")";
    throw StructuralError(os.str());
  }
  for (Index i = 0; i + 1 < p; ++i) {
    if (prof.indices[static_cast<size_t>(i)] <
        prof.indices[static_cast<size_t>(i + 1)])
      throw StructuralError(
          "observer_canonical_form: outputs must be ordered with "
          "non-increasing observability indices");
  }

  // Dual route: controller canonical form of (A', C') transposes to the
  // observer form of (A, C).
  const Mat Ad = A.transpose();
  const Mat Bd = C.transpose();
  const std::vector<Index>& kappa = prof.indices;

  // Grouped selection S = [b_1, Ad b_1, ..., b_2, ...], then the canonical
  // projections q_i are rows sigma_i of S^-1.
  Mat S(n, n);
  Index col = 0;
  for (Index i = 0; i < p; ++i) {
    Vec v = Bd.col(i);
    for (Index k = 0; k < kappa[static_cast<size_t>(i)]; ++k) {
      S.col(col++) = v;
      v = Ad * v;
    }
  }
  Eigen::FullPivLU<Mat> slu(S);
  if (!slu.isInvertible())
    throw NumericError(
        "observer_canonical_form: grouped reachability selection is "
        "numerically singular");
  const Mat Sinv = slu.inverse();

  Mat Tc(n, n);
  Index row = 0;
  Index sigma = 0;
  for (Index i = 0; i < p; ++i) {
    sigma += kappa[static_cast<size_t>(i)];
    Vec q = Sinv.row(sigma - 1).transpose();
    for (Index k = 0; k < kappa[static_cast<size_t>(i)]; ++k) {
      Tc.row(row++) = q.transpose();
      q = Ad.transpose() * q;
    }
  }

  CanonicalForm cf;
  cf.indices = prof.indices;
  Eigen::FullPivLU<Mat> tlu(Tc);
  if (!tlu.isInvertible())
    throw NumericError("observer_canonical_form: transformation singular");
  const Mat Tc_inv = tlu.inverse();
  cf.T_o = Tc_inv.transpose();
  cf.T_o_inv = Tc.transpose();
  {
    const auto sv = numkit::singular_values(cf.T_o);
    cf.cond_T_o = sv.front() / sv.back();
    if (cf.cond_T_o > 1e10)
      throw NumericError(
          "observer_canonical_form: transformation condition number exceeds "
          "1e10; canonical coordinates untrustworthy");
  }
  cf.A_o = cf.T_o * A * cf.T_o_inv;
  cf.B_o = cf.T_o * B;
  cf.C_o = C * cf.T_o_inv;

  // Exact structural parts: within-block subdiagonal shift and terminal-state
  // selectors at positions sigma_i - 1.
  cf.Abar = Mat::Zero(n, n);
  cf.Cbar = Mat::Zero(p, n);
  std::vector<Index> terminal(static_cast<size_t>(p));
  {
    Index off = 0;
    for (Index i = 0; i < p; ++i) {
      const Index k = kappa[static_cast<size_t>(i)];
      for (Index r = 0; r + 1 < k; ++r) cf.Abar(off + r + 1, off + r) = 1.0;
      terminal[static_cast<size_t>(i)] = off + k - 1;
      cf.Cbar(i, off + k - 1) = 1.0;
      off += k;
    }
  }
  cf.A_m = Mat(n, p);
  cf.C_m = Mat(p, p);
  for (Index i = 0; i < p; ++i) {
    cf.A_m.col(i) = cf.A_o.col(terminal[static_cast<size_t>(i)]);
    cf.C_m.col(i) = cf.C_o.col(terminal[static_cast<size_t>(i)]);
  }

  // Verify every structural zero/one at once.
  const double scale = std::max(1.0, cf.A_o.norm());
  const double dev_A = (cf.A_o - cf.Abar - cf.A_m * cf.Cbar).norm();
  const double dev_C = (cf.C_o - cf.C_m * cf.Cbar).norm();
  Mat Cm_pattern_dev = cf.C_m - Mat::Identity(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i)
      if (i != j && kappa[static_cast<size_t>(i)] > kappa[static_cast<size_t>(j)])
        Cm_pattern_dev(j, i) = 0.0;  // coupling allowed where nu_i > nu_j
  const double dev_Cm = Cm_pattern_dev.norm();
  if (dev_A > 1e-9 * scale || dev_C > 1e-9 * std::max(1.0, cf.C_o.norm()) ||
      dev_Cm > 1e-9 * std::max(1.0, cf.C_m.norm())) {
    std::ostringstream os;
    os << "observer_canonical_form: structural deviation beyond tolerance "
       << "(A: " << dev_A << ", C: " << dev_C << ", C_m: " << dev_Cm << ")";
    throw NumericError(os.str());
  }
  return cf;
}

namespace {

// Shared preconditions of the (Lambda, ell) tunings.
void validate_lambda_ell(const Mat& Lambda, const Vec& ell, Index nu,
                         const char* who) {
  std::ostringstream os;
  if (Lambda.rows() != nu || Lambda.cols() != nu) {
    os << who << ": Lambda must be " << nu << "x" << nu;
    throw DimensionError(os.str());
  }
  if (ell.size() != nu) {
    os << who << ": ell must have length " << nu;
    throw DimensionError(os.str());
  }
  const auto hz = numkit::is_hurwitz(Lambda, 0.0);
  if (!hz.hurwitz) {
    os << who << ": Lambda must be Hurwitz (worst real part "
       << hz.worst_real_part << ")";
    throw StructuralError(os.str());
  }
  const CVec eig = numkit::eigenvalues(Lambda).eigenvalues;
  double scale = 1.0;
  for (Index i = 0; i < nu; ++i) scale = std::max(scale, std::abs(eig[i]));
  for (Index i = 0; i < nu; ++i)
    for (Index j = i + 1; j < nu; ++j)
      if (std::abs(eig[i] - eig[j]) <= 1e-8 * scale) {
        os << who << ": Lambda must have distinct eigenvalues";
        throw StructuralError(os.str());
      }
  if (numkit::numerical_rank(numkit::krylov_matrix(Lambda, ell, nu)) != nu) {
    os << who << ": (Lambda, ell) must be controllable";
    throw StructuralError(os.str());
  }
}

}  // namespace

RealizationGains tune_state_feedback(Index n, Index m, double lambda,
                                     double gamma) {
  if (n < 1 || m < 1)
    throw ArgumentError("tune_state_feedback: n and m must be >= 1");
  if (!(lambda > 0.0) || !(gamma > 0.0))
    throw ArgumentError("tune_state_feedback: lambda and gamma must be > 0");
  RealizationGains g;
  g.mu = n + m;
  g.F = -lambda * Mat::Identity(g.mu, g.mu);
  g.G = Mat::Zero(g.mu, m);
  g.G.bottomRows(m) = gamma * Mat::Identity(m, m);
  g.L = Mat::Zero(g.mu, n);
  g.L.topRows(n) = gamma * Mat::Identity(n, n);
  g.kind = TuningKind::state_feedback;
  g.p = n;  // full state measurement
  g.m = m;
  g.nu = 1;
  g.Lambda = Mat::Constant(1, 1, -lambda);
  g.ell = Vec::Constant(1, gamma);
  return g;
}

RealizationGains tune_mimo_uniform(Index p, Index m, Index nu,
                                   const Mat& Lambda, const Vec& ell) {
  if (p < 1 || m < 1 || nu < 1)
    throw ArgumentError("tune_mimo_uniform: p, m, nu must be >= 1");
  validate_lambda_ell(Lambda, ell, nu, "tune_mimo_uniform");
  RealizationGains g;
  g.mu = nu * (p + m);
  g.F = numkit::kron(Mat::Identity(p + m, p + m), Lambda);
  g.L = Mat::Zero(g.mu, p);
  g.L.topRows(nu * p) = numkit::kron(Mat::Identity(p, p), Mat(ell));
  g.G = Mat::Zero(g.mu, m);
  g.G.bottomRows(nu * m) = numkit::kron(Mat::Identity(m, m), Mat(ell));
  g.kind = TuningKind::mimo_uniform;
  g.Lambda = Lambda;
  g.ell = ell;
  g.nu = nu;
  g.p = p;
  g.m = m;
  return g;
}

RealizationGains tune_siso(Index n, const Mat& Lambda, const Vec& ell) {
  if (n < 1) throw ArgumentError("tune_siso: n must be >= 1");
  validate_lambda_ell(Lambda, ell, n, "tune_siso");
  RealizationGains g = tune_mimo_uniform(1, 1, n, Lambda, ell);
  g.kind = TuningKind::siso;
  return g;
}

Mat solve_commuting(const Mat& Theta, const Vec& beta, const Vec& phi) {
  const Index nu = Theta.rows();
  if (Theta.cols() != nu)
    throw DimensionError("solve_commuting: Theta must be square");
  if (beta.size() != nu || phi.size() != nu)
    throw DimensionError("solve_commuting: vector length mismatch");
  const Mat R = numkit::krylov_matrix(Theta, beta, nu);
  if (numkit::numerical_rank(R) != nu)
    throw StructuralError(
        "solve_commuting: (Theta, beta) must be controllable");
  const Vec rho = R.fullPivLu().solve(phi);
  Mat X = Mat::Zero(nu, nu);
  Mat Tp = Mat::Identity(nu, nu);
  for (Index k = 0; k < nu; ++k) {
    X += rho[k] * Tp;
    Tp = Tp * Theta;
  }
  return X;
}

PiH solve_pi_h(const lti::StateSpace& plant, const RealizationGains& gains) {
  plant.validate();
  gains.validate();
  const Index n = plant.n(), p = plant.p(), m = plant.m();
  if (gains.L.cols() != p || gains.G.cols() != m)
    throw DimensionError("solve_pi_h: gains sized for a different plant");

  PiH out;
  if (gains.kind == TuningKind::state_feedback) {
    if (p != n || (plant.C - Mat::Identity(n, n)).norm() != 0.0)
      throw StructuralError(
          "solve_pi_h: state-feedback tuning requires C = I");
    const double lambda = -gains.Lambda(0, 0);
    const double gamma = gains.ell(0);
    out.Pi = Mat(n, gains.mu);
    out.Pi.leftCols(n) = (plant.A + lambda * Mat::Identity(n, n)) / gamma;
    out.Pi.rightCols(m) = plant.B / gamma;
    out.H = plant.C * out.Pi;
  } else {
    const Index nu = gains.nu;
    if (gains.p != p || gains.m != m)
      throw DimensionError("solve_pi_h: gains tuned for different port widths");
    const ObservabilityProfile prof = observability_indices(plant.C, plant.A);
    if (!prof.uniform || prof.nu != nu) {
      std::ostringstream os;
      os << "solve_pi_h: plant must have uniform observability index " << nu;
      throw StructuralError(os.str());
    }
    const CanonicalForm cf =
        observer_canonical_form(plant.A, plant.B, plant.C);

    // Left-companion image of Lambda and the coupling target.
    const numkit::MonicPoly d_lambda = numkit::minimal_polynomial(gains.Lambda);
    if (d_lambda.degree() != nu)
      throw StructuralError("solve_pi_h: Lambda must be cyclic (distinct eigenvalues)");
    const Mat Lambda_o = numkit::companion_left(d_lambda);
    const Mat Psi =
        cf.A_m + numkit::kron(Mat::Identity(p, p), Mat(d_lambda.coeffs));

    // T solving Lambda T = T Lambda_o (Krylov basis of the cyclic pair).
    const Mat T_lambda = numkit::krylov_matrix(gains.Lambda, gains.ell, nu);
    Eigen::FullPivLU<Mat> tl(T_lambda);
    if (!tl.isInvertible())
      throw StructuralError("solve_pi_h: (Lambda, ell) must be controllable");

    // Per-block commuting solves: Y has p x (p+m) blocks of size nu x nu.
    Mat Y(n, gains.mu);
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p + m; ++j) {
        const Vec target = (j < p)
                               ? Vec(Psi.block(i * nu, j, nu, 1))
                               : Vec(cf.B_o.block(i * nu, j - p, nu, 1));
        const Mat X =
            solve_commuting(gains.Lambda, gains.ell, T_lambda * target);
        Y.block(i * nu, j * nu, nu, nu) = tl.solve(X);
      }
    }
    out.Pi = cf.T_o_inv * Y;
    out.H = plant.C * out.Pi;
  }

  // Residuals of the defining equations (H = C Pi holds by construction).
  const Mat FLH = gains.F + gains.L * out.H;
  out.res_state = (out.Pi * FLH - plant.A * out.Pi).norm() /
                  std::max(1.0, (plant.A * out.Pi).norm());
  out.res_input =
      (out.Pi * gains.G - plant.B).norm() / std::max(1.0, plant.B.norm());
  out.res_output = (out.H - plant.C * out.Pi).norm() /
                   std::max(1.0, out.H.norm());
  if (out.res_state > 1e-8 || out.res_input > 1e-8) {
    std::ostringstream os;
    os << "solve_pi_h: realization equations violated (state residual "
       << out.res_state << ", input residual " << out.res_input << ")";
    throw NumericError(os.str());
  }
  if (numkit::numerical_rank(out.Pi) != n)
    throw NumericError("solve_pi_h: Pi lost full row rank");

  // The filtered dynamics split predicts sigma(A - Pi L C) = sigma of the
  // observer part; for the closed-form tunings that is p copies of Lambda.
  const Mat Aml = plant.A - out.Pi * gains.L * plant.C;
  const CVec got = numkit::eigenvalues(Aml).eigenvalues;
  const CVec want =
      numkit::eigenvalues(
          numkit::kron(Mat::Identity(n / gains.nu, n / gains.nu), gains.Lambda))
          .eigenvalues;
  for (Index i = 0; i < got.size(); ++i) {
    double best = 1e300;
    for (Index j = 0; j < want.size(); ++j)
      best = std::min(best, std::abs(got[i] - want[j]));
    if (best > 1e-6 * std::max(1.0, std::abs(got[i]))) {
      std::ostringstream os;
      os << "solve_pi_h: residual spectrum of A - Pi L C off-target by "
         << best;
      throw NumericError(os.str());
    }
  }
  return out;
}

RealizationReport verify_realization(const lti::StateSpace& plant,
                                     const RealizationGains& gains,
                                     const PiH& pih, std::uint64_t probe_seed) {
  plant.validate();
  gains.validate();
  RealizationReport rep;
  const Mat FLH = gains.F + gains.L * pih.H;
  const Index mu = gains.mu;

  // PBH controllability of (F + L H, G): min singular value of
  // [lambda I - FLH, G] over the eigenvalues.
  const CVec eig = numkit::eigenvalues(FLH).eigenvalues;
  const double scale = std::max(1.0, FLH.norm());
  rep.min_pbh_sv = 1e300;
  for (Index i = 0; i < eig.size(); ++i) {
    Eigen::MatrixXcd pencil(mu, mu + gains.G.cols());
    pencil.leftCols(mu) =
        eig[i] * Eigen::MatrixXcd::Identity(mu, mu) - FLH.cast<Complex>();
    pencil.rightCols(gains.G.cols()) = gains.G.cast<Complex>();
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(pencil);
    rep.min_pbh_sv =
        std::min(rep.min_pbh_sv, svd.singularValues().minCoeff() / scale);
  }
  rep.strong = rep.min_pbh_sv > 1e-8;

  // Transfer-matrix agreement at random complex probe points off the poles.
  numkit::Rng rng(probe_seed * 0x2545F4914F6CDD1DULL + 17);
  rep.max_transfer_rel_err = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Complex s(rng.uniform(0.5, 2.5), rng.uniform(-3.0, 3.0));
    const Eigen::MatrixXcd Tp =
        plant.C.cast<Complex>() *
        (s * Eigen::MatrixXcd::Identity(plant.n(), plant.n()) -
         plant.A.cast<Complex>())
            .partialPivLu()
            .solve(plant.B.cast<Complex>());
    const Eigen::MatrixXcd Tr =
        pih.H.cast<Complex>() *
        (s * Eigen::MatrixXcd::Identity(mu, mu) - FLH.cast<Complex>())
            .partialPivLu()
            .solve(gains.G.cast<Complex>());
    const double err = (Tp - Tr).norm() / std::max(1.0, Tp.norm());
    rep.max_transfer_rel_err = std::max(rep.max_transfer_rel_err, err);
  }
  rep.transfer_ok = rep.max_transfer_rel_err < 1e-8;

  // Spectral containment: sigma(F + L H) inside sigma(A) union sigma(F).
  const CVec eA = numkit::eigenvalues(plant.A).eigenvalues;
  const CVec eF = numkit::eigenvalues(gains.F).eigenvalues;
  rep.max_containment_dist = 0.0;
  for (Index i = 0; i < eig.size(); ++i) {
    double best = 1e300;
    for (Index j = 0; j < eA.size(); ++j)
      best = std::min(best, std::abs(eig[i] - eA[j]));
    for (Index j = 0; j < eF.size(); ++j)
      best = std::min(best, std::abs(eig[i] - eF[j]));
    rep.max_containment_dist = std::max(rep.max_containment_dist, best);
  }
  rep.containment_ok = rep.max_containment_dist < 1e-6;

  rep.pass = rep.strong && rep.transfer_ok && rep.containment_ok;
  return rep;
}

}  // namespace ddctl::realization
