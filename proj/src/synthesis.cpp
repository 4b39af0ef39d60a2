// Controller synthesis: constructive solution of the design program, gain
// extraction, controller assembly, spectral certification, non-resonance.
#include "ddctl/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "ddctl/errors.hpp"

namespace ddctl::synthesis {

namespace {

using numkit::CMat;

/// Matrix sign function by the determinant-scaled Newton iteration
/// Z <- ((c Z) + (c Z)^-1) / 2.
Mat matrix_sign(Mat Z) {
  const Index n = Z.rows();
  double prev_step = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 120; ++iter) {
    Eigen::PartialPivLU<Mat> lu(Z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det))
      throw NumericError("matrix sign: singular iterate");
    const double c = std::pow(det, -1.0 / double(n));
    const Mat Z_inv = lu.solve(Mat::Identity(n, n));
    const Mat next = 0.5 * (c * Z + Z_inv / c);
    const double step = (next - Z).norm();
    const double scale = std::max(1.0, next.norm());
    Z = next;
    if (step <= 1e-13 * scale) return Z;
    // Quadratic convergence stalls at the roundoff plateau; accept there.
    if (iter > 8 && step < 1e-7 * scale && step > 0.5 * prev_step) return Z;
    prev_step = step;
  }
  throw NumericError("matrix sign: no convergence (eigenvalue on the axis?)");
}

/// Max eigenvalue of a symmetric part 0.5 (M + M').
double max_symmetric_eig(const Mat& M) {
  const Mat S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  return es.eigenvalues().maxCoeff();
}

double min_symmetric_eig(const Mat& M) {
  const Mat S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  return es.eigenvalues().minCoeff();
}

/// Rank of a complex matrix by singular values (relative threshold).
Index complex_rank(const CMat& M, double rel_tol) {
  Eigen::BDCSVD<CMat> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double thresh = rel_tol * sv(0);
  Index r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++r;
  return r;
}

double max_abs(const Mat& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

}  // namespace

Mat stabilizing_gain(const Mat& A, const Mat& B) {
  const Index n = A.rows();
  if (A.cols() != n) throw DimensionError("stabilizing_gain: A must be square");
  if (B.rows() != n && B.size() != 0)
    throw DimensionError("stabilizing_gain: B row count differs from A");
  const Index m = B.cols();
  if (m == 0) {
    if (!numkit::is_hurwitz(A, 0.0).hurwitz)
      throw NumericError("stabilizing_gain: no inputs and A is not Hurwitz");
    return Mat::Zero(0, n);
  }
  numkit::require_finite(A, "A");
  numkit::require_finite(B, "B");

  // Scale the pair so the Hamiltonian is well balanced; K is recovered in
  // the original coordinates afterwards: with As = A/s, Bs = B/s the gain
  // of the scaled Riccati problem stabilizes As + Bs K, hence A + B K too.
  const double s = std::max(1.0, std::max(A.norm(), B.norm()));
  const Mat As = A / s;
  const Mat Bs = B / s;

  Mat H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = As;
  H.topRightCorner(n, n) = -Bs * Bs.transpose();
  H.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  H.bottomRightCorner(n, n) = -As.transpose();

  Mat sign;
  try {
    sign = matrix_sign(H);
  } catch (const NumericError& err) {
    throw NumericError(std::string("stabilizing_gain: ") + err.what());
  }

  // Basis of the stable invariant subspace: range of (I - sign)/2.
  const Mat W = 0.5 * (Mat::Identity(2 * n, 2 * n) - sign);
  Eigen::ColPivHouseholderQR<Mat> qr(W);
  if (qr.rank() != n)
    throw NumericError("stabilizing_gain: stable subspace has wrong dimension");
  const Mat Qfull = qr.householderQ();
  const Mat V = Qfull.leftCols(n);
  const Mat V1 = V.topRows(n);
  const Mat V2 = V.bottomRows(n);
  Eigen::FullPivLU<Mat> lu(V1);
  if (!lu.isInvertible())
    throw NumericError("stabilizing_gain: pair appears not stabilizable");
  Mat Xr = V2 * lu.inverse();
  Xr = 0.5 * (Xr + Xr.transpose());

  // K = -Bs' Xr stabilizes As + Bs K, and A + B K = s (As + Bs K) shares
  // the stability (s > 0 only scales the eigenvalues).
  const Mat K = -Bs.transpose() * Xr;
  const auto rep = numkit::is_hurwitz(A + B * K, 0.0);
  if (!rep.hurwitz)
    throw NumericError("stabilizing_gain: closed loop failed the Hurwitz check");
  return K;
}

LmiSolution solve_design_lmi(const pipeline::DataBatches& b, Index zero_rows,
                             double epsilon) {
  b.validate();
  if (zero_rows != b.zero_rows())
    throw ArgumentError(
        "solve_design_lmi: zero block must match the auxiliary row count");

  LmiSolution sol;
  sol.epsilon = epsilon > 0.0 ? epsilon : 1e-6 * b.Zdot.norm();

  const Index delta = b.X.rows();
  const Index mz = b.Z.rows();
  const Index m = b.U.rows();
  const Index N = b.N();
  const Index required = delta + mz + m;

  // Row-block balancing keeps the least-squares solves well conditioned; it
  // does not change the solution set.
  const double sx = std::max(max_abs(b.X), 1e-300);
  const double sz = std::max(max_abs(b.Z), 1e-300);
  const double su = std::max(max_abs(b.U), 1e-300);
  Mat Wb(required, N);
  Wb.topRows(delta) = b.X / sx;
  Wb.middleRows(delta, mz) = b.Z / sz;
  Wb.bottomRows(m) = b.U / su;

  // Min-norm right inverses picking out the Z and U row blocks. Whether the
  // data supports the construction is decided by the reconstruction
  // residuals of these solves (a separate rank estimate would re-threshold
  // marginal-but-consistent data).
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(Wb);
  Mat Ez = Mat::Zero(required, mz);
  Ez.block(delta, 0, mz, mz) = Mat::Identity(mz, mz);
  Mat Eu = Mat::Zero(required, m);
  Eu.bottomRows(m) = Mat::Identity(m, m);
  const Mat M0b = cod.solve(Ez);
  const Mat Nub = cod.solve(Eu);
  const double res_z = (Wb * M0b - Ez).norm() / std::sqrt(double(mz));
  const double res_u = (Wb * Nub - Eu).norm() / std::sqrt(double(m));
  if (res_z > 1e-6 || res_u > 1e-6) {
    // Failure analysis. The program is certified infeasible when even the
    // [X; Z] rows cannot reach the [0; I] pattern: the zero block then
    // forces a singular P. Otherwise the gain cannot be isolated from this
    // data and we report the rank found.
    Mat XZ(delta + mz, N);
    XZ.topRows(delta) = b.X / sx;
    XZ.bottomRows(mz) = b.Z / sz;
    Mat E = Mat::Zero(delta + mz, mz);
    E.bottomRows(mz) = Mat::Identity(mz, mz);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod_xz(XZ);
    const Mat M = cod_xz.solve(E);
    const double res = (XZ * M - E).norm() / std::sqrt(double(mz));
    const Index rank = numkit::numerical_rank(Wb);
    std::ostringstream diag;
    if (res > 1e-6) {
      diag << "equality constraint certified infeasible: no Q reaches the "
              "[0; P] pattern (relative residual "
           << res << "); data rank " << rank << " of " << required;
      sol.status = LmiStatus::infeasible_equality;
    } else {
      diag << "data not informative enough to isolate the gain: rank " << rank
           << " of " << required;
      sol.status = LmiStatus::not_solved;
    }
    sol.diagnostics = diag.str();
    return sol;
  }
  const Mat M0 = M0b / sz;  // [X;Z;U] M0 = [0; I; 0]
  const Mat Nu = Nub / su;  // [X;Z;U] Nu = [0; 0; I]

  // On consistent data Zdot M0 and Zdot Nu reproduce the closed filter
  // matrix and the input map exactly; stabilize that pair.
  const Mat Ahat = b.Zdot * M0;
  const Mat Ghat = b.Zdot * Nu;
  Mat Khat;
  try {
    Khat = stabilizing_gain(Ahat, Ghat);
  } catch (const NumericError& err) {
    sol.status = LmiStatus::not_solved;
    sol.diagnostics =
        std::string("stabilization of the data-consistent pair failed: ") +
        err.what();
    return sol;
  }

  const Mat Acl = Ahat + Ghat * Khat;
  Mat P;
  try {
    P = numkit::lyapunov_solve(Acl, Mat::Identity(mz, mz));
  } catch (const Error& err) {
    sol.status = LmiStatus::not_solved;
    sol.diagnostics = std::string("Lyapunov solve failed: ") + err.what();
    return sol;
  }
  P = 0.5 * (P + P.transpose());
  Mat Q = (M0 + Nu * Khat) * P;

  // Rescale to clear the requested margin on both inequalities.
  double min_p = min_symmetric_eig(P);
  double max_l = max_symmetric_eig(b.Zdot * Q);
  if (!(min_p > 0.0) || !(max_l < 0.0)) {
    std::ostringstream diag;
    diag << "constructed solution failed strictness: min eig P = " << min_p
         << ", max eig of Zdot Q + (Zdot Q)' = " << 2.0 * max_l;
    sol.status = LmiStatus::not_solved;
    sol.diagnostics = diag.str();
    return sol;
  }
  const double t =
      1.25 * sol.epsilon * std::max(1.0 / min_p, 1.0 / (-2.0 * max_l));
  P *= t;
  Q *= t;

  sol.P = P;
  sol.Q = Q;
  sol.min_eig_P = min_symmetric_eig(P);
  sol.max_eig_lyap = max_symmetric_eig(b.Zdot * Q) * 2.0;
  Mat target(delta + mz, mz);
  target.topRows(delta).setZero();
  target.bottomRows(mz) = P;
  Mat XZ(delta + mz, N);
  XZ.topRows(delta) = b.X;
  XZ.bottomRows(mz) = b.Z;
  sol.equality_residual = (XZ * Q - target).norm();

  const bool margins_ok = sol.min_eig_P >= 0.99 * sol.epsilon &&
                          sol.max_eig_lyap <= -0.99 * sol.epsilon;
  const bool equality_ok =
      sol.equality_residual <=
      1e-7 * (1.0 + P.norm()) + 1e-12 * XZ.norm() * Q.norm();
  if (!margins_ok || !equality_ok) {
    std::ostringstream diag;
    diag << "post-solve verification failed: min eig P = " << sol.min_eig_P
         << ", max lyap eig = " << sol.max_eig_lyap
         << ", equality residual = " << sol.equality_residual
         << " (epsilon = " << sol.epsilon << ")";
    sol.status = LmiStatus::not_solved;
    sol.diagnostics = diag.str();
    return sol;
  }

  sol.status = LmiStatus::feasible;
  sol.diagnostics = "constructive solution verified";
  return sol;
}

Mat extract_gain(const pipeline::DataBatches& b, const LmiSolution& sol) {
  if (!sol.feasible())
    throw ArgumentError("extract_gain: solution is not feasible");
  Eigen::SelfAdjointEigenSolver<Mat> es(sol.P);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw NumericError("extract_gain: P is too ill conditioned");
  const Mat UQ = b.U * sol.Q;
  // K = U Q P^-1 via a symmetric solve: K' = P^-1 (U Q)'.
  return sol.P.ldlt().solve(UQ.transpose()).transpose();
}

std::pair<Mat, Mat> extract_gain_split(const pipeline::DataBatches& b,
                                       const LmiSolution& sol,
                                       Index split_at) {
  const Mat K = extract_gain(b, sol);
  if (split_at < 0 || split_at > K.cols())
    throw ArgumentError("extract_gain_split: split outside the gain");
  return {K.leftCols(split_at), K.rightCols(K.cols() - split_at)};
}

Mat recover_closed_matrix(const pipeline::DataBatches& b,
                          const LmiSolution& sol) {
  if (!sol.feasible())
    throw ArgumentError("recover_closed_matrix: solution is not feasible");
  Eigen::LDLT<Mat> ldlt(sol.P);
  const Mat Zplus = ldlt.solve(sol.Q.transpose()).transpose();  // Q P^-1
  const Mat gram = b.Z * Zplus;
  const Index mz = b.Z.rows();
  if ((gram - Mat::Identity(mz, mz)).norm() > 1e-6)
    throw NumericError(
        "recover_closed_matrix: Z Z^+ deviates from the identity");
  return b.Zdot * Zplus;
}

Controller build_controller(const realization::RealizationGains& g,
                            const Mat& K, const pipeline::InternalModel* im) {
  g.validate();
  const Index mu = g.mu;
  const Index m = g.G.cols();
  const Index p = g.L.cols();
  if (K.rows() != m)
    throw DimensionError("build_controller: gain row count differs from inputs");

  Controller ctl;
  ctl.K = K;
  if (im == nullptr) {
    if (K.cols() != mu)
      throw DimensionError("build_controller: gain column count differs from mu");
    ctl.sys = lti::StateSpace(g.F + g.G * K, g.L, K, Mat::Zero(m, p));
    return ctl;
  }

  const Index nim = im->Phi.rows();
  const Index q = im->q;
  if (K.cols() != mu + nim)
    throw DimensionError(
        "build_controller: gain columns differ from mu + internal model");
  if (q > p)
    throw DimensionError("build_controller: more regulated outputs than outputs");
  const Mat K_zeta = K.leftCols(mu);
  const Mat K_eta = K.rightCols(nim);

  Mat A_c = Mat::Zero(mu + nim, mu + nim);
  A_c.topLeftCorner(mu, mu) = g.F + g.G * K_zeta;
  A_c.topRightCorner(mu, nim) = g.G * K_eta;
  A_c.bottomRightCorner(nim, nim) = im->Phi;
  Mat B_c = Mat::Zero(mu + nim, p);
  B_c.topRows(mu) = g.L;
  B_c.block(mu, 0, nim, q) = im->Gamma;
  ctl.sys = lti::StateSpace(A_c, B_c, K, Mat::Zero(m, p));
  ctl.split = std::make_pair(K_zeta, K_eta);
  return ctl;
}

Certificate certify_closed_loop(const lti::StateSpace& plant,
                                const Controller& controller,
                                const CVec& required_modes, double margin,
                                const RegulationSim* sim) {
  const lti::StateSpace closed = lti::feedback_interconnect(plant,
                                                            controller.sys);
  Certificate cert;
  cert.closed_loop = numkit::eigenvalues(closed.A);
  const auto rep = numkit::is_hurwitz(closed.A, margin);
  cert.worst_real_part = rep.worst_real_part;
  cert.hurwitz = rep.hurwitz;

  // Greedy nearest matching, every closed-loop eigenvalue used at most once.
  const CVec& lams = cert.closed_loop.eigenvalues;
  std::vector<bool> used(static_cast<size_t>(lams.size()), false);
  cert.required_ok = true;
  for (Index i = 0; i < required_modes.size(); ++i) {
    RequiredMode mode;
    mode.value = required_modes(i);
    double best = std::numeric_limits<double>::infinity();
    Index best_j = -1;
    for (Index j = 0; j < lams.size(); ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      const double dist = std::abs(lams(j) - mode.value);
      if (dist < best) {
        best = dist;
        best_j = j;
      }
    }
    mode.distance = best;
    mode.matched =
        best_j >= 0 && best <= 1e-6 * (1.0 + std::abs(mode.value));
    if (mode.matched) used[static_cast<size_t>(best_j)] = true;
    cert.required_ok = cert.required_ok && mode.matched;
    cert.required.push_back(mode);
  }

  if (sim != nullptr) {
    if (sim->q < 1 || sim->q > plant.p())
      throw DimensionError("certify_closed_loop: invalid regulated count");
    if (!(sim->T > 0.0) || sim->samples < 2)
      throw ArgumentError("certify_closed_loop: invalid simulation horizon");
    const Index n_w = sim->S.rows();
    if (sim->S.cols() != n_w || sim->w0.size() != n_w)
      throw DimensionError("certify_closed_loop: exogenous generator shapes");
    Mat P_w = sim->P_w.size() == 0 ? Mat::Zero(plant.n(), n_w) : sim->P_w;
    Mat Q_w = sim->Q_w.size() == 0 ? Mat::Zero(sim->q, n_w) : sim->Q_w;
    if (P_w.rows() != plant.n() || P_w.cols() != n_w)
      throw DimensionError("certify_closed_loop: P_w shape");
    if (Q_w.rows() > plant.p() || Q_w.cols() != n_w)
      throw DimensionError("certify_closed_loop: Q_w shape");

    const Index m = plant.m(), p = plant.p(), n = plant.n();
    Mat B_all(n, m + n_w);
    B_all.leftCols(m) = plant.B;
    B_all.rightCols(n_w) = P_w;
    Mat D_all = Mat::Zero(p, m + n_w);
    D_all.block(0, m, Q_w.rows(), n_w) = Q_w;

    std::vector<lti::BlockSpec> blocks;
    blocks.push_back({"exo",
                      lti::StateSpace::autonomous(sim->S,
                                                  Mat::Identity(n_w, n_w)),
                      sim->w0,
                      {}});
    blocks.push_back({"plant",
                      lti::StateSpace(plant.A, B_all, plant.C, D_all),
                      Vec::Zero(n),
                      {{"ctrl", 0, m}, {"exo", 0, n_w}}});
    blocks.push_back({"ctrl", controller.sys,
                      Vec::Zero(controller.sys.n()),
                      {{"plant", 0, p}}});
    lti::Augmented aug = lti::augment(blocks);
    std::map<std::string, Mat> maps;
    maps["e"] = aug.signal_maps.at("plant.out").topRows(sim->q);
    aug.signal_maps = maps;

    Vec times(sim->samples);
    for (Index k = 0; k < sim->samples; ++k)
      times(k) = sim->T * double(k) / double(sim->samples - 1);
    const auto traj = lti::sample_exact(aug, times);
    const Mat& e = traj.at("e");

    cert.error_final = e.col(sim->samples - 1).norm();
    cert.error_peak = 0.0;
    for (Index k = 0; k < sim->samples; ++k) {
      if (times(k) > sim->T / 10.0) break;
      cert.error_peak = std::max(cert.error_peak, double(e.col(k).norm()));
    }
    cert.decay_ratio = cert.error_peak > 0.0
                           ? cert.error_final / cert.error_peak
                           : 0.0;
    cert.decay_ok = cert.error_final <= sim->rho * cert.error_peak ||
                    cert.error_final <= 1e-12;
  }

  cert.pass = cert.hurwitz && cert.required_ok && cert.decay_ok;
  return cert;
}

NonResonanceReport check_non_resonance(const Mat& A, const Mat& B,
                                       const Mat& C_e, const Mat& S,
                                       double rel_tol) {
  const Index n = A.rows();
  if (A.cols() != n) throw DimensionError("check_non_resonance: A not square");
  if (B.rows() != n) throw DimensionError("check_non_resonance: B rows");
  if (C_e.cols() != n) throw DimensionError("check_non_resonance: C_e cols");
  if (S.rows() != S.cols())
    throw DimensionError("check_non_resonance: S not square");
  const Index q = C_e.rows();
  const Index m = B.cols();

  NonResonanceReport rep;
  rep.more_errors_than_inputs = q > m;
  rep.ok = true;

  // Distinct eigenvalues of S.
  const CVec& eigs = numkit::eigenvalues(S).eigenvalues;
  std::vector<Complex> distinct;
  const double scale = std::max(1.0, S.norm());
  for (Index i = 0; i < eigs.size(); ++i) {
    const Complex s = eigs(i);
    bool seen = false;
    for (const Complex& t : distinct)
      if (std::abs(s - t) <= 1e-9 * scale) seen = true;
    if (!seen) distinct.push_back(s);
  }

  for (const Complex& s : distinct) {
    NonResonanceReport::Entry entry;
    entry.s = s;
    entry.required = n + q;
    CMat pencil = CMat::Zero(n + q, n + m);
    pencil.topLeftCorner(n, n) =
        A.cast<Complex>() - s * CMat::Identity(n, n);
    pencil.topRightCorner(n, m) = B.cast<Complex>();
    pencil.bottomLeftCorner(q, n) = C_e.cast<Complex>();
    entry.rank = complex_rank(pencil, rel_tol);
    entry.ok = entry.rank == entry.required;
    rep.ok = rep.ok && entry.ok;
    rep.entries.push_back(entry);
  }
  return rep;
}

}  // namespace ddctl::synthesis
