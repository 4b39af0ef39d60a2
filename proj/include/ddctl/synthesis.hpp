// Controller synthesis from data batches: the semidefinite feasibility
// program, gain extraction, closed-loop matrix recovery, controller
// assembly, spectral certification, and the non-resonance test.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddctl/lti.hpp"
#include "ddctl/numkit.hpp"
#include "ddctl/pipeline.hpp"
#include "ddctl/realization.hpp"

namespace ddctl::synthesis {

using numkit::CVec;
using numkit::Complex;
using numkit::Index;
using numkit::Mat;
using numkit::Spectrum;
using numkit::Vec;

enum class LmiStatus {
  feasible,             ///< verified solution found
  infeasible_equality,  ///< certified: the equality constraint has no solution
  not_solved,           ///< no solution found, infeasibility not certified
};

/// Solution of the design program
///   P = P' > 0 (min eig >= epsilon),
///   Zdot Q + Q' Zdot' < 0 (max eig <= -epsilon),
///   [0; P] = [X; Z] Q  (zero block of `zero_rows` rows).
struct LmiSolution {
  LmiStatus status = LmiStatus::not_solved;
  Mat P, Q;
  double epsilon = 0.0;
  double min_eig_P = 0.0;
  double max_eig_lyap = 0.0;       ///< max eig of Zdot Q + Q' Zdot'
  double equality_residual = 0.0;  ///< |[0;P] - [X;Z]Q| (Frobenius)
  std::string diagnostics;

  bool feasible() const { return status == LmiStatus::feasible; }
};

/// Solve the design program. epsilon <= 0 selects the default
/// 1e-6 * |Zdot| (Frobenius). Every returned `feasible` solution has been
/// re-verified against the constraints above on the raw (unscaled) data.
LmiSolution solve_design_lmi(const pipeline::DataBatches& b, Index zero_rows,
                             double epsilon = 0.0);

/// K = U Q P^-1. Throws NumericError when cond(P) > 1e12.
Mat extract_gain(const pipeline::DataBatches& b, const LmiSolution& sol);

/// Split variant for regulation: returns (K_zeta, K_eta) with K_zeta the
/// first split_at columns.
std::pair<Mat, Mat> extract_gain_split(const pipeline::DataBatches& b,
                                       const LmiSolution& sol, Index split_at);

/// Data-driven estimate of the filter-coordinates closed-loop matrix,
/// Zdot Z^+ with Z^+ = Q P^-1. Throws NumericError if |Z Z^+ - I| > 1e-6.
Mat recover_closed_matrix(const pipeline::DataBatches& b,
                          const LmiSolution& sol);

/// Dynamic output-feedback controller. Stabilization:
///   xidot = (F + G K) xi + L y,  u = K xi.
/// Regulation (internal model present):
///   A_c = [[F + G K_zeta, G K_eta], [0, Phi]],
///   B_c = [[L_e, L_r], [Gamma, 0]],  C_c = [K_zeta, K_eta],  D_c = 0,
/// where L = [L_e, L_r] splits after the q error columns.
struct Controller {
  lti::StateSpace sys;  ///< D is always zero
  Mat K;                ///< full gain (m x cols(Z))
  std::optional<std::pair<Mat, Mat>> split;  ///< (K_zeta, K_eta)
};

Controller build_controller(const realization::RealizationGains& g,
                            const Mat& K,
                            const pipeline::InternalModel* im = nullptr);

/// One closed-loop eigenvalue that a certificate must contain.
struct RequiredMode {
  Complex value;
  double distance = 0.0;  ///< to the nearest matched closed-loop eigenvalue
  bool matched = false;
};

/// Spectral certificate of the plant/controller interconnection.
struct Certificate {
  Spectrum closed_loop;  ///< eigenvalues of the interconnection
  double worst_real_part = 0.0;
  bool hurwitz = false;
  std::vector<RequiredMode> required;  ///< greedy nearest matching, each used once
  bool required_ok = false;
  // Regulation-only simulation summary (when requested):
  double error_final = -1.0;  ///< |e(T)|
  double error_peak = -1.0;   ///< peak |e(t)| over the early window
  double decay_ratio = -1.0;   ///< error_final / peak
  bool decay_ok = true;
  bool pass = false;
};

/// Optional regulation simulation performed by certify_closed_loop: the
/// closed loop driven by wdot = S w from w0, with plant disturbance input
/// P_w w and error e = C_e x + Q_w w on the first q outputs. The decay test
/// compares |e(T)| against rho * max |e(t)| over t <= T/10.
struct RegulationSim {
  Mat S;
  Vec w0;
  Mat P_w, Q_w;
  Index q = 0;
  double T = 0.0;
  Index samples = 2000;
  double rho = 0.05;
};

Certificate certify_closed_loop(const lti::StateSpace& plant,
                                const Controller& controller,
                                const CVec& required_modes,
                                double margin = 1e-7,
                                const RegulationSim* sim = nullptr);

/// Non-resonance test: for each distinct eigenvalue s of S, checks
/// rank [[A - s I, B], [C_e, 0]] = n + q over the complex field.
struct NonResonanceReport {
  struct Entry {
    Complex s;
    Index rank = 0;
    Index required = 0;
    bool ok = false;
  };
  bool ok = false;
  std::vector<Entry> entries;
  bool more_errors_than_inputs = false;  ///< q > m: warned, not failed
};

NonResonanceReport check_non_resonance(const Mat& A, const Mat& B,
                                       const Mat& C_e, const Mat& S,
                                       double rel_tol = 1e-8);

/// Stabilizing state feedback for a stabilizable pair via the matrix-sign
/// Riccati solve: returns K with A + B K Hurwitz. Used internally by the
/// design-program solver; exposed for testing.
Mat stabilizing_gain(const Mat& A, const Mat& B);

}  // namespace ddctl::synthesis
