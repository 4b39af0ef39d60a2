// Canonical non-minimal realizations: the filter gains (F, G, L) that place
// every model uncertainty in the output map, observability-index machinery,
// observer canonical forms, and test-time oracles recovering the exact
// realization from a known plant.
#pragma once

#include <cstdint>
#include <vector>

#include "ddctl/lti.hpp"
#include "ddctl/numkit.hpp"

namespace ddctl::realization {

using numkit::CVec;
using numkit::Index;
using numkit::Mat;
using numkit::MonicPoly;
using numkit::Vec;

/// Which closed-form tuning produced a set of filter gains.
enum class TuningKind { state_feedback, siso, mimo_uniform, custom };

/// Filter gains (F, G, L) of the non-minimal realization
///   zetadot = F zeta + G u + L y,
/// equivalently zetadot = (F + L H) zeta + G u, y = H zeta for the
/// (unknown) output map H. F is Hurwitz by construction.
struct RealizationGains {
  Mat F, G, L;
  Index mu = 0;  ///< filter state dimension (rows of F)
  TuningKind kind = TuningKind::custom;

  // Parameters of the closed-form tunings, kept for downstream shortcuts.
  Mat Lambda;    ///< nu x nu Hurwitz block (siso / mimo_uniform)
  Vec ell;       ///< its input vector
  Index nu = 0;  ///< observability index used
  Index p = 0;   ///< plant output count the gains were tuned for
  Index m = 0;   ///< plant input count the gains were tuned for

  void validate() const;  ///< shape checks; throws DimensionError
};

/// Observability indices of (C, A) computed by greedy row selection over
/// the sequence c_1..c_p, A'c_1..A'c_p, ... (deterministic row order).
struct ObservabilityProfile {
  std::vector<Index> indices;  ///< one per output row, in row order
  Index nu = 0;                ///< max index
  bool uniform = false;        ///< all indices equal
  Index total = 0;             ///< sum of indices (== n iff observable)
  bool observable = false;
};

ObservabilityProfile observability_indices(const Mat& C, const Mat& A,
                                           double rel_tol = 1e-8);

/// Observer canonical form of an observable triple (A, B, C) with outputs
/// ordered so the observability indices are non-increasing (required; throws
/// StructuralError otherwise). Produces T_o with
///   A_o = T_o A T_o^-1, B_o = T_o B, C_o = C T_o^-1,
/// where A_o = Abar + A_m * Cbar, Abar a 0/1 shift structure, Cbar the
/// canonical output selector, and A_m the n x p coefficient block.
struct CanonicalForm {
  Mat T_o, T_o_inv;
  Mat A_o, B_o, C_o;
  Mat Abar;   ///< structural 0/1 shift part of A_o
  Mat Cbar;   ///< canonical selector with C_o = C_m * Cbar
  Mat C_m;    ///< p x p unit lower-triangular coupling (I when uniform)
  Mat A_m;    ///< n x p: columns of A_o holding the coefficient data
  std::vector<Index> indices;
  double cond_T_o = 0.0;
};

CanonicalForm observer_canonical_form(const Mat& A, const Mat& B, const Mat& C,
                                      double rel_tol = 1e-8);

/// Closed-form tuning for full state measurement (C = I_n):
/// F = blkdiag(-lambda I_n, -lambda I_m), G = [0; gamma I_m],
/// L = [gamma I_n; 0], mu = n + m. Requires lambda, gamma > 0.
RealizationGains tune_state_feedback(Index n, Index m, double lambda,
                                     double gamma);

/// Closed-form tuning for SISO plants of order n from a Hurwitz pair
/// (Lambda, ell) with distinct eigenvalues: F = blkdiag(Lambda, Lambda),
/// G = [0; ell], L = [ell; 0], mu = 2 n.
RealizationGains tune_siso(Index n, const Mat& Lambda, const Vec& ell);

/// Closed-form tuning for p-output, m-input plants with uniform
/// observability index nu: F = I_(p+m) (x) Lambda, L = [I_p (x) ell; 0],
/// G = [0; I_m (x) ell], mu = nu (p + m). Lambda must be nu x nu Hurwitz
/// with nu distinct eigenvalues and (Lambda, ell) controllable.
RealizationGains tune_mimo_uniform(Index p, Index m, Index nu,
                                   const Mat& Lambda, const Vec& ell);

/// Solve for the unique X with X Theta = Theta X and X beta = phi, where
/// (Theta, beta) is controllable with Theta having a cyclic vector beta:
/// X = sum_i rho_i Theta^i with rho the coordinates of phi in the Krylov
/// basis of (Theta, beta).
Mat solve_commuting(const Mat& Theta, const Vec& beta, const Vec& phi);

/// The exact realization data recovered from a known plant: Pi (full row
/// rank) and H with
///   Pi (F + L H) = A Pi,  Pi G = B,  H = C Pi.
/// Test-time oracle; synthesis never uses it.
struct PiH {
  Mat Pi, H;
  double res_state = 0.0;   ///< |Pi(F+LH) - A Pi| / scale
  double res_input = 0.0;   ///< |Pi G - B| / scale
  double res_output = 0.0;  ///< |H - C Pi| / scale
};

PiH solve_pi_h(const lti::StateSpace& plant, const RealizationGains& gains);

/// Independent checks of a realization: PBH controllability of
/// (F + L H, G) (strong realization) and stabilizability margins, transfer
/// matrix agreement with the plant at random complex probe points, and
/// spectral containment sigma(F + L H) within sigma(A) union sigma(F).
struct RealizationReport {
  bool strong = false;              ///< (F+LH, G) controllable by PBH
  double min_pbh_sv = 0.0;          ///< worst PBH singular value, scaled
  double max_transfer_rel_err = 0;  ///< over the probe points
  bool transfer_ok = false;
  double max_containment_dist = 0;  ///< Hausdorff-style one-sided distance
  bool containment_ok = false;
  bool pass = false;
};

RealizationReport verify_realization(const lti::StateSpace& plant,
                                     const RealizationGains& gains,
                                     const PiH& pih,
                                     std::uint64_t probe_seed = 0);

}  // namespace ddctl::realization
