// Data acquisition pipeline: auxiliary autonomous filters, internal models
// for regulation, trajectory filtering (exact in-process or reconstructed
// from recorded grids), batch assembly, and the informativity test.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddctl/lti.hpp"
#include "ddctl/numkit.hpp"
#include "ddctl/realization.hpp"

namespace ddctl::pipeline {

using numkit::Index;
using numkit::Mat;
using numkit::MonicPoly;
using numkit::Vec;

/// Internal model for output regulation against a signal generator S:
/// Phi = I_q (x) S0, Gamma = I_q (x) Gamma0, with S0 the bottom-row
/// companion of the minimal polynomial of S (degree d) and
/// Gamma0 = (0, ..., 0, omega_s)'.
struct InternalModel {
  Mat Phi, Gamma;
  Mat S0;
  Vec Gamma0;
  Index d = 0;  ///< degree of the minimal polynomial of S
  Index q = 0;  ///< number of regulated outputs
  double omega_s = 1.0;
  MonicPoly m_s;  ///< minimal polynomial of S
};

/// Builds the internal model. Rejects generators that are not neutrally
/// stable (all minimal-polynomial roots simple and on the imaginary axis).
InternalModel internal_model_from_S(const Mat& S, Index q,
                                    double omega_s = 1.0);

/// Auxiliary autonomous system chi_dot = F0 chi, chi(0) = chi0, whose output
/// trajectory supplies the X batch rows. For generic gains F0 is the
/// bottom-row companion of the minimal polynomial of F (degree delta) with
/// chi0 = (0,...,0,omega_f)'. For the closed-form tunings built from a
/// cyclic pair (Lambda, ell) the equivalent shortcut F0 = Lambda,
/// chi0 = ell (delta = nu) is used. For regulation the internal-model pair
/// (S0, Gamma0) is prepended: F0 = blkdiag(S0, F0_stab), chi0 = (Gamma0;
/// chi0_stab), and delta grows by d.
struct AuxSpec {
  Mat F0;
  Vec chi0;
  Index delta = 0;    ///< total auxiliary order (d + stabilization part)
  Index d = 0;        ///< internal-model part (0 for stabilization)
  bool shortcut = false;  ///< true when the (Lambda, ell) form was used
  double omega_f = 1.0;
  MonicPoly m_f;      ///< minimal polynomial of F (empty when shortcut)
};

AuxSpec aux_from_gains(const realization::RealizationGains& gains,
                       double omega_f = 1.0,
                       const InternalModel* im = nullptr);

/// Description of an in-process acquisition experiment: a known excitation
/// generator driving the (for synthesis purposes opaque) plant, optionally
/// under an exogenous disturbance/reference generator.
struct AcquisitionStack {
  lti::StateSpace plant;
  Vec x0;
  lti::SineInputSpec excitation;
  // Optional exogenous generator w_dot = S w entering as
  //   xdot = A x + B u + P w,  e = C_e x + Q_e w (first q outputs),
  // with remaining measured outputs y_r = C_r x.
  std::optional<Mat> S;
  std::optional<Vec> w0;
  Mat P_w;  ///< n x n_w (empty if unused)
  Mat Q_w;  ///< q x n_w (empty if unused)
  Index q = 0;  ///< regulated output count (0 for pure stabilization)
};

/// Options for filtering recorded (out-of-process) trajectories.
struct FilterOptions {
  bool strict = true;  ///< escalate reconstruction warnings to errors
  /// Minimum recorded samples per shortest signal period before the
  /// quadrature path is trusted.
  int min_samples_per_period = 100;
};

/// Names of the signals a filtered trajectory carries.
/// u, y: plant input/output; zeta: filter state; zeta_dot: its derivative
/// recomputed algebraically as F zeta + G u + L y from the emitted samples;
/// chi: auxiliary state; eta: internal-model state (regulation only);
/// e: regulated error (regulation only).
struct FilteredSignals {
  static constexpr const char* u = "u";
  static constexpr const char* y = "y";
  static constexpr const char* zeta = "zeta";
  static constexpr const char* zeta_dot = "zeta_dot";
  static constexpr const char* chi = "chi";
  static constexpr const char* eta = "eta";
  static constexpr const char* e = "e";
};

/// Exact in-process path: wires generator + plant (+ exogenerator) + filter
/// + auxiliary system (+ internal model) into one autonomous diagram and
/// samples it exactly on `times`. Initial filter/internal-model states are
/// zero; chi(0) = chi0.
lti::SampledTrajectory filter_dataset(const AcquisitionStack& stack,
                                      const realization::RealizationGains& g,
                                      const AuxSpec& aux,
                                      const InternalModel* im,
                                      const Vec& times);

/// Recorded-data path: the trajectory must carry u and y (plus e when an
/// internal model is given). If the record has in-process provenance the
/// filters are re-run exactly; otherwise they are reconstructed by
/// Runge-Kutta quadrature on the recorded grid (local interpolation of u
/// and y), which requires a dense grid: at least
/// options.min_samples_per_period samples per shortest period present in
/// the record's metadata. In strict mode a too-coarse grid is an error;
/// otherwise it is reported as a warning in the trajectory's diagnostics.
lti::SampledTrajectory filter_dataset(const lti::SampledTrajectory& recorded,
                                      const realization::RealizationGains& g,
                                      const AuxSpec& aux,
                                      const InternalModel* im,
                                      const FilterOptions& options = {});

/// Sampled data batches over N instants t_k = k * tau_s:
///   U (m x N), X (delta x N, auxiliary states), Z (filter [+ internal
///   model] states), Zdot (their derivatives).
struct DataBatches {
  Mat U, X, Z, Zdot;
  double tau_s = 0.0;

  Index N() const { return U.cols(); }
  Index zero_rows() const { return X.rows(); }
  void validate() const;
};

/// Assemble batches from a filtered trajectory: takes the first N samples
/// (the trajectory must have at least N), stacking eta below zeta when
/// present. Zdot rows are the corresponding derivative samples, with the
/// internal-model part computed as Phi eta + Gamma e.
DataBatches assemble_batches(const lti::SampledTrajectory& filtered, Index N,
                             const realization::RealizationGains& g,
                             const InternalModel* im = nullptr);

/// Informativity test: the synthesis program below is feasible for every
/// plant consistent with the data iff rank [X; Z; U] = delta + rows(Z) + m.
struct InformativityReport {
  bool informative = false;
  Index rank = 0;
  Index required = 0;
  std::vector<double> singular_values;
  double gap_ratio = 0.0;  ///< sv[required-1] / sv[required] (inf if exact)
};

InformativityReport informativity_check(const DataBatches& b,
                                        double rel_tol = 1e-8);

}  // namespace ddctl::pipeline
