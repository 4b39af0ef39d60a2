// Observability-index estimation from a single input-output record: rank
// probes over increasing candidate orders with an incremental filter-bank
// cache, and the sweep that turns the first rank loss into an estimate.
#pragma once

#include <string>
#include <vector>

#include "ddctl/lti.hpp"
#include "ddctl/numkit.hpp"

namespace ddctl::estimation {

using numkit::Index;
using numkit::Mat;
using numkit::Vec;

/// Filter pole/gain schedule: candidate nu_hat uses lambda_1..lambda_nu_hat
/// and gamma_1..gamma_nu_hat. Defaults are lambda_j = gamma_j = j.
struct Schedule {
  std::vector<double> lambda;
  std::vector<double> gamma;

  static Schedule default_schedule(Index max_order);
  void validate(Index needed) const;  ///< positivity, distinctness, length
};

/// Result of one rank probe at a fixed candidate order.
struct RankProbe {
  Index candidate = 0;
  Index rank = 0;
  Index full = 0;  ///< nu_hat * (p + m + 1), the full-rank value
  bool full_rank = false;
  bool inconclusive = false;  ///< too few samples: N < full
  std::vector<double> singular_values;
  double gap_ratio = 0.0;  ///< sv[rank-1]/sv[rank] at the decision gap
};

/// Verdict of an index-estimation sweep.
struct IndexEstimate {
  bool success = false;
  Index nu_hat = 0;
  bool low_confidence = false;  ///< rank loss at 2 with no full-rank predecessor
  std::string verdict;          ///< human-readable summary
  std::vector<RankProbe> probes;
  Index nu_max = 0;
};

/// Build the probe batch for one candidate order: simulate chi_dot =
/// -diag(lambda) chi from gamma, and the filter bank zeta_hat driven by
/// (y, u), stacking B = [chi; zeta_hat] sampled on the record's grid, then
/// rank it with a dual test (relative singular-value gap ratio > 1e6 AND
/// absolute threshold). Exact simulation requires the record to carry
/// in-process provenance (SampledTrajectory::source); otherwise the filters
/// are reconstructed by quadrature and results with decision gaps inside
/// the reconstruction error are flagged inconclusive.
RankProbe probe_rank(const lti::SampledTrajectory& dataset, Index candidate,
                     const Schedule& schedule, double rel_tol = 1e-8);

/// Sweep candidates 2, 3, ..., nu_max until the probe batch loses rank; the
/// estimate is the previous candidate. A loss already at 2 probes candidate
/// 1; if 1 is not full-rank either, the estimate is 1 with low confidence.
/// Reaching nu_max without loss is a failure verdict (nu >= nu_max).
/// Filter responses are cached per (signal channel, schedule entry) so each
/// candidate only simulates the newly added filters.
IndexEstimate estimate_index(const lti::SampledTrajectory& dataset,
                             Index nu_max, const Schedule& schedule,
                             double rel_tol = 1e-8);

}  // namespace ddctl::estimation
