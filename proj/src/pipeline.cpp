// Data acquisition pipeline: internal models, auxiliary systems, trajectory
// filtering (exact and reconstructed), batch assembly, informativity test.
#include "ddctl/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <utility>

#include "ddctl/errors.hpp"
#include "interp.hpp"

namespace ddctl::pipeline {

namespace {

using realization::RealizationGains;
using realization::TuningKind;

using detail::CubicInterpolant;

/// Estimate the shortest oscillation period in a signal matrix by counting
/// strict sign changes per row (bias removed). Returns +inf when no row
/// oscillates. This is only a density heuristic for reconstruction.
double estimated_shortest_period(const Vec& times, const Mat& signal) {
  double shortest = std::numeric_limits<double>::infinity();
  const double span = times(times.size() - 1) - times(0);
  for (Index r = 0; r < signal.rows(); ++r) {
    const double mean = signal.row(r).mean();
    Index crossings = 0;
    double prev = 0.0;
    for (Index k = 0; k < signal.cols(); ++k) {
      const double val = signal(r, k) - mean;
      if (val == 0.0) continue;
      if (prev != 0.0 && ((val > 0.0) != (prev > 0.0))) ++crossings;
      prev = val;
    }
    if (crossings >= 2) {
      // Two crossings per cycle.
      shortest = std::min(shortest, 2.0 * span / double(crossings));
    }
  }
  return shortest;
}

/// Shared tail of both filtering paths: recompute the emitted filter-state
/// derivative algebraically from the emitted samples so the batch identity
/// holds to machine precision.
void attach_zeta_dot(lti::SampledTrajectory& traj, const RealizationGains& g) {
  const Mat& zeta = traj.at(FilteredSignals::zeta);
  const Mat& u = traj.at(FilteredSignals::u);
  const Mat& y = traj.at(FilteredSignals::y);
  traj.signals[FilteredSignals::zeta_dot] = g.F * zeta + g.G * u + g.L * y;
}

}  // namespace

InternalModel internal_model_from_S(const Mat& S, Index q, double omega_s) {
  if (S.rows() == 0 || S.rows() != S.cols())
    throw DimensionError("internal model: S must be square and non-empty");
  if (q < 1)
    throw ArgumentError("internal model: need at least one regulated output");
  if (omega_s == 0.0)
    throw ArgumentError("internal model: omega_s must be nonzero");
  lti::require_neutrally_stable(S);

  InternalModel im;
  im.q = q;
  im.omega_s = omega_s;
  im.m_s = numkit::minimal_polynomial(S);
  im.d = im.m_s.degree();
  im.S0 = numkit::companion(im.m_s);
  im.Gamma0 = Vec::Zero(im.d);
  im.Gamma0(im.d - 1) = omega_s;
  const Mat iq = Mat::Identity(q, q);
  im.Phi = numkit::kron(iq, im.S0);
  im.Gamma = numkit::kron(iq, Mat(im.Gamma0));
  return im;
}

AuxSpec aux_from_gains(const realization::RealizationGains& gains,
                       double omega_f, const InternalModel* im) {
  gains.validate();
  if (omega_f == 0.0)
    throw ArgumentError("auxiliary system: omega_f must be nonzero");

  AuxSpec aux;
  aux.omega_f = omega_f;

  Mat F0s;
  Vec chi0s;
  if (gains.kind == TuningKind::siso ||
      gains.kind == TuningKind::mimo_uniform) {
    // (Lambda, ell) is a cyclic pair generating the same mode set as the
    // companion of the minimal polynomial of F, so it can seed X directly.
    aux.shortcut = true;
    F0s = gains.Lambda;
    chi0s = gains.ell;
  } else {
    aux.m_f = numkit::minimal_polynomial(gains.F);
    const Index deg = aux.m_f.degree();
    if (deg < 1) throw NumericError("auxiliary system: empty minimal polynomial");
    F0s = numkit::companion(aux.m_f);
    chi0s = Vec::Zero(deg);
    chi0s(deg - 1) = omega_f;
  }

  const Index delta_s = F0s.rows();
  if (im != nullptr) {
    aux.d = im->d;
    const Index total = im->d + delta_s;
    aux.F0 = Mat::Zero(total, total);
    aux.F0.topLeftCorner(im->d, im->d) = im->S0;
    aux.F0.bottomRightCorner(delta_s, delta_s) = F0s;
    aux.chi0 = Vec::Zero(total);
    aux.chi0.head(im->d) = im->Gamma0;
    aux.chi0.tail(delta_s) = chi0s;
    aux.delta = total;
  } else {
    aux.F0 = F0s;
    aux.chi0 = chi0s;
    aux.delta = delta_s;
  }
  return aux;
}

lti::SampledTrajectory filter_dataset(const AcquisitionStack& stack,
                                      const realization::RealizationGains& g,
                                      const AuxSpec& aux,
                                      const InternalModel* im,
                                      const Vec& times) {
  stack.plant.validate();
  g.validate();
  stack.excitation.validate();

  const Index n = stack.plant.n();
  const Index m = stack.plant.m();
  const Index p = stack.plant.p();
  if (g.G.cols() != m)
    throw DimensionError("filter_dataset: gains expect a different input count");
  if (g.L.cols() != p)
    throw DimensionError("filter_dataset: gains expect a different output count");
  if (stack.x0.size() != n)
    throw DimensionError("filter_dataset: plant initial state has wrong size");
  if (stack.excitation.channel_count() != m)
    throw DimensionError("filter_dataset: excitation channel count != inputs");

  Index q = stack.q;
  if (im != nullptr) {
    if (q == 0) q = im->q;
    if (q != im->q)
      throw DimensionError("filter_dataset: stack.q differs from internal model");
    if (q > p)
      throw DimensionError("filter_dataset: more regulated outputs than outputs");
  }

  std::vector<lti::BlockSpec> blocks;

  auto [gen, gen0] = lti::generator_from_sines(stack.excitation);
  blocks.push_back({"gen", gen, gen0, {}});

  const bool has_exo = stack.S.has_value();
  Index n_w = 0;
  if (has_exo) {
    if (!stack.w0.has_value())
      throw ArgumentError("filter_dataset: exogenous S given without w0");
    n_w = stack.S->rows();
    if (stack.S->cols() != n_w || stack.w0->size() != n_w)
      throw DimensionError("filter_dataset: exogenous generator shapes");
    blocks.push_back({"exo",
                      lti::StateSpace::autonomous(*stack.S,
                                                  Mat::Identity(n_w, n_w)),
                      *stack.w0,
                      {}});
  }

  // Plant with the exogenous channel appended to its input:
  //   xdot = A x + B u + P_w w,   y = C x + [Q_w; 0] w.
  {
    Mat P = stack.P_w;
    Mat Q = stack.Q_w;
    if (has_exo) {
      if (P.size() == 0) P = Mat::Zero(n, n_w);
      if (Q.size() == 0) Q = Mat::Zero(q, n_w);
      if (P.rows() != n || P.cols() != n_w)
        throw DimensionError("filter_dataset: P_w must be n x n_w");
      if (Q.rows() > p || Q.cols() != n_w)
        throw DimensionError("filter_dataset: Q_w must be q x n_w with q <= p");
    } else if (P.size() != 0 || Q.size() != 0) {
      throw ArgumentError("filter_dataset: P_w/Q_w given without S");
    }

    Mat B_all(n, m + n_w);
    B_all.leftCols(m) = stack.plant.B;
    if (has_exo) B_all.rightCols(n_w) = P;
    Mat D_all = Mat::Zero(p, m + n_w);
    if (has_exo && Q.size() != 0) D_all.block(0, m, Q.rows(), n_w) = Q;

    lti::StateSpace plant(stack.plant.A, B_all, stack.plant.C, D_all);
    std::vector<lti::PortRange> inputs = {{"gen", 0, m}};
    if (has_exo) inputs.push_back({"exo", 0, n_w});
    blocks.push_back({"plant", plant, stack.x0, std::move(inputs)});
  }

  // Filter zetadot = F zeta + G u + L y, started at rest.
  {
    Mat B_f(g.mu, m + p);
    B_f.leftCols(m) = g.G;
    B_f.rightCols(p) = g.L;
    lti::StateSpace filter(g.F, B_f, Mat::Identity(g.mu, g.mu));
    blocks.push_back({"filter", filter, Vec::Zero(g.mu),
                      {{"gen", 0, m}, {"plant", 0, p}}});
  }

  // Autonomous auxiliary system chi_dot = F0 chi, chi(0) = chi0.
  if (aux.F0.rows() != aux.delta || aux.chi0.size() != aux.delta)
    throw DimensionError("filter_dataset: auxiliary spec is inconsistent");
  blocks.push_back({"aux",
                    lti::StateSpace::autonomous(
                        aux.F0, Mat::Identity(aux.delta, aux.delta)),
                    aux.chi0,
                    {}});

  // Internal model etadot = Phi eta + Gamma e driven by the regulated rows.
  if (im != nullptr) {
    lti::StateSpace model(im->Phi, im->Gamma,
                          Mat::Identity(im->Phi.rows(), im->Phi.rows()));
    blocks.push_back({"im", model, Vec::Zero(im->Phi.rows()),
                      {{"plant", 0, q}}});
  }

  lti::Augmented aug = lti::augment(blocks);

  std::map<std::string, Mat> maps;
  maps[FilteredSignals::u] = aug.signal_maps.at("gen.out");
  maps[FilteredSignals::y] = aug.signal_maps.at("plant.out");
  maps[FilteredSignals::zeta] = aug.signal_maps.at("filter.state");
  maps[FilteredSignals::chi] = aug.signal_maps.at("aux.state");
  if (im != nullptr) {
    maps[FilteredSignals::eta] = aug.signal_maps.at("im.state");
    maps[FilteredSignals::e] = aug.signal_maps.at("plant.out").topRows(q);
  }
  aug.signal_maps = maps;

  lti::SampledTrajectory traj = lti::sample_exact(aug, times);
  traj.signals.erase("x");
  attach_zeta_dot(traj, g);
  return traj;
}

lti::SampledTrajectory filter_dataset(const lti::SampledTrajectory& recorded,
                                      const realization::RealizationGains& g,
                                      const AuxSpec& aux,
                                      const InternalModel* im,
                                      const FilterOptions& options) {
  g.validate();
  if (!recorded.has(FilteredSignals::u) || !recorded.has(FilteredSignals::y))
    throw ArgumentError("filter_dataset: recorded data must carry u and y");
  const Mat& u = recorded.at(FilteredSignals::u);
  const Mat& y = recorded.at(FilteredSignals::y);
  const Index m = g.G.cols();
  const Index p = g.L.cols();
  const Index count = recorded.sample_count();
  if (u.rows() != m)
    throw DimensionError("filter_dataset: recorded u has wrong channel count");
  if (y.rows() != p)
    throw DimensionError("filter_dataset: recorded y has wrong channel count");
  if (u.cols() != count || y.cols() != count)
    throw DimensionError("filter_dataset: recorded signals disagree with grid");
  if (count < 2)
    throw ArgumentError("filter_dataset: need at least two recorded samples");
  for (Index k = 0; k + 1 < count; ++k)
    if (!(recorded.times(k + 1) > recorded.times(k)))
      throw ArgumentError("filter_dataset: recorded times must increase");

  const Index q = im != nullptr ? im->q : 0;
  Mat e_rec;
  if (im != nullptr) {
    if (recorded.has(FilteredSignals::e)) {
      e_rec = recorded.at(FilteredSignals::e);
      if (e_rec.rows() != q || e_rec.cols() != count)
        throw DimensionError("filter_dataset: recorded e has wrong shape");
    } else if (q <= p) {
      e_rec = y.topRows(q);
    } else {
      throw ArgumentError("filter_dataset: internal model needs an e signal");
    }
  }

  // Exact path: with in-process provenance, rebuild the diagram around the
  // recorded source and re-run the filters through the exact sampler.
  if (recorded.source != nullptr &&
      recorded.source->signal_maps.count(FilteredSignals::u) != 0 &&
      recorded.source->signal_maps.count(FilteredSignals::y) != 0) {
    const lti::Augmented& src = *recorded.source;
    const Mat& map_u = src.signal_maps.at(FilteredSignals::u);
    const Mat& map_y = src.signal_maps.at(FilteredSignals::y);
    const bool src_e = im != nullptr &&
                       src.signal_maps.count(FilteredSignals::e) != 0;

    Mat C_src(m + p + (src_e ? q : Index(0)), src.sys.n());
    C_src.topRows(m) = map_u;
    C_src.middleRows(m, p) = map_y;
    if (src_e) C_src.bottomRows(q) = src.signal_maps.at(FilteredSignals::e);

    std::vector<lti::BlockSpec> blocks;
    blocks.push_back({"src", lti::StateSpace::autonomous(src.sys.A, C_src),
                      src.x0,
                      {}});
    {
      Mat B_f(g.mu, m + p);
      B_f.leftCols(m) = g.G;
      B_f.rightCols(p) = g.L;
      blocks.push_back({"filter",
                        lti::StateSpace(g.F, B_f, Mat::Identity(g.mu, g.mu)),
                        Vec::Zero(g.mu),
                        {{"src", 0, m + p}}});
    }
    blocks.push_back({"aux",
                      lti::StateSpace::autonomous(
                          aux.F0, Mat::Identity(aux.delta, aux.delta)),
                      aux.chi0,
                      {}});
    if (im != nullptr) {
      const Index e_begin = src_e ? m + p : m;  // e rows, else top of y
      blocks.push_back({"im",
                        lti::StateSpace(im->Phi, im->Gamma,
                                        Mat::Identity(im->Phi.rows(),
                                                      im->Phi.rows())),
                        Vec::Zero(im->Phi.rows()),
                        {{"src", e_begin, q}}});
    }

    lti::Augmented aug = lti::augment(blocks);
    std::map<std::string, Mat> maps;
    maps[FilteredSignals::u] = aug.signal_maps.at("src.out").topRows(m);
    maps[FilteredSignals::y] = aug.signal_maps.at("src.out").middleRows(m, p);
    maps[FilteredSignals::zeta] = aug.signal_maps.at("filter.state");
    maps[FilteredSignals::chi] = aug.signal_maps.at("aux.state");
    if (im != nullptr) {
      maps[FilteredSignals::eta] = aug.signal_maps.at("im.state");
      const Index e_begin = src_e ? m + p : m;
      maps[FilteredSignals::e] =
          aug.signal_maps.at("src.out").middleRows(e_begin, q);
    }
    aug.signal_maps = maps;

    lti::SampledTrajectory traj = lti::sample_exact(aug, recorded.times);
    traj.signals.erase("x");
    attach_zeta_dot(traj, g);
    return traj;
  }

  // Quadrature path: reconstruct the filter states by Runge-Kutta steps
  // over the recorded grid with local interpolation of u, y (and e). The
  // auxiliary state needs no data and is advanced exactly.
  if (std::abs(recorded.times(0)) > 1e-12)
    throw ArgumentError(
        "filter_dataset: reconstruction expects a grid starting at t = 0");

  lti::SampledTrajectory traj;
  traj.times = recorded.times;
  traj.signals[FilteredSignals::u] = u;
  traj.signals[FilteredSignals::y] = y;

  double h_max = 0.0;
  for (Index k = 0; k + 1 < count; ++k)
    h_max = std::max(h_max, recorded.times(k + 1) - recorded.times(k));
  Mat probe(m + p, count);
  probe.topRows(m) = u;
  probe.bottomRows(p) = y;
  const double period = estimated_shortest_period(recorded.times, probe);
  if (std::isfinite(period) &&
      period < options.min_samples_per_period * h_max) {
    std::ostringstream msg;
    msg << "recorded grid too coarse for reconstruction: ~"
        << period / h_max << " samples per shortest period (need "
        << options.min_samples_per_period
        << "); provide denser data or in-process provenance";
    if (options.strict) throw NumericError(msg.str());
    traj.diagnostics.push_back(msg.str());
  }

  Mat in(m + p, count);
  in.topRows(m) = u;
  in.bottomRows(p) = y;
  CubicInterpolant interp_in(recorded.times, in);
  Mat B_f(g.mu, m + p);
  B_f.leftCols(m) = g.G;
  B_f.rightCols(p) = g.L;

  Mat zeta(g.mu, count);
  zeta.col(0) = Vec::Zero(g.mu);
  const int substeps = 4;
  auto rk4_advance = [&](const Mat& A, const Mat& B, auto&& input, Vec state,
                         double t0, double t1) {
    const double h = (t1 - t0) / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double t = t0 + s * h;
      const Vec k1 = A * state + B * input(t);
      const Vec k2 = A * (state + 0.5 * h * k1) + B * input(t + 0.5 * h);
      const Vec k3 = A * (state + 0.5 * h * k2) + B * input(t + 0.5 * h);
      const Vec k4 = A * (state + h * k3) + B * input(t + h);
      state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return state;
  };
  for (Index k = 0; k + 1 < count; ++k)
    zeta.col(k + 1) = rk4_advance(g.F, B_f, interp_in, zeta.col(k),
                                  recorded.times(k), recorded.times(k + 1));
  traj.signals[FilteredSignals::zeta] = zeta;

  Mat chi(aux.delta, count);
  for (Index k = 0; k < count; ++k)
    chi.col(k) = numkit::mat_exp(aux.F0, recorded.times(k)) * aux.chi0;
  traj.signals[FilteredSignals::chi] = chi;

  if (im != nullptr) {
    CubicInterpolant interp_e(recorded.times, e_rec);
    Mat eta(im->Phi.rows(), count);
    eta.col(0) = Vec::Zero(im->Phi.rows());
    for (Index k = 0; k + 1 < count; ++k)
      eta.col(k + 1) =
          rk4_advance(im->Phi, im->Gamma, interp_e, eta.col(k),
                      recorded.times(k), recorded.times(k + 1));
    traj.signals[FilteredSignals::eta] = eta;
    traj.signals[FilteredSignals::e] = e_rec;
  }

  attach_zeta_dot(traj, g);
  return traj;
}

void DataBatches::validate() const {
  const Index cols = U.cols();
  if (cols < 1) throw DimensionError("batches: no samples");
  if (X.cols() != cols || Z.cols() != cols || Zdot.cols() != cols)
    throw DimensionError("batches: sample counts disagree");
  if (Zdot.rows() != Z.rows())
    throw DimensionError("batches: Zdot shape differs from Z");
  if (!(tau_s > 0.0)) throw ArgumentError("batches: tau_s must be positive");
  numkit::require_finite(U, "U");
  numkit::require_finite(X, "X");
  numkit::require_finite(Z, "Z");
  numkit::require_finite(Zdot, "Zdot");
}

DataBatches assemble_batches(const lti::SampledTrajectory& filtered, Index N,
                             const realization::RealizationGains& g,
                             const InternalModel* im) {
  if (N < 2) throw ArgumentError("assemble_batches: need at least 2 samples");
  if (filtered.sample_count() < N)
    throw ArgumentError("assemble_batches: trajectory shorter than N");
  for (const char* name : {FilteredSignals::u, FilteredSignals::zeta,
                           FilteredSignals::zeta_dot, FilteredSignals::chi})
    if (!filtered.has(name))
      throw ArgumentError(std::string("assemble_batches: missing signal ") +
                          name);

  const double tau_s = filtered.times(1) - filtered.times(0);
  if (!(tau_s > 0.0))
    throw ArgumentError("assemble_batches: non-increasing time grid");
  if (std::abs(filtered.times(0)) > 1e-9 * tau_s)
    throw ArgumentError("assemble_batches: grid must start at t = 0");
  for (Index k = 0; k + 1 < N; ++k) {
    const double gap = filtered.times(k + 1) - filtered.times(k);
    if (std::abs(gap - tau_s) > 1e-9 * tau_s)
      throw ArgumentError("assemble_batches: grid must be uniform");
  }

  DataBatches b;
  b.tau_s = tau_s;
  b.U = filtered.at(FilteredSignals::u).leftCols(N);
  b.X = filtered.at(FilteredSignals::chi).leftCols(N);

  const Mat& zeta = filtered.at(FilteredSignals::zeta);
  const Mat& zeta_dot = filtered.at(FilteredSignals::zeta_dot);
  if (zeta.rows() != g.mu)
    throw DimensionError("assemble_batches: zeta rows differ from gains");

  if (im != nullptr) {
    for (const char* name : {FilteredSignals::eta, FilteredSignals::e})
      if (!filtered.has(name))
        throw ArgumentError(std::string("assemble_batches: missing signal ") +
                            name);
    const Mat& eta = filtered.at(FilteredSignals::eta);
    const Mat& e = filtered.at(FilteredSignals::e);
    if (eta.rows() != im->Phi.rows() || e.rows() != im->Gamma.cols())
      throw DimensionError("assemble_batches: internal-model signal shapes");
    b.Z = Mat(zeta.rows() + eta.rows(), N);
    b.Z.topRows(zeta.rows()) = zeta.leftCols(N);
    b.Z.bottomRows(eta.rows()) = eta.leftCols(N);
    b.Zdot = Mat(b.Z.rows(), N);
    b.Zdot.topRows(zeta.rows()) = zeta_dot.leftCols(N);
    b.Zdot.bottomRows(eta.rows()) =
        im->Phi * eta.leftCols(N) + im->Gamma * e.leftCols(N);
  } else {
    b.Z = zeta.leftCols(N);
    b.Zdot = zeta_dot.leftCols(N);
  }

  b.validate();
  return b;
}

InformativityReport informativity_check(const DataBatches& b, double rel_tol) {
  b.validate();
  Mat stacked(b.X.rows() + b.Z.rows() + b.U.rows(), b.N());
  stacked << b.X, b.Z, b.U;

  InformativityReport rep;
  rep.required = stacked.rows();
  rep.rank = numkit::numerical_rank(stacked, rel_tol);
  rep.singular_values = numkit::singular_values(stacked);
  rep.informative = rep.rank >= rep.required;

  const auto& sv = rep.singular_values;
  const Index nsv = static_cast<Index>(sv.size());
  if (rep.required <= nsv - 1 && sv[rep.required] > 0.0)
    rep.gap_ratio = sv[rep.required - 1] / sv[rep.required];
  else if (rep.informative)
    rep.gap_ratio = std::numeric_limits<double>::infinity();
  else
    rep.gap_ratio = 0.0;
  return rep;
}

}  // namespace ddctl::pipeline
