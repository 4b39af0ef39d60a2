#include "ddctl/lti.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "ddctl/errors.hpp"

namespace ddctl::lti {

using numkit::Index;

StateSpace::StateSpace(Mat A_, Mat B_, Mat C_, Mat D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
  if (D.size() == 0) D = Mat::Zero(C.rows(), B.cols());
  validate();
}

StateSpace StateSpace::autonomous(Mat A_, Mat C_) {
  const Index n = A_.rows();
  const Index p = C_.rows();
  return StateSpace(std::move(A_), Mat::Zero(n, 0), std::move(C_),
                    Mat::Zero(p, 0));
}

void StateSpace::validate() const {
  std::ostringstream os;
  if (A.rows() != A.cols()) {
    os << "StateSpace: A must be square, got " << A.rows() << "x" << A.cols();
    throw DimensionError(os.str());
  }
  if (B.rows() != A.rows()) {
    os << "StateSpace: B has " << B.rows() << " rows, expected " << A.rows();
    throw DimensionError(os.str());
  }
  if (C.cols() != A.rows()) {
    os << "StateSpace: C has " << C.cols() << " cols, expected " << A.rows();
    throw DimensionError(os.str());
  }
  if (D.rows() != C.rows() || D.cols() != B.cols()) {
    os << "StateSpace: D is " << D.rows() << "x" << D.cols() << ", expected "
       << C.rows() << "x" << B.cols();
    throw DimensionError(os.str());
  }
}

double SineInputSpec::shortest_period() const {
  double period = 0.0;
  for (const auto& ch : channels)
    for (const auto& s : ch.sines) {
      const double p = 2.0 * std::numbers::pi / s.frequency;
      period = (period == 0.0) ? p : std::min(period, p);
    }
  return period;
}

void SineInputSpec::validate() const {
  if (channels.empty())
    throw ArgumentError("SineInputSpec: at least one channel required");
  for (const auto& ch : channels)
    for (const auto& s : ch.sines)
      if (!(s.frequency > 0.0))
        throw ArgumentError("SineInputSpec: frequencies must be positive");
}

std::pair<StateSpace, Vec> generator_from_sines(const SineInputSpec& spec) {
  spec.validate();
  Index states = 0;
  for (const auto& ch : spec.channels) {
    if (ch.bias != 0.0) ++states;
    states += 2 * static_cast<Index>(ch.sines.size());
  }
  const Index p = spec.channel_count();
  Mat A = Mat::Zero(states, states);
  Mat C = Mat::Zero(p, states);
  Vec x0 = Vec::Zero(states);
  Index at = 0;
  for (Index c = 0; c < p; ++c) {
    const auto& ch = spec.channels[static_cast<size_t>(c)];
    if (ch.bias != 0.0) {
      x0[at] = ch.bias;  // sdot = 0
      C(c, at) = 1.0;
      ++at;
    }
    for (const auto& s : ch.sines) {
      // states (a sin(w t + phi), a cos(w t + phi))
      A(at, at + 1) = s.frequency;
      A(at + 1, at) = -s.frequency;
      x0[at] = s.amplitude * std::sin(s.phase);
      x0[at + 1] = s.amplitude * std::cos(s.phase);
      C(c, at) = 1.0;
      at += 2;
    }
  }
  return {StateSpace::autonomous(std::move(A), std::move(C)), std::move(x0)};
}

const Mat& SampledTrajectory::at(const std::string& name) const {
  auto it = signals.find(name);
  if (it == signals.end()) {
    std::ostringstream os;
    os << "SampledTrajectory: no signal '" << name << "'; available:";
    for (const auto& [k, v] : signals) os << " " << k;
    throw ArgumentError(os.str());
  }
  return it->second;
}

namespace {

struct Layout {
  std::vector<Index> state_off, in_off, out_off;
  Index states = 0, ins = 0, outs = 0;
};

Layout layout_of(const std::vector<BlockSpec>& blocks) {
  Layout l;
  for (const auto& b : blocks) {
    l.state_off.push_back(l.states);
    l.in_off.push_back(l.ins);
    l.out_off.push_back(l.outs);
    l.states += b.sys.n();
    l.ins += b.sys.m();
    l.outs += b.sys.p();
  }
  return l;
}

}  // namespace

Augmented augment(const std::vector<BlockSpec>& blocks) {
  if (blocks.empty()) throw WiringError("augment: no blocks");
  std::map<std::string, Index> index_of;
  for (Index i = 0; i < static_cast<Index>(blocks.size()); ++i) {
    const auto& b = blocks[static_cast<size_t>(i)];
    b.sys.validate();
    if (b.x0.size() != b.sys.n())
      throw DimensionError("augment: x0 size mismatch in block '" + b.name +
                           "'");
    if (!index_of.emplace(b.name, i).second)
      throw WiringError("augment: duplicate block name '" + b.name + "'");
  }
  const Layout l = layout_of(blocks);

  // Selection W: total inputs from total outputs.
  Mat W = Mat::Zero(l.ins, l.outs);
  for (Index i = 0; i < static_cast<Index>(blocks.size()); ++i) {
    const auto& b = blocks[static_cast<size_t>(i)];
    Index filled = 0;
    for (const auto& port : b.inputs) {
      auto it = index_of.find(port.block);
      if (it == index_of.end())
        throw WiringError("augment: block '" + b.name +
                          "' references unknown block '" + port.block + "'");
      const Index j = it->second;
      const auto& src = blocks[static_cast<size_t>(j)];
      if (port.row_begin < 0 || port.rows < 0 ||
          port.row_begin + port.rows > src.sys.p())
        throw WiringError("augment: port range out of bounds from '" +
                          port.block + "' into '" + b.name + "'");
      for (Index r = 0; r < port.rows; ++r)
        W(l.in_off[static_cast<size_t>(i)] + filled + r,
          l.out_off[static_cast<size_t>(j)] + port.row_begin + r) = 1.0;
      filled += port.rows;
    }
    if (filled != b.sys.m()) {
      std::ostringstream os;
      os << "augment: block '" << b.name << "' needs " << b.sys.m()
         << " input rows, wired " << filled;
      throw WiringError(os.str());
    }
  }

  // Detect algebraic loops: edge j -> i when y_j feeds y_i through D_i.
  const Index nb = static_cast<Index>(blocks.size());
  std::vector<std::vector<Index>> adj(static_cast<size_t>(nb));
  for (Index i = 0; i < nb; ++i) {
    const auto& bi = blocks[static_cast<size_t>(i)];
    if (bi.sys.D.size() == 0 || bi.sys.D.isZero(0.0)) continue;
    for (Index j = 0; j < nb; ++j) {
      const auto& bj = blocks[static_cast<size_t>(j)];
      const Mat Wij = W.block(l.in_off[static_cast<size_t>(i)],
                              l.out_off[static_cast<size_t>(j)], bi.sys.m(),
                              bj.sys.p());
      if (!(bi.sys.D * Wij).isZero(0.0))
        adj[static_cast<size_t>(j)].push_back(i);
    }
  }
  // DFS cycle detection (0 = unvisited, 1 = on stack, 2 = done).
  std::vector<int> color(static_cast<size_t>(nb), 0);
  std::function<void(Index)> dfs = [&](Index v) {
    color[static_cast<size_t>(v)] = 1;
    for (Index w : adj[static_cast<size_t>(v)]) {
      if (color[static_cast<size_t>(w)] == 1)
        throw WiringError("augment: algebraic loop through feedthrough terms");
      if (color[static_cast<size_t>(w)] == 0) dfs(w);
    }
    color[static_cast<size_t>(v)] = 2;
  };
  for (Index v = 0; v < nb; ++v)
    if (color[static_cast<size_t>(v)] == 0) dfs(v);

  // Global output map: (I - D W) y = C x.
  Mat Call = Mat::Zero(l.outs, l.states);
  Mat Ball = Mat::Zero(l.states, l.ins);
  Mat Dall = Mat::Zero(l.outs, l.ins);
  Mat Aall = Mat::Zero(l.states, l.states);
  Vec x0 = Vec::Zero(l.states);
  for (Index i = 0; i < nb; ++i) {
    const auto& b = blocks[static_cast<size_t>(i)];
    const size_t si = static_cast<size_t>(i);
    Aall.block(l.state_off[si], l.state_off[si], b.sys.n(), b.sys.n()) =
        b.sys.A;
    Ball.block(l.state_off[si], l.in_off[si], b.sys.n(), b.sys.m()) = b.sys.B;
    Call.block(l.out_off[si], l.state_off[si], b.sys.p(), b.sys.n()) = b.sys.C;
    Dall.block(l.out_off[si], l.in_off[si], b.sys.p(), b.sys.m()) = b.sys.D;
    x0.segment(l.state_off[si], b.sys.n()) = b.x0;
  }
  const Mat loop = Mat::Identity(l.outs, l.outs) - Dall * W;
  Eigen::PartialPivLU<Mat> lu(loop);
  const Mat Ymap = lu.solve(Call);  // y = Ymap x
  if (!Ymap.allFinite())
    throw WiringError("augment: could not resolve output equations");
  const Mat Umap = W * Ymap;  // u = Umap x
  Aall += Ball * Umap;

  Augmented out;
  out.sys = StateSpace::autonomous(std::move(Aall), Ymap);
  out.x0 = std::move(x0);
  for (Index i = 0; i < nb; ++i) {
    const auto& b = blocks[static_cast<size_t>(i)];
    const size_t si = static_cast<size_t>(i);
    out.signal_maps[b.name + ".out"] =
        Ymap.middleRows(l.out_off[si], b.sys.p());
    Mat sel = Mat::Zero(b.sys.n(), l.states);
    sel.middleCols(l.state_off[si], b.sys.n()) =
        Mat::Identity(b.sys.n(), b.sys.n());
    out.signal_maps[b.name + ".state"] = std::move(sel);
  }
  return out;
}

SampledTrajectory sample_exact(const StateSpace& sys, const Vec& x0,
                               const Vec& times,
                               const std::map<std::string, Mat>& signal_maps) {
  sys.validate();
  if (sys.m() != 0)
    throw ArgumentError("sample_exact: system must be autonomous");
  if (x0.size() != sys.n())
    throw DimensionError("sample_exact: x0 size mismatch");
  if (times.size() < 1)
    throw ArgumentError("sample_exact: need at least one sample time");
  for (Index k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw ArgumentError("sample_exact: times must be strictly increasing");

  std::map<std::string, Mat> maps = signal_maps;
  if (maps.empty()) {
    maps["x"] = Mat::Identity(sys.n(), sys.n());
    maps["y"] = sys.C;
  }
  for (const auto& [name, M] : maps)
    if (M.cols() != sys.n())
      throw DimensionError("sample_exact: signal map '" + name +
                           "' has wrong column count");

  const Index N = times.size();
  Mat states(sys.n(), N);
  Vec x = x0;
  if (times[0] != 0.0) x = numkit::mat_exp(sys.A, times[0]) * x0;
  states.col(0) = x;
  std::map<double, Mat> flow_cache;
  for (Index k = 1; k < N; ++k) {
    const double gap = times[k] - times[k - 1];
    auto it = flow_cache.find(gap);
    if (it == flow_cache.end())
      it = flow_cache.emplace(gap, numkit::mat_exp(sys.A, gap)).first;
    x = it->second * x;
    states.col(k) = x;
  }

  SampledTrajectory traj;
  traj.times = times;
  for (const auto& [name, M] : maps) traj.signals[name] = M * states;
  return traj;
}

SampledTrajectory sample_exact(const Augmented& aug, const Vec& times) {
  SampledTrajectory traj = sample_exact(aug.sys, aug.x0, times,
                                        aug.signal_maps);
  traj.source = std::make_shared<Augmented>(aug);
  return traj;
}

StateSpace feedback_interconnect(const StateSpace& plant,
                                 const StateSpace& controller) {
  plant.validate();
  controller.validate();
  if (controller.m() != plant.p() || plant.m() != controller.p())
    throw DimensionError(
        "feedback_interconnect: plant/controller port widths do not match");
  if (!controller.D.isZero(0.0))
    throw WiringError(
        "feedback_interconnect: controller must have zero feedthrough");
  const Index n = plant.n(), nc = controller.n();
  Mat A = Mat::Zero(n + nc, n + nc);
  A.topLeftCorner(n, n) = plant.A + plant.B * controller.D * plant.C;
  A.topRightCorner(n, nc) = plant.B * controller.C;
  A.bottomLeftCorner(nc, n) = controller.B * plant.C;
  A.bottomRightCorner(nc, nc) = controller.A;
  Mat C = Mat::Zero(plant.p(), n + nc);
  C.leftCols(n) = plant.C;
  return StateSpace::autonomous(std::move(A), std::move(C));
}

void require_neutrally_stable(const Mat& S, double tol) {
  if (S.rows() != S.cols())
    throw DimensionError("require_neutrally_stable: S must be square");
  const numkit::MonicPoly m = numkit::minimal_polynomial(S);
  const numkit::Spectrum roots = numkit::eigenvalues(numkit::companion(m));
  double scale = 1.0;
  for (Index i = 0; i < roots.eigenvalues.size(); ++i)
    scale = std::max(scale, std::abs(roots.eigenvalues[i]));
  for (Index i = 0; i < roots.eigenvalues.size(); ++i) {
    if (std::abs(roots.eigenvalues[i].real()) > tol) {
      std::ostringstream os;
      os << "generator is not neutrally stable: minimal-polynomial root at ("
         << roots.eigenvalues[i].real() << ", " << roots.eigenvalues[i].imag()
         << ") is off the imaginary axis";
      throw StructuralError(os.str());
    }
    for (Index j = i + 1; j < roots.eigenvalues.size(); ++j) {
      if (std::abs(roots.eigenvalues[i] - roots.eigenvalues[j]) <=
          1e-6 * scale) {
        throw StructuralError(
            "generator is not neutrally stable: repeated minimal-polynomial "
            "root (non-semisimple mode)");
      }
    }
  }
}

}  // namespace ddctl::lti
