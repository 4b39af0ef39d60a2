// Internal shared helper: piecewise-cubic interpolation over a sampled
// record, used by the quadrature reconstruction paths. Not installed.
#pragma once

#include <array>
#include <vector>

#include "ddctl/numkit.hpp"

namespace ddctl::detail {

using numkit::Index;
using numkit::Mat;
using numkit::Vec;

/// Piecewise-cubic (Catmull-Rom style) interpolant over a strictly
/// increasing, possibly non-uniform grid. Falls back to the available
/// stencil near the ends. Holds references; the grid and values must
/// outlive the interpolant.
class CubicInterpolant {
 public:
  CubicInterpolant(const Vec& times, const Mat& values)
      : t_(times), v_(values) {}

  Vec operator()(double t) const {
    const Index count = t_.size();
    if (count == 1) return v_.col(0);
    Index k = locate(t);
    // Stencil indices clamped into range; duplicates degrade the cubic to
    // the matching lower-order polynomial, which is what we want at ends.
    const Index i0 = std::max<Index>(k - 1, 0);
    const Index i1 = k;
    const Index i2 = std::min<Index>(k + 1, count - 1);
    const Index i3 = std::min<Index>(k + 2, count - 1);
    return neville(t, {i0, i1, i2, i3});
  }

 private:
  Index locate(double t) const {
    // Largest k with t_(k) <= t, clamped to [0, count-2].
    const Index count = t_.size();
    Index lo = 0, hi = count - 1;
    while (hi - lo > 1) {
      const Index mid = (lo + hi) / 2;
      (t_(mid) <= t ? lo : hi) = mid;
    }
    return lo;
  }

  Vec neville(double t, std::array<Index, 4> idx) const {
    // Deduplicate clamped indices, then Neville interpolation on the rest.
    std::vector<Index> pts;
    for (Index i : idx)
      if (pts.empty() || pts.back() != i) pts.push_back(i);
    std::vector<Vec> work;
    std::vector<double> ts;
    work.reserve(pts.size());
    for (Index i : pts) {
      work.push_back(v_.col(i));
      ts.push_back(t_(i));
    }
    for (std::size_t level = 1; level < work.size(); ++level) {
      for (std::size_t i = 0; i + level < work.size(); ++i) {
        const double t0 = ts[i], t1 = ts[i + level];
        work[i] = ((t1 - t) * work[i] + (t - t0) * work[i + 1]) / (t1 - t0);
      }
    }
    return work[0];
  }

  const Vec& t_;
  const Mat& v_;
};

}  // namespace ddctl::detail
