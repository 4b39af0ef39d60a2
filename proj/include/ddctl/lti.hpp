// Continuous-time LTI plumbing: state-space containers, signal generators
// built from sinusoid descriptions, block-diagram augmentation, exact
// sampling of autonomous systems, and feedback interconnection.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ddctl/numkit.hpp"

namespace ddctl::lti {

using numkit::Index;
using numkit::Mat;
using numkit::Vec;

/// Continuous-time state-space system  xdot = A x + B u,  y = C x + D u.
/// An autonomous system has zero input width (B, D with 0 columns).
struct StateSpace {
  Mat A, B, C, D;

  StateSpace() = default;

  /// General constructor; D defaults to the zero matrix of matching shape.
  StateSpace(Mat A_, Mat B_, Mat C_, Mat D_ = Mat());

  /// Autonomous system (no input): xdot = A x, y = C x.
  static StateSpace autonomous(Mat A_, Mat C_);

  Index n() const { return A.rows(); }  ///< state dimension
  Index m() const { return B.cols(); }  ///< input dimension
  Index p() const { return C.rows(); }  ///< output dimension

  /// Throws DimensionError on any shape inconsistency.
  void validate() const;
};

/// One sinusoidal term a * sin(w t + phi).
struct SineTerm {
  double amplitude = 0.0;
  double frequency = 0.0;  ///< rad/s, must be > 0
  double phase = 0.0;
};

/// One input channel: bias + sum of sinusoids.
struct ChannelSpec {
  double bias = 0.0;
  std::vector<SineTerm> sines;
};

/// Multichannel generator description.
struct SineInputSpec {
  std::vector<ChannelSpec> channels;

  Index channel_count() const { return static_cast<Index>(channels.size()); }

  /// Smallest period 2*pi/w over all sinusoid terms; 0 if there are none.
  double shortest_period() const;

  /// Throws ArgumentError on non-positive frequencies or empty channels.
  void validate() const;
};

/// Autonomous generator realizing the described multisine: one state per
/// bias (when nonzero), two states per sinusoid (a rotation block). Returns
/// the system together with its initial state.
std::pair<StateSpace, Vec> generator_from_sines(const SineInputSpec& spec);

/// One block of a diagram to be augmented. The block's input is the
/// concatenation of the listed sources, each a row range of another block's
/// output.
struct PortRange {
  std::string block;   ///< source block name
  Index row_begin = 0; ///< first output row taken
  Index rows = 0;      ///< number of rows taken
};

struct BlockSpec {
  std::string name;
  StateSpace sys;
  Vec x0;
  std::vector<PortRange> inputs;  ///< concatenated to form this block's input
};

/// Result of augmentation: one autonomous system whose state stacks the
/// block states in declaration order, plus named linear read-out maps.
/// For every block "b" the maps contain "b.out" (its output) and "b.state"
/// (its state slice); each map M defines the signal s(t) = M x(t).
struct Augmented {
  StateSpace sys;  ///< autonomous (input width 0)
  Vec x0;
  std::map<std::string, Mat> signal_maps;
};

/// Wire the blocks into one autonomous system. Unconnected inputs are not
/// allowed; cycles are fine as long as no algebraic loop passes through
/// feedthrough terms (checked; WiringError otherwise).
Augmented augment(const std::vector<BlockSpec>& blocks);

/// A sampled multichannel record: shared time grid plus named signals,
/// each a (dim x N) matrix of samples.
struct SampledTrajectory {
  Vec times;
  std::map<std::string, Mat> signals;

  Index sample_count() const { return times.size(); }
  bool has(const std::string& name) const { return signals.count(name) != 0; }
  const Mat& at(const std::string& name) const;

  /// In-process provenance: the autonomous system this record was sampled
  /// from, enabling exact re-filtering. Not serialized to CSV.
  std::shared_ptr<const Augmented> source;

  /// Non-fatal notes attached by producers (reconstruction warnings, ...).
  std::vector<std::string> diagnostics;
};

/// Sample an autonomous system exactly on the given time grid by repeated
/// matrix exponentials over the gaps (one exponential per distinct gap).
/// Emits one signal per entry of signal_maps evaluated along the state, and
/// always "x" (the state) and "y" (C x) unless overridden by the maps.
SampledTrajectory sample_exact(const StateSpace& sys, const Vec& x0,
                               const Vec& times,
                               const std::map<std::string, Mat>& signal_maps = {});

/// Convenience overload: sample an augmented diagram, emitting its maps.
SampledTrajectory sample_exact(const Augmented& aug, const Vec& times);

/// Close the loop between a plant and an output-feedback controller
/// (controller input = plant output, plant input = controller output).
/// The controller must have zero feedthrough. Closed-loop state stacks
/// (plant, controller); output is the plant output.
StateSpace feedback_interconnect(const StateSpace& plant,
                                 const StateSpace& controller);

/// Throws StructuralError unless every root of the minimal polynomial of S
/// lies on the imaginary axis (|Re| <= tol) and is simple.
void require_neutrally_stable(const Mat& S, double tol = 1e-9);

}  // namespace ddctl::lti
