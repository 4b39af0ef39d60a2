// Tests for canonical non-minimal realizations: index computation, observer
// canonical form, closed-form tunings, commuting solves, and the
// realization-recovery oracle.
#include "ddctl/realization.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "ddctl/errors.hpp"
#include "plant_factory.hpp"
#include "test_support.hpp"

namespace nk = ddctl::numkit;
namespace lti = ddctl::lti;
namespace rz = ddctl::realization;
namespace ts = ddctl::testing;
using nk::Index;
using nk::Mat;
using nk::Vec;

namespace {

Mat reactor_lambda() {
  Mat L = Mat::Zero(2, 2);
  L(0, 0) = -4.0;
  L(1, 1) = -8.0;
  return L;
}

Vec reactor_ell() {
  Vec l(2);
  l << 1.0, 2.0;
  return l;
}

}  // namespace

TEST(ObservabilityIndices, BenchmarkPlantsAreUniform) {
  const auto reactor = ts::reactor_plant();
  const auto prof = rz::observability_indices(reactor.C, reactor.A);
  EXPECT_TRUE(prof.observable);
  EXPECT_TRUE(prof.uniform);
  EXPECT_EQ(prof.nu, 2);
  ASSERT_EQ(prof.indices.size(), 2u);
  EXPECT_EQ(prof.indices[0], 2);
  EXPECT_EQ(prof.indices[1], 2);

  const auto vessel = ts::vessel_plant();
  const auto vprof = rz::observability_indices(vessel.plant.C, vessel.plant.A);
  EXPECT_TRUE(vprof.uniform);
  EXPECT_EQ(vprof.nu, 2);
}

TEST(ObservabilityIndices, SimilarityInvariance) {
  const auto plant = ts::random_plant_with_indices({3, 2}, 2, 7);
  const auto prof = rz::observability_indices(plant.sys.C, plant.sys.A);
  ASSERT_EQ(prof.indices, (std::vector<Index>{3, 2}));
  const Mat T = Mat::Identity(5, 5) + 0.3 * nk::Rng(3).uniform_matrix(5, 5, -1, 1);
  const Mat A2 = T * plant.sys.A * T.inverse();
  const Mat C2 = plant.sys.C * T.inverse();
  const auto prof2 = rz::observability_indices(C2, A2);
  EXPECT_EQ(prof2.indices, prof.indices);
}

TEST(ObservabilityIndices, DetectsUnobservable) {
  // block-diagonal system observed only through its first block
  Mat A = Mat::Zero(4, 4);
  A.topLeftCorner(2, 2) << 0, 1, -2, -3;
  A.bottomRightCorner(2, 2) << 0, 1, -5, -2;
  Mat C = Mat::Zero(1, 4);
  C(0, 0) = 1.0;
  const auto prof = rz::observability_indices(C, A);
  EXPECT_FALSE(prof.observable);
  EXPECT_EQ(prof.total, 2);
}

TEST(ObserverCanonicalForm, StructuralZerosAcrossSeededPlants) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const Index p = 1 + static_cast<Index>(seed % 3);
    const Index nu = 1 + static_cast<Index>((seed / 3) % 3);
    const auto plant = ts::random_uniform_plant(p, 2, nu, seed * 101);
    const auto cf = rz::observer_canonical_form(plant.sys.A, plant.sys.B,
                                                plant.sys.C);
    const double scale = std::max(1.0, cf.A_o.norm());
    EXPECT_LT((cf.A_o - cf.Abar - cf.A_m * cf.Cbar).norm(), 1e-9 * scale);
    // uniform indices: the output map is exactly the canonical selector
    EXPECT_LT((cf.C_o - cf.Cbar).norm(), 1e-9);
    EXPECT_LT((cf.C_m - Mat::Identity(p, p)).norm(), 1e-9);
    EXPECT_LT((cf.T_o * plant.sys.A - cf.A_o * cf.T_o).norm(), 1e-8 * scale);
    EXPECT_LE(cf.cond_T_o, 1e10);
  }
}

TEST(ObserverCanonicalForm, SortedMixedIndicesCouplingPattern) {
  const auto plant = ts::random_plant_with_indices({3, 2}, 1, 31);
  const auto cf = rz::observer_canonical_form(plant.sys.A, plant.sys.B,
                                              plant.sys.C);
  // C_m is unit lower-triangular; coupling only where nu_i > nu_j.
  EXPECT_NEAR(cf.C_m(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(cf.C_m(1, 1), 1.0, 1e-9);
  EXPECT_NEAR(cf.C_m(0, 1), 0.0, 1e-9);  // nu_2 < nu_1: no coupling upward
  const double scale = std::max(1.0, cf.A_o.norm());
  EXPECT_LT((cf.A_o - cf.Abar - cf.A_m * cf.Cbar).norm(), 1e-9 * scale);
}

TEST(ObserverCanonicalForm, IdempotentOnCanonicalPlant) {
  const auto plant = ts::random_uniform_plant(2, 1, 2, 77, /*scramble=*/false);
  const auto cf = rz::observer_canonical_form(plant.sys.A, plant.sys.B,
                                              plant.sys.C);
  EXPECT_LT((cf.A_o - plant.sys.A).norm(), 1e-9 * std::max(1.0, plant.sys.A.norm()));
  EXPECT_LT((cf.T_o - Mat::Identity(4, 4)).norm(), 1e-9);
}

TEST(ObserverCanonicalForm, RejectsUnsortedAndUnobservable) {
  // decoupled blocks observed by separate outputs force indices (2, 3),
  // which is not non-increasing
  Mat A = Mat::Zero(5, 5);
  A.topLeftCorner(2, 2) << 0, 1, -2, -3;
  A.bottomRightCorner(3, 3) << 0, 1, 0, 0, 0, 1, -1, -4, -2;
  Mat Cd = Mat::Zero(2, 5);
  Cd(0, 0) = 1.0;
  Cd(1, 2) = 1.0;
  ASSERT_EQ(rz::observability_indices(Cd, A).indices,
            (std::vector<Index>{2, 3}));
  EXPECT_THROW(rz::observer_canonical_form(A, Mat::Zero(5, 1), Cd),
               ddctl::StructuralError);

  Mat Az = Mat::Zero(3, 3);
  Mat Cz = Mat::Zero(1, 3);
  Cz(0, 0) = 1;
  EXPECT_THROW(rz::observer_canonical_form(Az, Mat::Zero(3, 1), Cz),
               ddctl::StructuralError);
}

TEST(Tunings, StateFeedbackExactLayout) {
  const auto g = rz::tune_state_feedback(2, 1, 4.0, 3.0);
  EXPECT_EQ(g.mu, 3);
  EXPECT_LT((g.F + 4.0 * Mat::Identity(3, 3)).norm(), 1e-15);
  Mat Gexp = Mat::Zero(3, 1);
  Gexp(2, 0) = 3.0;
  EXPECT_LT((g.G - Gexp).norm(), 1e-15);
  Mat Lexp = Mat::Zero(3, 2);
  Lexp(0, 0) = 3.0;
  Lexp(1, 1) = 3.0;
  EXPECT_LT((g.L - Lexp).norm(), 1e-15);
  EXPECT_THROW(rz::tune_state_feedback(2, 1, -1.0, 1.0), ddctl::ArgumentError);
}

TEST(Tunings, MimoUniformExactLayout) {
  const auto g = rz::tune_mimo_uniform(2, 2, 2, reactor_lambda(), reactor_ell());
  EXPECT_EQ(g.mu, 8);
  EXPECT_LT((g.F - nk::kron(Mat::Identity(4, 4), reactor_lambda())).norm(),
            1e-15);
  // L stacks I_p (x) ell over zeros; G stacks zeros over I_m (x) ell.
  Mat Lexp = Mat::Zero(8, 2);
  Lexp(0, 0) = 1;
  Lexp(1, 0) = 2;
  Lexp(2, 1) = 1;
  Lexp(3, 1) = 2;
  EXPECT_LT((g.L - Lexp).norm(), 1e-15);
  Mat Gexp = Mat::Zero(8, 2);
  Gexp(4, 0) = 1;
  Gexp(5, 0) = 2;
  Gexp(6, 1) = 1;
  Gexp(7, 1) = 2;
  EXPECT_LT((g.G - Gexp).norm(), 1e-15);
  EXPECT_TRUE(nk::is_hurwitz(g.F).hurwitz);
}

TEST(Tunings, SisoMatchesMimoSpecialization) {
  Mat Lam(2, 2);
  Lam << 0, 1, -2, -2;
  Vec ell(2);
  ell << 0, 0.5;
  const auto gs = rz::tune_siso(2, Lam, ell);
  const auto gm = rz::tune_mimo_uniform(1, 1, 2, Lam, ell);
  EXPECT_EQ(gs.kind, rz::TuningKind::siso);
  EXPECT_LT((gs.F - gm.F).norm(), 1e-15);
  EXPECT_LT((gs.G - gm.G).norm(), 1e-15);
  EXPECT_LT((gs.L - gm.L).norm(), 1e-15);
}

TEST(Tunings, PreconditionFailures) {
  Mat notHurwitz(2, 2);
  notHurwitz << 0, 1, -2, 2;
  EXPECT_THROW(rz::tune_mimo_uniform(1, 1, 2, notHurwitz, reactor_ell()),
               ddctl::StructuralError);
  Mat repeated = -3.0 * Mat::Identity(2, 2);
  EXPECT_THROW(rz::tune_mimo_uniform(1, 1, 2, repeated, reactor_ell()),
               ddctl::StructuralError);
  Vec badell(2);
  badell << 1.0, 0.0;  // misses the second eigendirection
  EXPECT_THROW(rz::tune_mimo_uniform(1, 1, 2, reactor_lambda(), badell),
               ddctl::StructuralError);
}

TEST(SolveCommuting, DiagonalClosedFormAndInvariants) {
  Mat Theta = Mat::Zero(2, 2);
  Theta(0, 0) = -1;
  Theta(1, 1) = -2;
  Vec beta(2), phi(2);
  beta << 1, 1;
  phi << 2, 6;
  const Mat X = rz::solve_commuting(Theta, beta, phi);
  EXPECT_NEAR(X(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(X(1, 1), 6.0, 1e-12);
  EXPECT_NEAR(X(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(X(1, 0), 0.0, 1e-12);

  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    nk::Rng rng(seed);
    const Index nu = 2 + static_cast<Index>(seed % 4);
    nk::MonicPoly p{rng.uniform_vector(nu, 0.5, 2.0)};
    const Mat Th = nk::companion(p);  // cyclic
    const Vec b = Vec::Unit(nu, 0);
    const Vec f = rng.uniform_vector(nu, -2, 2);
    const Mat Xs = rz::solve_commuting(Th, b, f);
    EXPECT_LT((Xs * Th - Th * Xs).norm(),
              1e-10 * std::max(1.0, Th.norm() * Xs.norm()));
    EXPECT_LT((Xs * b - f).norm(), 1e-9 * std::max(1.0, f.norm()));
  }
}

TEST(SolveCommuting, RejectsUncontrollablePair) {
  Mat Theta = Mat::Zero(2, 2);
  Theta(0, 0) = -1;
  Theta(1, 1) = -2;
  EXPECT_THROW(rz::solve_commuting(Theta, Vec::Unit(2, 0), Vec::Ones(2)),
               ddctl::StructuralError);
}

TEST(SolvePiH, StateFeedbackClosedForm) {
  nk::Rng rng(5);
  const Index n = 3, m = 2;
  const Mat A = rng.uniform_matrix(n, n, -2, 2);
  const Mat B = rng.uniform_matrix(n, m, -1, 1);
  lti::StateSpace plant(A, B, Mat::Identity(n, n));
  const auto g = rz::tune_state_feedback(n, m, 1.5, 2.0);
  const auto pih = rz::solve_pi_h(plant, g);
  EXPECT_LT((pih.Pi.leftCols(n) - (A + 1.5 * Mat::Identity(n, n)) / 2.0).norm(),
            1e-12);
  EXPECT_LT((pih.Pi.rightCols(m) - B / 2.0).norm(), 1e-12);
  EXPECT_LT(pih.res_state, 1e-10);
  EXPECT_LT(pih.res_input, 1e-10);
}

TEST(SolvePiH, ReactorRealizationEquations) {
  const auto plant = ts::reactor_plant();
  const auto g = rz::tune_mimo_uniform(2, 2, 2, reactor_lambda(), reactor_ell());
  const auto pih = rz::solve_pi_h(plant, g);
  EXPECT_LT(pih.res_state, 1e-8);
  EXPECT_LT(pih.res_input, 1e-8);
  EXPECT_EQ(nk::numerical_rank(pih.Pi), 4);
  const auto rep = rz::verify_realization(plant, g, pih);
  EXPECT_TRUE(rep.strong);
  EXPECT_TRUE(rep.transfer_ok) << rep.max_transfer_rel_err;
  EXPECT_TRUE(rep.containment_ok) << rep.max_containment_dist;
  EXPECT_TRUE(rep.pass);
}

TEST(SolvePiH, FiftySeededPlantsSatisfyRealizationEquations) {
  Mat Lam(3, 3);
  Lam << -1, 0, 0, 0, -2, 0, 0, 0, -3.5;
  Vec lvec(3);
  lvec << 1, 1, 1;
  int count = 0;
  for (std::uint64_t seed = 1; count < 50; ++seed) {
    const Index p = 1 + static_cast<Index>(seed % 3);
    const Index m = 1 + static_cast<Index>((seed / 3) % 3);
    const Index nu = 1 + static_cast<Index>((seed / 9) % 3);
    if (p * nu > 8) continue;
    const auto plant = ts::random_uniform_plant(p, m, nu, seed * 613 + 17);
    const auto g = rz::tune_mimo_uniform(
        p, m, nu, Lam.topLeftCorner(nu, nu), lvec.head(nu));
    const auto pih = rz::solve_pi_h(plant.sys, g);
    EXPECT_LT(pih.res_state, 1e-8) << "seed " << seed;
    EXPECT_LT(pih.res_input, 1e-8) << "seed " << seed;
    ++count;
  }
}

TEST(SolvePiH, ResidualSpectrumMatchesFilterCopies) {
  const auto plant = ts::reactor_plant();
  const auto g = rz::tune_mimo_uniform(2, 2, 2, reactor_lambda(), reactor_ell());
  const auto pih = rz::solve_pi_h(plant, g);
  const Mat Aml = plant.A - pih.Pi * g.L * plant.C;
  const auto eig = nk::eigenvalues(Aml).eigenvalues;
  // two copies each of {-4, -8}
  std::vector<double> re;
  for (Index i = 0; i < eig.size(); ++i) {
    EXPECT_NEAR(eig[i].imag(), 0.0, 1e-6);
    re.push_back(eig[i].real());
  }
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -8, 1e-6);
  EXPECT_NEAR(re[1], -8, 1e-6);
  EXPECT_NEAR(re[2], -4, 1e-6);
  EXPECT_NEAR(re[3], -4, 1e-6);
}

TEST(SolvePiH, RedundantFilterBlocksKeepEquationsSolvable) {
  // Append an extra stable block to (F, G, L); [Pi, 0] still solves the
  // realization equations of the extended filter.
  const auto plant = ts::reactor_plant();
  const auto g = rz::tune_mimo_uniform(2, 2, 2, reactor_lambda(), reactor_ell());
  const auto pih = rz::solve_pi_h(plant, g);

  const Index extra = 3;
  rz::RealizationGains ge;
  ge.mu = g.mu + extra;
  ge.F = Mat::Zero(ge.mu, ge.mu);
  ge.F.topLeftCorner(g.mu, g.mu) = g.F;
  ge.F.bottomRightCorner(extra, extra) = ts::random_stable(extra, 3);
  ge.G = Mat::Zero(ge.mu, 2);
  ge.G.topRows(g.mu) = g.G;
  ge.G.bottomRows(extra) = nk::Rng(4).uniform_matrix(extra, 2, -1, 1);
  ge.L = Mat::Zero(ge.mu, 2);
  ge.L.topRows(g.mu) = g.L;
  ge.kind = rz::TuningKind::custom;

  Mat Pi_ext = Mat::Zero(4, ge.mu);
  Pi_ext.leftCols(g.mu) = pih.Pi;
  const Mat H_ext = plant.C * Pi_ext;
  const Mat FLH = ge.F + ge.L * H_ext;
  EXPECT_LT((Pi_ext * FLH - plant.A * Pi_ext).norm(),
            1e-8 * std::max(1.0, (plant.A * Pi_ext).norm()));
  EXPECT_LT((Pi_ext * ge.G - plant.B).norm(), 1e-8);
}

TEST(SolvePiH, RejectsMismatchedPlant) {
  const auto plant = ts::random_plant_with_indices({3, 2}, 2, 9);
  const auto g = rz::tune_mimo_uniform(2, 2, 2, reactor_lambda(), reactor_ell());
  EXPECT_THROW(rz::solve_pi_h(plant.sys, g), ddctl::StructuralError);
}

TEST(VerifyRealization, DetectsCorruptedOutputMap) {
  const auto plant = ts::reactor_plant();
  const auto g = rz::tune_mimo_uniform(2, 2, 2, reactor_lambda(), reactor_ell());
  auto pih = rz::solve_pi_h(plant, g);
  pih.H(0, 0) += 1e-3;
  const auto rep = rz::verify_realization(plant, g, pih);
  EXPECT_FALSE(rep.transfer_ok);
  EXPECT_FALSE(rep.pass);
}
