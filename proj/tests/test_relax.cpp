#include <gtest/gtest.h>

#include <cmath>

#include "mfrelax/hodge.hpp"
#include "mfrelax/relax.hpp"
#include "oracles.hpp"

using namespace mfrelax;

namespace {

BoxMesh small(bool periodic) {
  return build_box_mesh({Interval{-1, 1}, Interval{-1, 1}, Interval{-1.5, 1.5}}, {2, 2, 3}, periodic);
}
BoxMesh desk(bool periodic) {
  return build_box_mesh({Interval{-4, 4}, Interval{-4, 4}, Interval{-10, 10}}, {4, 4, 10}, periodic);
}

StepperConfig config(double dt, double tau) {
  StepperConfig c;
  c.dt = dt;
  c.tau = tau;
  return c;
}

struct MidpointLayout {
  int nf, ne;
  bool with_h;

  int size() const { return nf + (with_h ? 3 : 2) * ne; }
  MidpointStage unpack(const Eigen::VectorXd& z) const {
    MidpointStage s;
    s.B_mid = FieldVec{SpaceKind::face, z.head(nf)};
    s.E = FieldVec{SpaceKind::edge, z.segment(nf, ne)};
    s.j = FieldVec{SpaceKind::edge, z.segment(nf + ne, ne)};
    if (with_h) s.H = FieldVec{SpaceKind::edge, z.segment(nf + 2 * ne, ne)};
    return s;
  }
};

double rel_mismatch_midpoint(const Stepper& st, bool with_h, std::uint64_t seed) {
  const DeRhamComplex& c = st.complex();
  const MidpointLayout lay{c.dim(SpaceKind::face), c.dim(SpaceKind::edge), with_h};
  const Eigen::VectorXd z = oracle::random_vector(lay.size(), seed);
  const FieldVec Bn{SpaceKind::face, oracle::random_vector(lay.nf, seed + 1)};
  auto res = [&](const Eigen::VectorXd& x) {
    return with_h ? st.residual_sp(Bn, lay.unpack(x)) : st.residual_hdiv_noH(Bn, lay.unpack(x));
  };
  const SparseOperator jac = with_h ? st.jacobian_sp(Bn, lay.unpack(z)) : st.jacobian_hdiv_noH(Bn, lay.unpack(z));
  return oracle::fd_jacobian_mismatch(res, oracle::dense(jac), z, 5, seed + 2);
}

double rel_mismatch_induction(const Stepper& st, SchemeKind kind, std::uint64_t seed) {
  const DeRhamComplex& c = st.complex();
  const SpaceKind bs = state_space(kind);
  const SpaceKind us = kind == SchemeKind::hcurl ? SpaceKind::face : SpaceKind::nodal_vector;
  const int nb = c.dim(bs);
  const int nu = c.dim(us);
  auto unpack = [&](const Eigen::VectorXd& x) {
    return InductionStage{FieldVec{bs, x.head(nb)}, FieldVec{us, x.tail(nu)}};
  };
  const Eigen::VectorXd z = oracle::random_vector(nb + nu, seed);
  const FieldVec Bn{bs, oracle::random_vector(nb, seed + 1)};
  auto res = [&](const Eigen::VectorXd& x) {
    return kind == SchemeKind::hcurl ? st.residual_hcurl(Bn, unpack(x)) : st.residual_h1(Bn, unpack(x));
  };
  const SparseOperator jac =
      kind == SchemeKind::hcurl ? st.jacobian_hcurl(Bn, unpack(z)) : st.jacobian_h1(Bn, unpack(z));
  return oracle::fd_jacobian_mismatch(res, oracle::dense(jac), z, 5, seed + 2);
}

}  // namespace

TEST(Relax, SchemeNames) {
  for (SchemeKind k : {SchemeKind::sp, SchemeKind::hdiv_noH, SchemeKind::hcurl, SchemeKind::h1}) {
    EXPECT_EQ(scheme_from_string(to_string(k)), k);
  }
  EXPECT_THROW(scheme_from_string("rk4"), std::invalid_argument);
  EXPECT_EQ(state_space(SchemeKind::hcurl), SpaceKind::edge_full);
  EXPECT_EQ(state_space(SchemeKind::h1), SpaceKind::nodal_vector);
}

TEST(Relax, JacobiansMatchFiniteDifferences) {
  for (bool periodic : {false, true}) {
    const DeRhamComplex c = build_complex(small(periodic));
    const Stepper st(c, config(0.7, 3.0));
    EXPECT_LE(rel_mismatch_midpoint(st, true, 10), 1e-6);
    EXPECT_LE(rel_mismatch_midpoint(st, false, 20), 1e-6);
    EXPECT_LE(rel_mismatch_induction(st, SchemeKind::hcurl, 30), 1e-6);
    EXPECT_LE(rel_mismatch_induction(st, SchemeKind::h1, 40), 1e-6);
  }
}

TEST(Relax, BlockEliminationMatchesMonolithicSolve) {
  const DeRhamComplex c = build_complex(small(true));
  StepperConfig mono = config(2.0, 5.0);
  mono.linear_solve = LinearSolve::monolithic;
  StepperConfig block = mono;
  block.linear_solve = LinearSolve::block_elimination;
  const Stepper a(c, mono);
  const Stepper b(c, block);
  EXPECT_FALSE(a.uses_block_elimination());
  EXPECT_TRUE(b.uses_block_elimination());
  for (bool with_h : {true, false}) {
    const MidpointLayout lay{c.dim(SpaceKind::face), c.dim(SpaceKind::edge), with_h};
    const MidpointStage s = lay.unpack(oracle::random_vector(lay.size(), 50 + with_h));
    const FieldVec Bn{SpaceKind::face, oracle::random_vector(lay.nf, 60)};
    const Eigen::VectorXd r = oracle::random_vector(lay.size(), 70);
    const Eigen::VectorXd da = a.midpoint_correction(Bn, s, with_h, r);
    const Eigen::VectorXd db = b.midpoint_correction(Bn, s, with_h, r);
    EXPECT_LE((da - db).norm(), 1e-9 * da.norm());
    const SparseOperator jac = with_h ? a.jacobian_sp(Bn, s) : a.jacobian_hdiv_noH(Bn, s);
    EXPECT_LE((jac * db - r).norm(), 1e-9 * r.norm());
  }
}

TEST(Relax, SpStepPreservesStructure) {
  const DeRhamComplex c = build_complex(desk(false));
  const SchemeState s0 = make_initial_state(c, SchemeKind::sp, HopfParams{});
  StepperConfig cfg = config(10.0, 100.0);
  cfg.reference_norm = std::sqrt(energy(c, s0.B));
  const Stepper st(c, cfg);
  const HodgeSolver hodge(c);
  const double h0 = hodge.decompose(s0.B).helicity;
  SchemeState s = s0;
  for (int n = 0; n < 3; ++n) {
    auto [next, rep] = st.step(s);
    EXPECT_TRUE(rep.converged);
    EXPECT_GE(rep.newton_iterations, 1);
    EXPECT_NEAR(next.t, s.t + 10.0, 1e-12);
    const double e0 = energy(c, s.B);
    const double e1 = energy(c, next.B);
    EXPECT_LE(e1, e0);
    EXPECT_GT(rep.dissipation, 0.0);
    EXPECT_NEAR(e0 - e1, rep.dissipation, 1e-9 * e0);
    EXPECT_LE((c.div * next.B.coeffs).lpNorm<Eigen::Infinity>(),
              1e-11 * next.B.coeffs.lpNorm<Eigen::Infinity>());
    // The strong update agrees with the midpoint extrapolation to Newton tolerance.
    const Eigen::VectorXd extrap = 2.0 * rep.stage.B_mid.coeffs - s.B.coeffs;
    EXPECT_LE((extrap - next.B.coeffs).norm(), 1e-8 * next.B.coeffs.norm());
    EXPECT_NEAR(hodge.decompose(next.B).helicity, h0, 1e-8 * (1.0 + std::abs(h0)));
    s = next;
  }
}

TEST(Relax, InductionSchemesSatisfyEnergyIdentity) {
  const DeRhamComplex c = build_complex(desk(false));
  for (SchemeKind kind : {SchemeKind::hcurl, SchemeKind::h1}) {
    const SchemeState s0 = make_initial_state(c, kind, HopfParams{});
    EXPECT_EQ(s0.B.space, state_space(kind));
    StepperConfig cfg = config(1.0, 100.0);
    cfg.reference_norm = std::sqrt(energy(c, s0.B));
    const Stepper st(c, cfg);
    auto [s1, rep] = st.step(s0);
    const double e0 = energy(c, s0.B);
    const double e1 = energy(c, s1.B);
    EXPECT_LE(e1, e0);
    EXPECT_NEAR(e0 - e1, rep.dissipation, 1e-9 * e0) << to_string(kind);
    EXPECT_LE((s1.B.coeffs - (2.0 * rep.induction.B_mid.coeffs - s0.B.coeffs)).norm(), 1e-14 * e0);
  }
}

TEST(Relax, UniformPeriodicFieldIsStationary) {
  const DeRhamComplex c = build_complex(desk(true));
  SchemeState s;
  s.B = interpolate(c, [](const Vec3&) { return Vec3(0, 0, 1); }, SpaceKind::face);
  for (SchemeKind k : {SchemeKind::sp, SchemeKind::hdiv_noH}) {
    s.scheme = k;
    auto [next, rep] = step(c, s, config(10.0, 100.0));
    EXPECT_EQ(rep.newton_iterations, 1);
    EXPECT_LE((next.B.coeffs - s.B.coeffs).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(Relax, ZeroFrictionFreezesTheField) {
  const DeRhamComplex c = build_complex(desk(false));
  const SchemeState s0 = make_initial_state(c, SchemeKind::sp, HopfParams{});
  auto [s1, rep] = step(c, s0, config(10.0, 0.0));
  EXPECT_EQ(rep.newton_iterations, 1);
  EXPECT_LE((s1.B.coeffs - s0.B.coeffs).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_EQ(rep.dissipation, 0.0);
}

TEST(Relax, NonConvergenceRaisesStepError) {
  const DeRhamComplex c = build_complex(desk(false));
  const SchemeState s0 = make_initial_state(c, SchemeKind::sp, HopfParams{});
  StepperConfig cfg = config(10.0, 100.0);
  cfg.newton_max_iter = 1;
  cfg.newton_abs_tol = 1e-14;
  try {
    step(c, s0, cfg);
    FAIL() << "expected StepError";
  } catch (const StepError& e) {
    EXPECT_FALSE(e.report().converged);
    EXPECT_EQ(e.report().newton_iterations, 1);
  }
}

TEST(Relax, HalvingRetriesWithTwoHalfSteps) {
  const DeRhamComplex c = build_complex(desk(false));
  const SchemeState s0 = make_initial_state(c, SchemeKind::sp, HopfParams{});
  // At dt = 80 Newton needs four iterations, at dt = 40 three.
  StepperConfig cfg = config(80.0, 100.0);
  cfg.newton_max_iter = 3;
  cfg.reference_norm = std::sqrt(energy(c, s0.B));
  EXPECT_THROW(step(c, s0, cfg), StepError);
  cfg.halve_on_failure = true;
  auto [s1, rep] = step(c, s0, cfg);
  EXPECT_TRUE(rep.halved);
  EXPECT_NEAR(s1.t, 80.0, 1e-12);
  EXPECT_EQ(rep.dt, 80.0);
  EXPECT_EQ(rep.newton_iterations, 6);
  const double e0 = energy(c, s0.B);
  EXPECT_NEAR(e0 - energy(c, s1.B), rep.dissipation, 1e-9 * e0);
}

TEST(Relax, InvalidConfigThrows) {
  const DeRhamComplex c = build_complex(small(false));
  EXPECT_THROW(Stepper(c, config(0.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(Stepper(c, config(1.0, -1.0)), std::invalid_argument);
  StepperConfig bad = config(1.0, 1.0);
  bad.newton_max_iter = 0;
  EXPECT_THROW(Stepper(c, bad), std::invalid_argument);
  const Stepper st(c, config(1.0, 1.0));
  SchemeState wrong;
  wrong.scheme = SchemeKind::sp;
  wrong.B = c.zeros(SpaceKind::edge);
  EXPECT_THROW(st.step(wrong), std::invalid_argument);
}
