#include <gtest/gtest.h>

#include <random>

#include "lpvbound/core.hpp"
#include "lpvbound/example_model.hpp"
#include "test_support.hpp"

namespace lpv {
namespace {

Matrix m22(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(MatrixFamily, AffineExampleAtBoxEnds) {
  const LpvModel s = example::two_state_model();
  const Matrix lo = eval_family(s.A(), s.box(), Vector::Constant(1, 0.1));
  const Matrix hi = eval_family(s.A(), s.box(), Vector::Constant(1, 0.4));
  EXPECT_TRUE(lo.isApprox(m22(0, 0.02, 0.2, 0.1), 1e-15));
  EXPECT_TRUE(hi.isApprox(m22(0, 0.08, 0.2, 0.4), 1e-15));
}

TEST(MatrixFamily, OutsideBoxThrows) {
  const LpvModel s = example::two_state_model();
  EXPECT_THROW(eval_family(s.A(), s.box(), Vector::Constant(1, 0.5)), DomainError);
  EXPECT_THROW(s.freeze(Vector::Constant(1, 0.05)), DomainError);
}

TEST(MatrixFamily, GridMidpointIsAverage) {
  const Matrix v0 = m22(1, 2, 3, 4);
  const Matrix v1 = m22(3, 2, 1, 0);
  const MatrixFamily f = MatrixFamily::grid({{0.0, 1.0}}, {v0, v1});
  EXPECT_TRUE(f.evaluate(Vector::Constant(1, 0.5)).isApprox(m22(2, 2, 2, 2), 1e-15));
  EXPECT_THROW(f.evaluate(Vector::Constant(1, 1.5)), DomainError);
}

TEST(MatrixFamily, BilinearGridMatchesAffineAtInteriorPoints) {
  // An affine family is reproduced exactly by multilinear interpolation.
  std::mt19937_64 rng(7);
  const Matrix a0 = testing::random_matrix(rng, 3, 2);
  const Matrix a1 = testing::random_matrix(rng, 3, 2);
  const Matrix a2 = testing::random_matrix(rng, 3, 2);
  const MatrixFamily aff = MatrixFamily::affine({a0, a1, a2});
  const std::vector<std::vector<double>> axes{{0.0, 0.5, 1.0}, {-1.0, 2.0}};
  std::vector<Matrix> vals;
  for (const Vector& p : SchedulingBox::tensor_grid(axes)) vals.push_back(aff.evaluate(p));
  const MatrixFamily grid = MatrixFamily::grid(axes, vals);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Vector p(2);
    p << u01(rng), -1.0 + 3.0 * u01(rng);
    EXPECT_LT((grid.evaluate(p) - aff.evaluate(p)).norm(), 1e-12);
  }
}

TEST(MatrixFamily, DimensionErrors) {
  EXPECT_THROW(MatrixFamily::affine({Matrix::Zero(2, 2), Matrix::Zero(3, 2)}), DimensionError);
  EXPECT_THROW(LpvModel(MatrixFamily::constant(Matrix::Zero(2, 2), 1),
                        MatrixFamily::constant(Matrix::Zero(3, 1), 1),
                        MatrixFamily::constant(Matrix::Zero(1, 2), 1),
                        SchedulingBox::interval(0, 1)),
               DimensionError);
}

TEST(SchedulingBox, GridAndValidation) {
  const SchedulingBox box = SchedulingBox::interval(0.1, 0.4, 31);
  const auto g = box.grid();
  ASSERT_EQ(g.size(), 31u);
  EXPECT_DOUBLE_EQ(g.front()(0), 0.1);
  EXPECT_DOUBLE_EQ(g.back()(0), 0.4);
  EXPECT_THROW(SchedulingBox::interval(0.4, 0.1), std::invalid_argument);
  EXPECT_THROW(SchedulingBox::interval(0.0, 1.0, 1), std::invalid_argument);
}

TEST(Simulation, FrozenConsistency) {
  // A constant schedule reproduces the frozen LTI simulation.
  std::mt19937_64 rng(11);
  const LpvModel s = testing::random_contractive_model(rng, 3, 2, 2);
  const Vector p = Vector::Constant(1, 0.37);
  const SchedulingSignal sched(s.box(), std::vector<Vector>(41, p));
  const InputSignal u = testing::random_input(rng, 2, 40);
  const Vector x0 = testing::random_matrix(rng, 3, 1);
  const auto lpv = simulate_lpv(s, u, sched, x0);
  const auto lti = simulate_lti(s.freeze(p), u, x0);
  for (std::size_t t = 0; t < lpv.outputs.size(); ++t) {
    EXPECT_LT((lpv.outputs[t] - lti.outputs[t]).norm(), 1e-13);
  }
}

TEST(Simulation, InputOutputMapIsLinear) {
  std::mt19937_64 rng(12);
  const LpvModel s = testing::random_contractive_model(rng, 3, 2, 1);
  const SchedulingSignal p = testing::random_grid_schedule(rng, s.box(), 3, 60);
  const InputSignal u1 = testing::random_input(rng, 2, 60);
  const InputSignal u2 = testing::random_input(rng, 2, 60);
  const auto y1 = io_map(s, u1, p);
  const auto y2 = io_map(s, u2, p);
  const auto y = io_map(s, u1.combined(2.5, u2, -0.75), p);
  for (std::size_t t = 0; t < y.size(); ++t) {
    EXPECT_LT((y[t] - (2.5 * y1[t] - 0.75 * y2[t])).norm(), 1e-12);
  }
}

TEST(Simulation, HorizonMismatchThrows) {
  const LpvModel s = example::two_state_model();
  const SchedulingSignal p(s.box(), std::vector<Vector>(10, Vector::Constant(1, 0.2)));
  EXPECT_THROW(io_map(s, InputSignal::constant(Vector::Ones(1), 10), p), DimensionError);
}

TEST(Signals, ExampleScheduleDwell) {
  const LpvModel s = example::two_state_model();
  const SchedulingSignal p = example::switching_schedule(s.box());
  EXPECT_EQ(p.horizon(), example::kSwitchingHorizon);
  EXPECT_TRUE(in_s_delta(p, 10));
  EXPECT_FALSE(in_s_delta(p, 11));
  EXPECT_FALSE(in_s_delta(p, 20));
  const SignalClass c = classify_signal(p);
  EXPECT_EQ(c.dwell, 10u);
  EXPECT_NEAR(c.max_step, 0.2, 1e-15);
}

TEST(Signals, SinusoidStaysInBox) {
  const LpvModel s = example::two_state_model();
  const SchedulingSignal p = example::sinusoid_schedule(s.box(), 2.0);
  EXPECT_EQ(p.size(), example::kSinusoidHorizon + 1);
  EXPECT_DOUBLE_EQ(p[0](0), 0.3);
  EXPECT_EQ(classify_signal(p).dwell, 1u);
  EXPECT_THROW(signal_sinusoid(s.box(), Vector::Constant(1, 0.3), Vector::Constant(1, 0.2), 2.0,
                               10),
               DomainError);
}

TEST(Signals, PiecewiseConstantNeedsEnoughLevels) {
  const SchedulingBox box = SchedulingBox::interval(0, 1);
  EXPECT_THROW(signal_piecewise_constant(box, 5, {Vector::Constant(1, 0.5)}, 5),
               std::invalid_argument);
  EXPECT_THROW(signal_piecewise_constant(box, 5, {Vector::Constant(1, 1.5)}, 4), DomainError);
}

TEST(InputSignal, Norms) {
  std::vector<Vector> s{Vector::Constant(1, 3.0), Vector::Constant(1, -4.0)};
  const InputSignal u(s);
  EXPECT_DOUBLE_EQ(u.linf(), 4.0);
  EXPECT_DOUBLE_EQ(u.l2(), 5.0);
}

TEST(MatrixFamily, AffineIdentityTerm) {
  const MatrixFamily f = MatrixFamily::affine({Matrix::Zero(2, 2), Matrix::Identity(2, 2)});
  EXPECT_TRUE(f.evaluate(Vector::Constant(1, 0.3)).isApprox(0.3 * Matrix::Identity(2, 2)));
}

TEST(MatrixFamily, ExampleNodesMidpoint) {
  const LpvModel s = example::two_state_model();
  const Matrix lo = s.A().evaluate(Vector::Constant(1, 0.1));
  const Matrix hi = s.A().evaluate(Vector::Constant(1, 0.4));
  const MatrixFamily g = MatrixFamily::grid({{0.1, 0.4}}, {lo, hi});
  EXPECT_LT((g.evaluate(Vector::Constant(1, 0.25)) - 0.5 * (lo + hi)).norm(), 1e-15);
}

TEST(LpvModel, FreezeExample) {
  const LtiModel l = example::two_state_model().freeze(Vector::Constant(1, 0.1));
  EXPECT_TRUE(l.A.isApprox(m22(0, 0.02, 0.2, 0.1), 1e-15));
  EXPECT_EQ(l.B, Matrix::Ones(2, 1));
  EXPECT_EQ(l.C, Matrix::Ones(1, 2));
}

TEST(LpvModel, ConstantModelFreezesToTriple) {
  const LtiModel l{m22(0.1, 0.2, 0.3, 0.4), Matrix::Ones(2, 1), Matrix::Ones(1, 2)};
  const LpvModel s = LpvModel::constant(l, SchedulingBox::interval(-1, 1));
  for (double p : {-1.0, 0.3, 1.0}) {
    const LtiModel f = s.freeze(Vector::Constant(1, p));
    EXPECT_EQ(f.A, l.A);
    EXPECT_EQ(f.B, l.B);
    EXPECT_EQ(f.C, l.C);
  }
}

TEST(Simulation, StaticGain) {
  // A = 0, B = C = I: y(0) = 0 and y(t) = c afterwards.
  const LtiModel l{Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  const Vector c = (Vector(2) << 1.5, -2.0).finished();
  const auto y = simulate_lti(l, InputSignal::constant(c, 5), Vector::Zero(2)).outputs;
  EXPECT_EQ(y[0], Vector::Zero(2));
  for (std::size_t t = 1; t < y.size(); ++t) EXPECT_EQ(y[t], c);
}

TEST(Simulation, ZeroInputZeroState) {
  const LpvModel s = example::two_state_model();
  const SchedulingSignal p = example::switching_schedule(s.box());
  const auto tr = simulate_lpv(s, InputSignal::constant(Vector::Zero(1), p.horizon()), p,
                               Vector::Zero(2));
  for (const Vector& x : tr.states) EXPECT_EQ(x, Vector::Zero(2));
  for (const Vector& y : tr.outputs) EXPECT_EQ(y, Vector::Zero(1));
}

TEST(Simulation, FrozenStepResponseMatchesPowerSum) {
  const LtiModel l = example::two_state_model().freeze(Vector::Constant(1, 0.1));
  const auto y = simulate_lti(l, InputSignal::constant(Vector::Ones(1), 30), Vector::Zero(2)).outputs;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double want = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      Matrix power = Matrix::Identity(2, 2);
      for (std::size_t k = 0; k + 1 + j < t; ++k) power = power * l.A;
      want += (l.C * power * l.B)(0, 0);
    }
    EXPECT_NEAR(y[t](0), want, 1e-14);
  }
}

TEST(Simulation, ExampleSwitchingSeriesMatchesReferenceLoop) {
  // Hand-coded recursion with the example matrices written out.
  const LpvModel s = example::two_state_model();
  const SchedulingSignal p = example::switching_schedule(s.box());
  const auto y = io_map(s, InputSignal::constant(Vector::Ones(1), p.horizon()), p);
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double q = p[t](0);
    EXPECT_NEAR(y[t](0), x1 + x2, 1e-14);
    const double n1 = 0.2 * q * x2 + 1.0;
    const double n2 = 0.2 * x1 + q * x2 + 1.0;
    x1 = n1;
    x2 = n2;
  }
}

TEST(Signals, PiecewiseConstantSpecialCases) {
  const SchedulingBox box = SchedulingBox::interval(0, 1);
  std::vector<Vector> raw;
  for (double v : {0.1, 0.7, 0.3, 0.9}) raw.push_back(Vector::Constant(1, v));
  const SchedulingSignal p1 = signal_piecewise_constant(box, 1, raw, 3);
  for (std::size_t t = 0; t < raw.size(); ++t) EXPECT_EQ(p1[t], raw[t]);
  const SchedulingSignal pc = signal_piecewise_constant(box, 8, {raw[1]}, 7);
  for (std::size_t t = 0; t < pc.size(); ++t) EXPECT_EQ(pc[t], raw[1]);
  const SchedulingSignal ps =
      signal_sinusoid(box, Vector::Constant(1, 0.4), Vector::Zero(1), 3.0, 20);
  for (std::size_t t = 0; t < ps.size(); ++t) EXPECT_EQ(ps[t](0), 0.4);
}

TEST(Signals, ClassifyConstantAndAlternating) {
  const SchedulingBox box = SchedulingBox::interval(0, 1);
  const SchedulingSignal c(box, std::vector<Vector>(16, Vector::Constant(1, 0.5)));
  EXPECT_EQ(classify_signal(c).max_step, 0.0);
  EXPECT_EQ(classify_signal(c).dwell, 15u);
  std::vector<Vector> alt;
  for (int t = 0; t < 16; ++t) alt.push_back(Vector::Constant(1, t % 2 == 0 ? 0.2 : 0.6));
  EXPECT_EQ(classify_signal(SchedulingSignal(box, alt)).dwell, 1u);
}

}  // namespace
}  // namespace lpv
