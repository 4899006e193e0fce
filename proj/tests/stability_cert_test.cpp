#include <gtest/gtest.h>

#include <random>

#include "lpvbound/example_model.hpp"
#include "lpvbound/local_ident.hpp"
#include "lpvbound/stability_cert.hpp"
#include "test_support.hpp"

namespace lpv {
namespace {

LpvModel scalar_model(double a0, double a1, double b = 1.0, double c = 1.0) {
  return LpvModel(MatrixFamily::affine({Matrix::Constant(1, 1, a0), Matrix::Constant(1, 1, a1)}),
                  MatrixFamily::constant(Matrix::Constant(1, 1, b), 1),
                  MatrixFamily::constant(Matrix::Constant(1, 1, c), 1),
                  SchedulingBox::interval(0.0, 1.0, 11));
}

TEST(QuadraticStability, ScalarMargin) {
  // a(p) = 0.5 + 0.3p, P = 1: min over p of 1 - a(p)^2 = 1 - 0.8^2.
  const QuadStabCertificate cert =
      verify_quadratic_stability(scalar_model(0.5, 0.3), Matrix::Identity(1, 1));
  EXPECT_NEAR(cert.margin, 0.36, 1e-14);
  EXPECT_NEAR(cert.S(0, 0), 1.0, 1e-15);
}

TEST(QuadraticStability, ScalarFactor) {
  const QuadStabCertificate cert =
      verify_quadratic_stability(scalar_model(0.5, 0.0), Matrix::Constant(1, 1, 4.0));
  EXPECT_NEAR(cert.S(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(cert.margin, 3.0, 1e-14);
}

TEST(QuadraticStability, RejectsBadCandidates) {
  const LpvModel s = scalar_model(0.5, 0.0);
  EXPECT_THROW(verify_quadratic_stability(s, Matrix::Constant(1, 1, -1.0)), StabilityError);
  EXPECT_THROW(verify_quadratic_stability(scalar_model(1.1, 0.0), Matrix::Identity(1, 1)),
               StabilityError);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(verify_quadratic_stability(example::two_state_model(), asym),
               std::invalid_argument);
}

TEST(Lyapunov, SolvesDiscreteEquation) {
  std::mt19937_64 rng(31);
  const LtiModel l = testing::random_stable_lti(rng, 4, 1, 1, 0.9);
  const Matrix q = Matrix::Identity(4, 4);
  const Matrix p = solve_discrete_lyapunov(l.A, q);
  EXPECT_LT((l.A.transpose() * p * l.A - p + q).norm(), 1e-12);
}

TEST(Lyapunov, UnstableModelHasNoCertificate) {
  Matrix a(2, 2);
  a << 1.05, 0.0, 0.0, 0.2;
  const LpvModel s = LpvModel::constant({a, Matrix::Ones(2, 1), Matrix::Ones(1, 2)},
                                        SchedulingBox::interval(0, 1, 5));
  EXPECT_FALSE(find_common_lyapunov(s).has_value());
  EXPECT_THROW(contract_pair(s, s), StabilityError);
}

TEST(Lyapunov, NonContractiveButStableModelFound) {
  // ||A|| > 1 but spectral radius 0.5 everywhere.
  Matrix a0(2, 2);
  a0 << 0.5, 3.0, 0.0, 0.5;
  const LpvModel s(MatrixFamily::affine({a0, Matrix::Zero(2, 2)}),
                   MatrixFamily::constant(Matrix::Ones(2, 1), 1),
                   MatrixFamily::constant(Matrix::Ones(1, 2), 1), SchedulingBox::interval(0, 1, 5));
  const auto p = find_common_lyapunov(s);
  ASSERT_TRUE(p.has_value());
  const QuadStabCertificate cert = verify_quadratic_stability(s, *p);
  const NormalizedModel n = normalize_contractive(s, cert);
  EXPECT_LT(n.alpha, 1.0);
}

TEST(Normalization, PreservesInputOutputMap) {
  std::mt19937_64 rng(32);
  const LpvModel s = testing::random_contractive_model(rng, 3, 1, 1);
  Matrix p = testing::random_matrix(rng, 3, 3);
  p = p * p.transpose() + Matrix::Identity(3, 3);
  const Matrix s_factor = p.llt().matrixU();
  const LpvModel bar = similarity_transform(s, s_factor);
  const SchedulingSignal sched = testing::random_grid_schedule(rng, s.box(), 2, 40);
  const InputSignal u = testing::random_input(rng, 1, 40);
  const auto y = io_map(s, u, sched);
  const auto y_bar = io_map(bar, u, sched);
  for (std::size_t t = 0; t < y.size(); ++t) EXPECT_LT((y[t] - y_bar[t]).norm(), 1e-12);
}

TEST(StateGain, ScalarValue) {
  EXPECT_NEAR(state_gain_mu1(scalar_model(0.5, 0.0), 0.5), 2.0, 1e-15);
  EXPECT_THROW(state_gain_mu1(scalar_model(0.5, 0.0), 1.0), StabilityError);
}

TEST(StateGain, MatchesDefinitionOnExample) {
  const LpvModel s = example::two_state_model();
  const PipelineResult r = run_local_pipeline(s, 0.05);
  const ContractedPair pair = contract_pair(s, r.model);
  const double kb_hat = sup_norm_over(pair.sigma_hat_bar.B(), s.box().grid());
  EXPECT_NEAR(pair.data.mu1, kb_hat / (1.0 - pair.data.alpha_hat), 1e-12);
  EXPECT_NEAR(pair.data.alpha, spectral_norm(s.A().evaluate(Vector::Constant(1, 0.4))), 1e-12);
}

TEST(StateGain, BoundsSimulatedState) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const LpvModel s = testing::random_contractive_model(rng, 3, 2, 1, 0.7);
    const ContractedPair pair = contract_pair(s, s, Matrix::Identity(3, 3), Matrix::Identity(3, 3));
    const SchedulingSignal p = testing::random_grid_schedule(rng, s.box(), 1, 200);
    const InputSignal u = testing::random_input(rng, 2, 200);
    const auto tr = simulate_lpv(pair.sigma_hat_bar, u, p, Vector::Zero(3));
    for (const Vector& x : tr.states) EXPECT_LE(x.norm(), pair.data.mu1 * u.linf() + 1e-12);
  }
}

TEST(QuadraticStability, ZeroDynamicsHaveUnitMargin) {
  EXPECT_NEAR(verify_quadratic_stability(scalar_model(0.0, 0.0), Matrix::Identity(1, 1)).margin,
              1.0, 1e-15);
}

TEST(Lyapunov, ExampleAndRotationUseIdentity) {
  EXPECT_EQ(*find_common_lyapunov(example::two_state_model()), Matrix::Identity(2, 2));
  // 0.9 R(p) with R a rotation, sampled on a grid.
  std::vector<std::vector<double>> axes{{0.0, 0.5, 1.0, 1.5}};
  std::vector<Matrix> vals;
  for (double th : axes[0]) {
    vals.push_back(0.9 * (Matrix(2, 2) << std::cos(th), -std::sin(th), std::sin(th),
                          std::cos(th)).finished());
  }
  const LpvModel rot(MatrixFamily::grid(axes, vals), MatrixFamily::constant(Matrix::Ones(2, 1), 1),
                     MatrixFamily::constant(Matrix::Ones(1, 2), 1),
                     SchedulingBox::interval(0.0, 1.5, 4));
  EXPECT_EQ(*find_common_lyapunov(rot), Matrix::Identity(2, 2));
}

TEST(Normalization, IdentityCertificateLeavesModel) {
  const LpvModel s = example::two_state_model();
  const NormalizedModel n =
      normalize_contractive(s, verify_quadratic_stability(s, Matrix::Identity(2, 2)));
  EXPECT_EQ(n.S, Matrix::Identity(2, 2));
  for (const Vector& p : s.box().grid()) EXPECT_EQ(n.sigma_bar.A().evaluate(p), s.A().evaluate(p));
}

TEST(Normalization, ScalarSimilarity) {
  const LpvModel s = scalar_model(0.5, 0.0);
  const NormalizedModel n =
      normalize_contractive(s, verify_quadratic_stability(s, Matrix::Constant(1, 1, 4.0)));
  EXPECT_DOUBLE_EQ(n.sigma_bar.A().evaluate(Vector::Constant(1, 0.3))(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(n.alpha, 0.5);
}

TEST(StateGain, ZeroInputMatrix) {
  EXPECT_EQ(state_gain_mu1(scalar_model(0.5, 0.0, 0.0), 0.5), 0.0);
}

TEST(StateGain, ScalarStepResponseConverges) {
  const LpvModel s = scalar_model(0.5, 0.0);
  const SchedulingSignal p(s.box(), std::vector<Vector>(80, Vector::Constant(1, 0.5)));
  const auto x = simulate_lpv(s, InputSignal::constant(Vector::Ones(1), 79), p, Vector::Zero(1)).states;
  EXPECT_NEAR(x.back()(0), state_gain_mu1(s, 0.5), 1e-15);
}

}  // namespace
}  // namespace lpv
