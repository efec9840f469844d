#include "mir/engine.hpp"
#include "mir/estimate.hpp"
#include "mir/simlab.hpp"

#include <doctest.h>

#include <cmath>

using namespace mir;

namespace {

MirData sim_data(int n, int T, int d, int rep) {
  SimConfig cfg;
  cfg.n = n;
  cfg.T = T;
  cfg.d = d;
  return gen_setting1(cfg, rep).data;
}

}  // namespace

TEST_CASE("QMLE recovers the influence coefficients") {
  MirData data = sim_data(40, 20, 2, 1);
  FitResult fit = fit_qmle(data);
  CHECK(fit.converged);
  CHECK(std::abs(fit.lambda(0) - 0.2) < 0.06);
  CHECK(std::abs(fit.lambda(1) - 0.2) < 0.06);
  CHECK(fit.sigma2 == doctest::Approx(1.0).epsilon(0.15));
  CHECK(fit.std_errors.size() == 3);
  CHECK(fit.std_errors.minCoeff() > 0.0);

  // score is (numerically) zero at the optimum
  Theta theta{fit.lambda, fit.sigma2};
  VectorXd g = score(data, theta);
  CHECK(g.lpNorm<Eigen::Infinity>() <= 1e-4 * data.n() * data.T());

  // residuals reproduce the profiled sigma^2
  double ss = 0.0;
  for (const auto& r : fit.residuals) ss += r.squaredNorm();
  CHECK(ss / (data.n() * data.T()) == doctest::Approx(fit.sigma2).epsilon(1e-12));
}

TEST_CASE("subset fit on the full index set equals the full fit") {
  MirData data = sim_data(20, 8, 2, 4);
  FitResult a = fit_qmle(data);
  FitResult b = fit_qmle_subset(data, {0, 1});
  CHECK(a.lambda == b.lambda);
  CHECK(a.loglik == b.loglik);
}

TEST_CASE("lambda_full embeds a subset estimate") {
  FitResult fit;
  fit.active = {1, 3};
  fit.lambda = VectorXd(2);
  fit.lambda << 0.5, -0.25;
  VectorXd full = fit.lambda_full(5);
  CHECK(full(0) == 0.0);
  CHECK(full(1) == 0.5);
  CHECK(full(3) == -0.25);
  CHECK(full(4) == 0.0);
}

TEST_CASE("influence matrices combine the weights") {
  MirData data = sim_data(12, 3, 2, 6);
  VectorXd lam(2);
  lam << 0.3, -0.1;
  MatrixStack B = influence_matrices(data, lam);
  REQUIRE(B.size() == 3);
  for (int t = 0; t < 3; ++t) {
    MatrixXd expect = 0.3 * data.weights.w(0, t) - 0.1 * data.weights.w(1, t);
    CHECK((B[t] - expect).norm() <= 1e-14);
  }
}

TEST_CASE("information matrices are symmetric and coherent") {
  MirData data = sim_data(30, 10, 2, 2);
  FitResult fit = fit_qmle(data);
  REQUIRE(fit.I_hat.rows() == 3);
  CHECK((fit.I_hat - fit.I_hat.transpose()).norm() <= 1e-12);
  CHECK((fit.J_hat - fit.J_hat.transpose()).norm() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fit.I_hat);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> ec(fit.cov);
  CHECK(ec.eigenvalues().minCoeff() >= -1e-12);
  // normal errors: mu4 near 3 and J near I
  CHECK(fit.mu4 == doctest::Approx(3.0).epsilon(0.25));
  CHECK((fit.J_hat - fit.I_hat).norm() / fit.I_hat.norm() < 0.2);
}

TEST_CASE("mu4_hat on synthetic residuals") {
  VectorStack r(1, VectorXd(4));
  r[0] << 1.0, -1.0, 1.0, -1.0;  // fourth moment 1, sigma2 = 1
  CHECK(mu4_hat(r, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("profile engine gradient matches finite differences (with covariates and demeaning)") {
  SimConfig cfg;
  cfg.n = 12;
  cfg.T = 5;
  cfg.d = 2;
  cfg.p = 2;
  SimDraw draw = gen_covariates(cfg, 3);
  for (bool demean : {false, true}) {
    ProfiledObjective engine(draw.data.Y, draw.data.weights, {0, 1}, &draw.X, demean);
    VectorXd lam(2);
    lam << 0.12, -0.07;
    VectorXd g;
    engine.eval(lam, &g);
    const double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      VectorXd up = lam, dn = lam;
      up(k) += h;
      dn(k) -= h;
      double fd = (engine.eval(up, nullptr) - engine.eval(dn, nullptr)) / (2.0 * h);
      CHECK(std::abs(g(k) - fd) <= 1e-5 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("spectral feasibility mode allows fits outside the l1 ball") {
  // mixed-sign coefficients with |lambda|_1 = 1.4 > 1 but a stable system
  // (the signed weight combination keeps the spectral radius well below one):
  // the l1 ball clips, the spectral mode recovers the truth
  SimConfig cfg;
  cfg.n = 30;
  cfg.T = 12;
  cfg.d = 4;
  VectorXd truth(4);
  truth << 0.4, -0.4, 0.3, -0.3;
  cfg.lambda_true = truth;
  MirData data = gen_setting1(cfg, 11).data;
  FitOptions l1;
  FitResult clipped = fit_qmle(data, l1);
  CHECK(clipped.lambda.lpNorm<1>() <= 1.0 - l1.varsigma + 1e-10);
  FitOptions sp;
  sp.feasibility = FeasibilityMode::Spectral;
  FitResult free_fit = fit_qmle(data, sp);
  CHECK(free_fit.converged);
  CHECK(free_fit.lambda.lpNorm<1>() > 1.0);
  CHECK((free_fit.lambda - truth).lpNorm<Eigen::Infinity>() < 0.12);
}
