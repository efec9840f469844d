#include "mir/engine.hpp"
#include "mir/gof.hpp"
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
  cfg.density = 0.4;
  return gen_setting1(cfg, rep).data;
}

}  // namespace

TEST_CASE("rank-one reduction of the test statistic matches the dense oracle") {
  MirData data = sim_data(8, 5, 2, 1);
  FitResult fit = fit_qmle(data);
  double fast = test_statistic(data, fit.active, fit.lambda, fit.sigma2);
  double slow = 0.0;
  for (int t = 0; t < data.T(); ++t) {
    MatrixXd D = delta_matrix(data.weights, fit.lambda, t, &fit.active);
    MatrixXd Sinv = D.transpose() * D / fit.sigma2;
    MatrixXd M = data.Y[t] * data.Y[t].transpose() * Sinv - MatrixXd::Identity(8, 8);
    slow += (M * M).trace();
  }
  slow /= 8.0 * data.T();
  CHECK(std::abs(fast - slow) <= 1e-8 * (1.0 + std::abs(slow)));
}

TEST_CASE("triple-sum factorization matches brute force") {
  const int n = 8, T = 6, d = 2;
  MirData data = sim_data(n, T, d, 7);
  FitResult fit = fit_qmle(data);
  GofResult res = influence_test(data, fit);

  const double s2 = fit.sigma2, s4 = s2 * s2;
  const int q = d + 1;
  MatrixXd Iinv = fit.I_hat.ldlt().solve(MatrixXd::Identity(q, q));

  // Rebuild the per-period quadratic-form covariances and score directions
  // independently, then expand the estimation-effect terms by brute-force sums
  // over period triples/pairs instead of the O(T) running-sum assembly.
  std::vector<MatrixXd> Css(T);
  std::vector<VectorXd> u(T), cxi(T);
  for (int t = 0; t < T; ++t) {
    DeltaFactor f(delta_matrix(data.weights, fit.lambda, t, &fit.active), t);
    MatrixXd inv = f.inverse();
    std::vector<MatrixXd> U(d);
    std::vector<double> trG(d);
    VectorXd vt(q), ct(q);
    MatrixXd Ct(q, q);
    for (int a = 0; a < d; ++a) {
      MatrixXd G = data.weights.w(fit.active[a], t) * inv;
      U[a] = 0.5 * (G + G.transpose());
      trG[a] = G.trace();
      vt(a) = -2.0 * trG[a] / s2;
      ct(a) = 2.0 * trG[a] + (res.mu4 - 3.0) * G.diagonal().sum();
    }
    vt(d) = -static_cast<double>(n) / s4;
    ct(d) = (res.mu4 - 1.0) * n / (2.0 * s2);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        Ct(a, b) = 2.0 * (U[a] * U[b]).trace() +
                   (res.mu4 - 3.0) * U[a].diagonal().dot(U[b].diagonal());
    for (int a = 0; a < d; ++a)
      Ct(a, d) = Ct(d, a) = (trG[a] + 0.5 * (res.mu4 - 3.0) * U[a].diagonal().sum()) / s2;
    Ct(d, d) = (res.mu4 - 1.0) * n / (4.0 * s4);
    Css[t] = Ct;
    cxi[t] = ct;
    u[t] = Iinv * vt;
  }

  const double coef_s = 2.0 * s2 / (static_cast<double>(n) * T * T);
  const double coef_xi = 2.0 / T;
  double term2_bf = 0.0, term3_bf = 0.0;
  for (int t1 = 0; t1 < T; ++t1)
    for (int t2 = 0; t2 < T; ++t2) {
      if (t2 == t1) continue;
      for (int t3 = 0; t3 < T; ++t3) {
        if (t3 == t1) continue;  // t2 == t3 allowed: square of the leave-one-out sum
        term2_bf += coef_s * coef_s * u[t2].dot(Css[t1] * u[t3]);
      }
      term3_bf += 2.0 * coef_xi * coef_s * u[t2].dot(cxi[t1]);
    }
  double term1_bf = 2.0 * (res.mu4 - 1.0) * (res.mu4 - 1.0) * (T - 1.0) / (static_cast<double>(T) * T) +
                    coef_xi * coef_xi * T * (res.mu4 - 1.0) * n;
  CHECK(std::abs(res.term1 - term1_bf) <= 1e-8 * (1.0 + std::abs(term1_bf)));
  CHECK(std::abs(res.term2 - term2_bf) <= 1e-8 * (1.0 + std::abs(term2_bf)));
  CHECK(std::abs(res.term3 - term3_bf) <= 1e-8 * (1.0 + std::abs(term3_bf)));
}

TEST_CASE("influence test output sanity") {
  MirData data = sim_data(20, 12, 2, 3);
  FitResult fit = fit_qmle(data);
  GofResult res = influence_test(data, fit);
  CHECK(res.t_ql > 0.0);
  CHECK(res.mu_ql == doctest::Approx(20.0 + res.mu4 - 2.0));
  CHECK(res.sigma2_ql > 0.0);
  CHECK(res.p_value >= 0.0);
  CHECK(res.p_value <= 1.0);
  CHECK(res.ratio == doctest::Approx(20.0 / 12.0));
  CHECK_FALSE(res.regime_warning);

  GofOptions lam_only;
  lam_only.lambda_only = true;
  GofResult res2 = influence_test(data, fit, lam_only);
  CHECK(res2.sigma2_ql > 0.0);
  CHECK(res2.t_ql == res.t_ql);
}

TEST_CASE("regime warning and preconditions") {
  MirData wide = sim_data(30, 4, 2, 5);
  FitResult fit = fit_qmle(wide);
  GofResult res = influence_test(wide, fit);
  CHECK(res.regime_warning);  // n/T = 7.5 > 4

  MirData tiny = sim_data(10, 2, 2, 5);
  FitResult f2 = fit_qmle(tiny);
  CHECK_THROWS_AS(influence_test(tiny, f2), InputError);
}
