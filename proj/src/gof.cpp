#include "mir/gof.hpp"

#include "mir/engine.hpp"

#include <cmath>

namespace mir {

double test_statistic(const MirData& data, const std::vector<int>& active, const VectorXd& lambda,
                      double sigma2) {
  const int n = data.n(), T = data.T();
  if (sigma2 <= 0.0) throw InputError("test_statistic: sigma^2 must be positive");
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    MatrixXd D = delta_matrix(data.weights, lambda, t, &active);
    // tr(Y Y' Sigma^{-1} - I)^2 = q^2 - 2q + n with q = ||Delta Y||^2 / sigma^2.
    double q = (D * data.Y[t]).squaredNorm() / sigma2;
    acc += q * q - 2.0 * q + n;
  }
  return acc / (static_cast<double>(n) * T);
}

GofResult influence_test(const MirData& data, const FitResult& fit, const GofOptions& opts) {
  data.validate();
  const int n = data.n(), T = data.T();
  const int m = static_cast<int>(fit.active.size());
  if (T < 3) throw InputError("influence_test requires T >= 3");
  if (m < 1) throw InputError("influence_test requires a fitted influence coefficient");
  const double s2 = fit.sigma2, s4 = s2 * s2;

  MatrixXd I_hat = fit.I_hat;
  double mu4 = fit.mu4;
  if (I_hat.size() == 0) {
    InfoMatrices info = compute_information(data.Y, data.weights, fit.active, fit.lambda, s2,
                                            fit.residuals, nullptr, nullptr);
    I_hat = info.I;
    mu4 = info.mu4;
  }

  const int q = opts.lambda_only ? m : m + 1;  // lambda block, optionally + sigma^2
  MatrixXd I_use = I_hat.topLeftCorner(q, q);
  MatrixXd I_inv = I_use.ldlt().solve(MatrixXd::Identity(q, q));

  // Leading-term representation of the statistic: per period, a linear
  // combination of mean-zero quadratic forms -- the score components
  // s_k(t) = eps'U_k eps / sigma^2 - tr(U_k) entering through the estimation
  // effect, and xi(t) = eps'eps / sigma^2 - n from the raw statistic. Its
  // variance is sum_t a(t)' C(t) a(t) with C(t) the quadratic-form covariance
  //   C_jk = 2 tr(P_j P_k) + (mu4 - 3) diag(P_j).diag(P_k),
  // which is positive semidefinite whenever mu4 >= 1, so the estimate is
  // nonnegative by construction.
  std::vector<MatrixXd> C(T, MatrixXd(q + 1, q + 1));
  std::vector<VectorXd> v(T);
  MatrixStack G(m);
  std::vector<VectorXd> dU(m);
  std::vector<MatrixXd> U(m);
  VectorXd v_sum = VectorXd::Zero(q);
  for (int t = 0; t < T; ++t) {
    DeltaFactor f(delta_matrix(data.weights, fit.lambda, t, &fit.active), t);
    MatrixXd inv = f.inverse();
    for (int a = 0; a < m; ++a) {
      G[a].noalias() = data.weights.w(fit.active[a], t) * inv;
      U[a] = 0.5 * (G[a] + G[a].transpose());
      dU[a] = G[a].diagonal();
    }
    MatrixXd& Ct = C[t];
    VectorXd vt(q);
    for (int a = 0; a < m; ++a) {
      double trG = G[a].trace();
      vt(a) = -2.0 * trG / s2;  // tr(V_a): d Sigma^{-1} / d lambda_a direction
      for (int b = 0; b <= a; ++b)
        Ct(a, b) = Ct(b, a) =
            2.0 * U[a].cwiseProduct(U[b]).sum() + (mu4 - 3.0) * dU[a].dot(dU[b]);
      // cross-covariance of s_a with xi
      Ct(a, q) = Ct(q, a) = 2.0 * trG + (mu4 - 3.0) * dU[a].sum();
    }
    if (!opts.lambda_only) {
      vt(m) = -static_cast<double>(n) / s4;  // tr(V) for the sigma^2 direction
      for (int a = 0; a < m; ++a)
        Ct(a, m) = Ct(m, a) = (G[a].trace() + 0.5 * (mu4 - 3.0) * dU[a].sum()) / s2;
      Ct(m, m) = (mu4 - 1.0) * n / (4.0 * s4);
      Ct(m, q) = Ct(q, m) = (mu4 - 1.0) * n / (2.0 * s2);
    }
    Ct(q, q) = (mu4 - 1.0) * n;
    v[t] = vt;
    v_sum += vt;
  }

  GofResult res;
  res.mu4 = mu4;
  res.t_ql = test_statistic(data, fit.active, fit.lambda, s2);
  res.mu_ql = n + mu4 - 2.0;
  const double coef_s = 2.0 / (static_cast<double>(n) * T * T);
  const double coef_xi = 2.0 / T;
  // Quadratic-in-xi component: the per-period residual sums of squares enter
  // the statistic through their sample variance, contributing
  // 2 (mu4-1)^2 (T-1) / T^2 beyond the linearization.
  res.term1 = 2.0 * (mu4 - 1.0) * (mu4 - 1.0) * (T - 1.0) / (static_cast<double>(T) * T);
  res.term2 = res.term3 = 0.0;
  for (int t = 0; t < T; ++t) {
    VectorXd a_s = coef_s * s2 * (I_inv * (v_sum - v[t]));
    res.term1 += coef_xi * coef_xi * C[t](q, q);
    res.term2 += a_s.dot(C[t].topLeftCorner(q, q) * a_s);
    res.term3 += 2.0 * coef_xi * a_s.dot(C[t].topRightCorner(q, 1).col(0));
  }
  res.sigma2_ql = res.term1 + res.term2 + res.term3;
  if (res.sigma2_ql <= 0.0)
    throw DegenerateError("influence test: estimated variance is not positive");
  res.z = (res.t_ql - res.mu_ql) / std::sqrt(res.sigma2_ql);
  res.p_value = 2.0 * (1.0 - normal_cdf(std::abs(res.z)));
  res.ratio = static_cast<double>(n) / T;
  res.regime_warning = res.ratio < opts.regime_lo || res.ratio > opts.regime_hi;
  return res;
}

}  // namespace mir
