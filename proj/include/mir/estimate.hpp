#pragma once

#include "mir/model.hpp"
#include "mir/optimize.hpp"

namespace mir {

struct FitOptions {
  FeasibilityMode feasibility = FeasibilityMode::L1Ball;
  double varsigma = 1e-3;     // l1-ball margin
  OptimOptions optim;         // scale is filled in from nT
  bool compute_information = true;
  VectorXd lambda0;           // warm start; empty -> zero vector
};

struct FitResult {
  std::vector<int> active;    // weight-matrix indices the fit uses
  VectorXd lambda;            // length active.size()
  double sigma2 = 0.0;
  VectorXd beta;              // regression coefficients (extensions; else empty)
  VectorXd omega;             // individual effects (fixed-effect models; else empty)
  double sigma2_ba = std::numeric_limits<double>::quiet_NaN();  // bias-adjusted sigma^2 (fixed effects)
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double pg_norm = 0.0;
  double mu4 = 3.0;           // standardized fourth moment of the residuals
  double mu3 = 0.0;
  MatrixXd I_hat, J_hat;      // order: lambda, sigma^2, beta
  MatrixXd cov;               // sandwich covariance of the estimates
  VectorXd std_errors;        // sqrt of the diagonal of cov
  VectorStack residuals;      // epsilon_hat_t = Delta_t(lambda_hat) Y_t (minus mean terms)

  // lambda embedded into a length-d vector, zeros outside the active set.
  VectorXd lambda_full(int d) const;
};

// Gaussian QMLE of the full model (all weight matrices active).
FitResult fit_qmle(const MirData& data, const FitOptions& opts = {});

// QMLE restricted to a subset of the weight matrices.
FitResult fit_qmle_subset(const MirData& data, const std::vector<int>& active, const FitOptions& opts = {});

// Fitted influence matrices B_t = sum_k lambda_k W_k^(t).
MatrixStack influence_matrices(const MirData& data, const VectorXd& lambda);

// Standardized fourth moment (nT)^{-1} sum_t ||.||_4^4 / sigma^4 of residuals.
double mu4_hat(const VectorStack& residuals, double sigma2);

// Fills I_hat, J_hat, cov, std_errors, mu4, mu3 on a fitted result.
void attach_information(const MirData& data, FitResult& fit);

}  // namespace mir
