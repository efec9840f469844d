#pragma once

#include "mir/estimate.hpp"

namespace mir {

struct GofOptions {
  // When true, the variance correction sums only over the influence
  // coefficients; default includes the sigma^2 index as well.
  bool lambda_only = false;
  double regime_lo = 0.25;  // n/T band outside which a warning is raised
  double regime_hi = 4.0;
};

struct GofResult {
  double t_ql = 0.0;
  double mu_ql = 0.0;
  double sigma2_ql = 0.0;   // estimated variance of t_ql
  double z = 0.0;
  double p_value = 1.0;
  double mu4 = 3.0;
  double term1 = 0.0, term2 = 0.0, term3 = 0.0;  // variance components
  double ratio = 0.0;       // n/T
  bool regime_warning = false;
};

// (nT)^{-1} sum_t tr(Y_t Y_t' Sigma_t^{-1} - I)^2 with Sigma_t = sigma^2
// (Delta_t' Delta_t)^{-1}; reduces to a function of the residual norms.
double test_statistic(const MirData& data, const std::vector<int>& active, const VectorXd& lambda,
                      double sigma2);

// Influence-matrix adequacy test at a fitted model. Requires T >= 3 and the
// fit's plug-in information matrix (computed here if absent from `fit`).
GofResult influence_test(const MirData& data, const FitResult& fit, const GofOptions& opts = {});

}  // namespace mir
