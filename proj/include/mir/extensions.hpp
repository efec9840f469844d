#pragma once

#include "mir/estimate.hpp"

namespace mir {

// QMLE of the model with exogenous covariates: Delta_t Y_t = X_t beta + eps_t.
// X[t] is n x p; beta is profiled out of the likelihood.
FitResult fit_covariates(const MirData& data, const MatrixStack& X, const FitOptions& opts = {});

// Interaction design [X_t, W_1^(t) X_t, ..., W_d^(t) X_t]. Columns rendering
// the pooled design ill-conditioned (condition number > cond_max) are dropped;
// their original indices are reported through `kept`.
MatrixStack build_interaction_design(const MirData& data, const MatrixStack& X,
                                     std::vector<int>* kept = nullptr, double cond_max = 1e10);

struct InteractionResult {
  FitResult fit;
  std::vector<int> kept;  // retained columns of the full interaction design
};

InteractionResult fit_interactions(const MirData& data, const MatrixStack& X, const FitOptions& opts = {});

// Individual fixed effects, removed by time-demeaning; optional covariates.
// Recovers omega_hat and the bias-adjusted sigma^2 (factor T/(T-1)).
FitResult fit_individual_effects(const MirData& data, const MatrixStack* X, const FitOptions& opts = {});

// Orthonormal basis of the complement of 1_n: F is n x (n-1), F'F = I_{n-1},
// F F' = I_n - 1 1'/n.
MatrixXd helmert_basis(int n);

// Individual and time effects: the Helmert transform removes time effects,
// then time-demeaning removes individual effects.
FitResult fit_time_effects(const MirData& data, const MatrixStack* X, const FitOptions& opts = {});

struct EndogenousResult {
  FitResult fit;          // beta slot holds delta_hat; sigma2 is sigma_z^2
  VectorXd delta;
  MatrixXd sigma_z;       // (nT)^{-1} sum_t Z_t' Z_t
  VectorXd sigma_z_eps;   // Sigma_z delta
  double sigma2_z = 0.0;  // conditional error variance
  double sigma2 = 0.0;    // recovered marginal error variance
};

// Endogeneity-adjusted QMLE: augments the model with Z delta and recovers the
// attribute-error covariance structure. Z[t] is n x d (one column per attribute).
EndogenousResult fit_endogenous(const MirData& data, const MatrixStack& Z, const FitOptions& opts = {});

}  // namespace mir
