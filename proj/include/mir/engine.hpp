#pragma once

#include "mir/estimate.hpp"
#include "mir/model.hpp"

namespace mir {

// Profile log-likelihood engine shared by the base estimator and the model
// extensions. sigma^2 and (when present) the regression coefficients are
// concentrated out; time-demeaning absorbs additive individual effects.
// The weight set is used as given (extensions may pass transformed systems
// whose matrices are not row-stochastic).
class ProfiledObjective {
 public:
  ProfiledObjective(const VectorStack& Y, const WeightSet& weights, std::vector<int> active,
                    const MatrixStack* X, bool demean_time);

  int n() const { return n_; }
  int T() const { return T_; }
  int m() const { return static_cast<int>(active_.size()); }
  int p() const { return p_; }
  double nobs() const { return static_cast<double>(n_) * T_; }
  const std::vector<int>& active() const { return active_; }

  // Profile log-likelihood at lambda; fills the analytic gradient when
  // requested and caches the profiled quantities for the accessors below.
  double eval(const VectorXd& lambda, VectorXd* grad) const;

  double sigma2() const { return sigma2_; }
  const VectorXd& beta() const { return beta_; }
  const VectorStack& residuals() const { return resid_; }

  // Mean of Delta_t(lambda) Y_t over periods, at the last evaluated lambda
  // (the quantity removed by time-demeaning; used to recover fixed effects).
  const VectorXd& u_bar() const { return ubar_; }
  // Column means of the regressors over periods (zero matrix when p = 0).
  const MatrixXd& x_bar() const { return xbar_; }

  // Design matrices as they enter the residuals (demeaned when demean_time).
  const MatrixStack& design() const { return Xd_; }
  // Condition number of the pooled design Gram matrix (1 when p = 0).
  double design_condition() const { return gram_cond_; }

 private:
  const VectorStack* Y_;
  const WeightSet* W_;
  std::vector<int> active_;
  bool demean_;
  int n_, T_, p_;

  MatrixStack Xd_;                     // [t], n x p
  MatrixXd xbar_;
  Eigen::LDLT<MatrixXd> gram_ldlt_;
  double gram_cond_ = 1.0;
  std::vector<VectorStack> Wy_;        // [a][t] = W_{active[a]}^{(t)} Y_t

  mutable double sigma2_ = 0.0;
  mutable VectorXd beta_;
  mutable VectorStack resid_;
  mutable VectorXd ubar_;
};

// Plug-in information matrices for the quasi-score, parameter order
// (lambda_active, sigma^2, beta). `mean` supplies the per-period model mean
// of Delta_t Y_t (e.g. X_t beta); pass nullptr when it is zero.
struct InfoMatrices {
  MatrixXd I;  // expected information, per observation
  MatrixXd J;  // score variance, per observation
  double mu4 = 3.0;
  double mu3 = 0.0;
};

InfoMatrices compute_information(const VectorStack& Y, const WeightSet& weights,
                                 const std::vector<int>& active, const VectorXd& lambda,
                                 double sigma2, const VectorStack& residuals,
                                 const MatrixStack* design, const VectorStack* mean);

// Optimizes the engine's profile likelihood and packages the result (no
// information matrices attached; callers do that with the right design).
FitResult run_profiled_fit(const ProfiledObjective& engine, const FitOptions& opts);

}  // namespace mir
