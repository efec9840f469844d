#pragma once

#include "mir/weights.hpp"

#include <Eigen/LU>

namespace mir {

// Feasibility handling for the influence coefficients.
enum class FeasibilityMode {
  L1Ball,    // sum_k |lambda_k| <= 1 - varsigma (projection enforced)
  Spectral,  // no projection; feasibility = nonsingular system matrices
};

struct Theta {
  VectorXd lambda;
  double sigma2 = 1.0;
};

// Panel responses plus the weight matrices they interact through.
struct MirData {
  VectorStack Y;  // [t], each length n
  WeightSet weights;

  int n() const { return weights.n; }
  int d() const { return weights.d; }
  int T() const { return weights.T; }

  void validate() const {
    if (static_cast<int>(Y.size()) != weights.T) throw InputError("MirData: Y period count differs from weights");
    for (const auto& y : Y)
      if (y.size() != weights.n) throw InputError("MirData: Y length differs from weights dimension");
    if (weights.d < 1) throw InputError("MirData: needs at least one weight matrix");
  }
};

// Factorized system matrix I - sum_k lambda_k W_k^(t).
class DeltaFactor {
 public:
  DeltaFactor(MatrixXd delta, int period);

  const MatrixXd& matrix() const { return delta_; }
  double log_abs_det() const { return log_abs_det_; }
  int det_sign() const { return det_sign_; }
  VectorXd solve(const VectorXd& rhs) const { return lu_.solve(rhs); }
  MatrixXd solve(const MatrixXd& rhs) const { return lu_.solve(rhs); }
  MatrixXd inverse() const { return lu_.inverse(); }

 private:
  MatrixXd delta_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  double log_abs_det_ = 0.0;
  int det_sign_ = 1;
};

// Dense system matrix for a given period (unfactorized). `active` restricts
// the combination to a subset of weight matrices; lambda then has that length.
MatrixXd delta_matrix(const WeightSet& weights, const VectorXd& lambda, int t,
                      const std::vector<int>* active = nullptr);

DeltaFactor delta(const MirData& data, const VectorXd& lambda, int t);

// (nT)^{-1} sum_t ||Delta_t(lambda) Y_t||^2; throws DegenerateError when zero.
double sigma2_profile(const MirData& data, const VectorXd& lambda);

// Profile log-likelihood in lambda (sigma^2 concentrated out).
double concentrated_loglik(const MirData& data, const VectorXd& lambda);

// Gaussian quasi-log-likelihood at (lambda, sigma^2).
double full_loglik(const MirData& data, const Theta& theta);

// Analytic gradient of full_loglik, length d+1 (lambda block then sigma^2).
VectorXd score(const MirData& data, const Theta& theta);

// Euclidean projection onto the closed l1 ball of radius 1 - varsigma.
VectorXd project_to_lambda_space(const VectorXd& lambda, double varsigma);

}  // namespace mir
