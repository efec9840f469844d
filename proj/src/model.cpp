#include "mir/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mir {

DeltaFactor::DeltaFactor(MatrixXd delta, int period) : delta_(std::move(delta)), lu_(delta_) {
  const auto& diag = lu_.matrixLU().diagonal();
  det_sign_ = lu_.permutationP().determinant() > 0 ? 1 : -1;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    double u = diag(i);
    if (!std::isfinite(u) || std::abs(u) < 1e4 * std::numeric_limits<double>::min())
      throw SingularError("system matrix Delta_t is numerically singular at period " + std::to_string(period + 1),
                          period);
    if (u < 0.0) det_sign_ = -det_sign_;
    log_abs_det_ += std::log(std::abs(u));
  }
}

MatrixXd delta_matrix(const WeightSet& weights, const VectorXd& lambda, int t, const std::vector<int>* active) {
  MatrixXd D = MatrixXd::Identity(weights.n, weights.n);
  if (active) {
    for (size_t a = 0; a < active->size(); ++a)
      if (lambda(static_cast<Eigen::Index>(a)) != 0.0) D.noalias() -= lambda(static_cast<Eigen::Index>(a)) * weights.w((*active)[a], t);
  } else {
    for (int k = 0; k < weights.d; ++k)
      if (lambda(k) != 0.0) D.noalias() -= lambda(k) * weights.w(k, t);
  }
  return D;
}

DeltaFactor delta(const MirData& data, const VectorXd& lambda, int t) {
  return DeltaFactor(delta_matrix(data.weights, lambda, t), t);
}

double sigma2_profile(const MirData& data, const VectorXd& lambda) {
  const int n = data.n(), T = data.T();
  double ss = 0.0;
  for (int t = 0; t < T; ++t) {
    MatrixXd D = delta_matrix(data.weights, lambda, t);
    ss += (D * data.Y[t]).squaredNorm();
  }
  double s2 = ss / (static_cast<double>(n) * T);
  if (s2 <= 0.0) throw DegenerateError("profiled sigma^2 is zero: responses are degenerate");
  return s2;
}

double concentrated_loglik(const MirData& data, const VectorXd& lambda) {
  const double nT = static_cast<double>(data.n()) * data.T();
  double logdet = 0.0, ss = 0.0;
  for (int t = 0; t < data.T(); ++t) {
    DeltaFactor f = delta(data, lambda, t);
    logdet += f.log_abs_det();
    ss += (f.matrix() * data.Y[t]).squaredNorm();
  }
  double s2 = ss / nT;
  if (s2 <= 0.0) throw DegenerateError("profiled sigma^2 is zero: responses are degenerate");
  return -0.5 * nT * (std::log(2.0 * M_PI) + 1.0 + std::log(s2)) + logdet;
}

double full_loglik(const MirData& data, const Theta& theta) {
  if (theta.sigma2 <= 0.0) throw InputError("full_loglik: sigma^2 must be positive");
  const double nT = static_cast<double>(data.n()) * data.T();
  double logdet = 0.0, ss = 0.0;
  for (int t = 0; t < data.T(); ++t) {
    DeltaFactor f = delta(data, theta.lambda, t);
    logdet += f.log_abs_det();
    ss += (f.matrix() * data.Y[t]).squaredNorm();
  }
  return -0.5 * nT * std::log(2.0 * M_PI) - 0.5 * nT * std::log(theta.sigma2) + logdet - ss / (2.0 * theta.sigma2);
}

VectorXd score(const MirData& data, const Theta& theta) {
  const int d = data.d(), T = data.T();
  const double nT = static_cast<double>(data.n()) * T;
  const double s2 = theta.sigma2;
  VectorXd g = VectorXd::Zero(d + 1);
  double ss = 0.0;
  for (int t = 0; t < T; ++t) {
    DeltaFactor f = delta(data, theta.lambda, t);
    VectorXd r = f.matrix() * data.Y[t];
    ss += r.squaredNorm();
    MatrixXd inv = f.inverse();
    for (int k = 0; k < d; ++k) {
      const MatrixXd& Wk = data.weights.w(k, t);
      g(k) += (Wk * data.Y[t]).dot(r) / s2;
      g(k) -= Wk.cwiseProduct(inv.transpose()).sum();  // tr(W_k Delta^{-1})
    }
  }
  g(d) = -nT / (2.0 * s2) + ss / (2.0 * s2 * s2);
  return g;
}

VectorXd project_to_lambda_space(const VectorXd& lambda, double varsigma) {
  if (!(varsigma >= 0.0) || varsigma >= 1.0) throw InputError("varsigma must lie in [0,1)");
  const double radius = 1.0 - varsigma;
  if (lambda.lpNorm<1>() <= radius) return lambda;
  // Soft threshold with the unique KKT shift (Duchi et al. style).
  std::vector<double> mags(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) mags[i] = std::abs(lambda(i));
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (size_t j = 0; j < mags.size(); ++j) {
    cum += mags[j];
    double cand = (cum - radius) / static_cast<double>(j + 1);
    if (j + 1 == mags.size() || mags[j + 1] <= cand) {
      tau = cand;
      break;
    }
  }
  VectorXd out = lambda;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double m = std::abs(out(i)) - tau;
    out(i) = m > 0.0 ? (out(i) > 0.0 ? m : -m) : 0.0;
  }
  return out;
}

}  // namespace mir
