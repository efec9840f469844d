#include "mir/extensions.hpp"

#include "mir/engine.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace mir {

namespace {

std::vector<int> all_indices(int d) {
  std::vector<int> idx(d);
  for (int k = 0; k < d; ++k) idx[k] = k;
  return idx;
}

void attach_info_ext(const VectorStack& Y, const WeightSet& weights, FitResult& fit,
                     const MatrixStack* design, const VectorStack* mean) {
  InfoMatrices info = compute_information(Y, weights, fit.active, fit.lambda, fit.sigma2,
                                          fit.residuals, design, mean);
  const double N = static_cast<double>(weights.n) * weights.T;
  fit.mu4 = info.mu4;
  fit.mu3 = info.mu3;
  fit.I_hat = info.I;
  fit.J_hat = info.J;
  MatrixXd Iinv = info.I.ldlt().solve(MatrixXd::Identity(info.I.rows(), info.I.cols()));
  fit.cov = (Iinv * info.J * Iinv) / N;
  fit.std_errors = fit.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

VectorStack model_mean(const MatrixStack& X, const VectorXd& beta, const VectorXd* omega) {
  VectorStack mean;
  mean.reserve(X.size());
  for (const auto& x : X) {
    VectorXd m = x * beta;
    if (omega) m += *omega;
    mean.push_back(std::move(m));
  }
  return mean;
}

}  // namespace

FitResult fit_covariates(const MirData& data, const MatrixStack& X, const FitOptions& opts) {
  data.validate();
  ProfiledObjective engine(data.Y, data.weights, all_indices(data.d()), &X, false);
  FitResult fit = run_profiled_fit(engine, opts);
  if (opts.compute_information) {
    VectorStack mean = model_mean(X, fit.beta, nullptr);
    attach_info_ext(data.Y, data.weights, fit, &engine.design(), &mean);
  }
  return fit;
}

MatrixStack build_interaction_design(const MirData& data, const MatrixStack& X,
                                     std::vector<int>* kept, double cond_max) {
  data.validate();
  const int n = data.n(), T = data.T(), d = data.d();
  if (static_cast<int>(X.size()) != T) throw InputError("interaction design: X period count mismatch");
  const int p = static_cast<int>(X[0].cols());
  const int P = p * (1 + d);

  MatrixStack full(T);
  for (int t = 0; t < T; ++t) {
    full[t].resize(n, P);
    full[t].leftCols(p) = X[t];
    for (int k = 0; k < d; ++k) full[t].middleCols(p * (k + 1), p) = data.weights.w(k, t) * X[t];
  }

  // Column-pivoted QR on the pooled design drops near-collinear columns.
  MatrixXd pooled(static_cast<Eigen::Index>(n) * T, P);
  for (int t = 0; t < T; ++t) pooled.middleRows(static_cast<Eigen::Index>(t) * n, n) = full[t];
  Eigen::ColPivHouseholderQR<MatrixXd> qr(pooled);
  const auto& R = qr.matrixR();
  double r00 = std::abs(R(0, 0));
  if (r00 == 0.0) throw DegenerateError("interaction design: all columns are zero");
  const double tol = r00 / std::sqrt(cond_max);
  int rank = 0;
  for (int i = 0; i < std::min<int>(P, static_cast<int>(pooled.rows())); ++i) {
    if (std::abs(R(i, i)) < tol) break;
    ++rank;
  }
  std::vector<int> cols(qr.colsPermutation().indices().data(),
                        qr.colsPermutation().indices().data() + P);
  std::vector<int> keep(cols.begin(), cols.begin() + rank);
  std::sort(keep.begin(), keep.end());

  if (rank < P) {
    for (int t = 0; t < T; ++t) {
      MatrixXd reduced(n, rank);
      for (int j = 0; j < rank; ++j) reduced.col(j) = full[t].col(keep[j]);
      full[t] = std::move(reduced);
    }
  }
  if (kept) *kept = std::move(keep);
  return full;
}

InteractionResult fit_interactions(const MirData& data, const MatrixStack& X, const FitOptions& opts) {
  InteractionResult res;
  MatrixStack design = build_interaction_design(data, X, &res.kept);
  res.fit = fit_covariates(data, design, opts);
  return res;
}

FitResult fit_individual_effects(const MirData& data, const MatrixStack* X, const FitOptions& opts) {
  data.validate();
  if (data.T() < 2) throw InputError("fixed effects require T >= 2");
  ProfiledObjective engine(data.Y, data.weights, all_indices(data.d()), X, true);
  FitResult fit = run_profiled_fit(engine, opts);
  fit.omega = engine.u_bar();
  if (X) fit.omega -= engine.x_bar() * fit.beta;
  fit.sigma2_ba = fit.sigma2 * static_cast<double>(data.T()) / (data.T() - 1);
  if (opts.compute_information) {
    if (X) {
      VectorStack mean = model_mean(*X, fit.beta, &fit.omega);
      attach_info_ext(data.Y, data.weights, fit, &engine.design(), &mean);
    } else {
      VectorStack mean(data.T(), fit.omega);
      attach_info_ext(data.Y, data.weights, fit, nullptr, &mean);
    }
  }
  return fit;
}

MatrixXd helmert_basis(int n) {
  if (n < 2) throw InputError("helmert_basis requires n >= 2");
  MatrixXd F = MatrixXd::Zero(n, n - 1);
  for (int j = 1; j < n; ++j) {
    double s = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
    for (int i = 0; i < j; ++i) F(i, j - 1) = s;
    F(j, j - 1) = -static_cast<double>(j) * s;
  }
  return F;
}

FitResult fit_time_effects(const MirData& data, const MatrixStack* X, const FitOptions& opts) {
  data.validate();
  const int n = data.n(), T = data.T(), d = data.d();
  if (T < 2) throw InputError("two-way effects require T >= 2");
  MatrixXd F = helmert_basis(n);

  // Project onto the orthogonal complement of 1_n: time effects vanish and
  // row-stochastic weights transform as W* = F' W F.
  WeightSet ws = WeightSet::empty(n - 1, d, T);
  VectorStack Ys(T);
  MatrixStack Xs;
  for (int t = 0; t < T; ++t) {
    Ys[t] = F.transpose() * data.Y[t];
    for (int k = 0; k < d; ++k) ws.w(k, t) = F.transpose() * data.weights.w(k, t) * F;
  }
  if (X) {
    Xs.reserve(T);
    for (const auto& x : *X) Xs.push_back(F.transpose() * x);
  }

  ProfiledObjective engine(Ys, ws, all_indices(d), X ? &Xs : nullptr, true);
  FitResult fit = run_profiled_fit(engine, opts);
  fit.sigma2_ba = fit.sigma2 * static_cast<double>(T) / (T - 1);
  if (opts.compute_information) {
    VectorXd omega_star = engine.u_bar();
    if (X) omega_star -= engine.x_bar() * fit.beta;
    if (X) {
      VectorStack mean = model_mean(Xs, fit.beta, &omega_star);
      attach_info_ext(Ys, ws, fit, &engine.design(), &mean);
    } else {
      VectorStack mean(T, omega_star);
      attach_info_ext(Ys, ws, fit, nullptr, &mean);
    }
  }
  return fit;
}

EndogenousResult fit_endogenous(const MirData& data, const MatrixStack& Z, const FitOptions& opts) {
  EndogenousResult res;
  res.fit = fit_covariates(data, Z, opts);
  res.delta = res.fit.beta;
  res.sigma2_z = res.fit.sigma2;

  const double N = static_cast<double>(data.n()) * data.T();
  const int dz = static_cast<int>(Z[0].cols());
  res.sigma_z = MatrixXd::Zero(dz, dz);
  for (const auto& z : Z) res.sigma_z.noalias() += z.transpose() * z;
  res.sigma_z /= N;
  res.sigma_z_eps = res.sigma_z * res.delta;
  res.sigma2 = res.sigma2_z + res.delta.dot(res.sigma_z * res.delta);
  return res;
}

}  // namespace mir
