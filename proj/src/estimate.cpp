#include "mir/estimate.hpp"

#include "mir/engine.hpp"

#include <cmath>

namespace mir {

VectorXd FitResult::lambda_full(int d) const {
  VectorXd out = VectorXd::Zero(d);
  for (size_t a = 0; a < active.size(); ++a) out(active[a]) = lambda(static_cast<Eigen::Index>(a));
  return out;
}

FitResult run_profiled_fit(const ProfiledObjective& engine, const FitOptions& opts) {
  const int m = engine.m();
  OptimOptions optim = opts.optim;
  optim.scale = engine.nobs();

  Objective obj = [&engine](const VectorXd& x, VectorXd* g) { return engine.eval(x, g); };
  Projector proj;
  if (opts.feasibility == FeasibilityMode::L1Ball) {
    double varsigma = opts.varsigma;
    proj = [varsigma](const VectorXd& x) { return project_to_lambda_space(x, varsigma); };
  } else {
    proj = [](const VectorXd& x) { return x; };
  }

  VectorXd x0 = opts.lambda0.size() == m ? opts.lambda0 : VectorXd(VectorXd::Zero(m));
  OptimResult opt = maximize_projected_bfgs(obj, proj, std::move(x0), optim);

  FitResult fit;
  fit.active = engine.active();
  fit.lambda = opt.x;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.pg_norm = opt.pg_norm;
  // Re-evaluate at the solution so the cached profile quantities match it.
  fit.loglik = engine.eval(opt.x, nullptr);
  fit.sigma2 = engine.sigma2();
  fit.beta = engine.beta();
  fit.residuals = engine.residuals();
  return fit;
}

FitResult fit_qmle_subset(const MirData& data, const std::vector<int>& active, const FitOptions& opts) {
  data.validate();
  ProfiledObjective engine(data.Y, data.weights, active, nullptr, false);
  FitResult fit = run_profiled_fit(engine, opts);
  if (opts.compute_information) attach_information(data, fit);
  return fit;
}

FitResult fit_qmle(const MirData& data, const FitOptions& opts) {
  std::vector<int> all(data.d());
  for (int k = 0; k < data.d(); ++k) all[k] = k;
  return fit_qmle_subset(data, all, opts);
}

MatrixStack influence_matrices(const MirData& data, const VectorXd& lambda) {
  if (lambda.size() != data.d()) throw InputError("influence_matrices: lambda has wrong length");
  MatrixStack B;
  B.reserve(data.T());
  for (int t = 0; t < data.T(); ++t) {
    MatrixXd Bt = MatrixXd::Zero(data.n(), data.n());
    for (int k = 0; k < data.d(); ++k)
      if (lambda(k) != 0.0) Bt.noalias() += lambda(k) * data.weights.w(k, t);
    B.push_back(std::move(Bt));
  }
  return B;
}

double mu4_hat(const VectorStack& residuals, double sigma2) {
  double sum4 = 0.0, count = 0.0;
  for (const auto& r : residuals) {
    sum4 += r.array().pow(4).sum();
    count += static_cast<double>(r.size());
  }
  return sum4 / (count * sigma2 * sigma2);
}

void attach_information(const MirData& data, FitResult& fit) {
  InfoMatrices info = compute_information(data.Y, data.weights, fit.active, fit.lambda, fit.sigma2,
                                          fit.residuals, nullptr, nullptr);
  const double N = static_cast<double>(data.n()) * data.T();
  fit.mu4 = info.mu4;
  fit.mu3 = info.mu3;
  fit.I_hat = info.I;
  fit.J_hat = info.J;
  MatrixXd Iinv = info.I.ldlt().solve(MatrixXd::Identity(info.I.rows(), info.I.cols()));
  fit.cov = (Iinv * info.J * Iinv) / N;
  fit.std_errors = fit.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace mir
