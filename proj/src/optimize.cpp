#include "mir/optimize.hpp"

#include <cmath>
#include <limits>

namespace mir {

namespace {

// Value(/gradient) evaluation that maps infeasible points to -inf.
bool try_eval(const Objective& obj, const VectorXd& x, double& f, VectorXd* g) {
  try {
    f = obj(x, g);
  } catch (const SingularError&) {
    return false;
  }
  return std::isfinite(f);
}

}  // namespace

OptimResult maximize_projected_bfgs(const Objective& obj, const Projector& proj, VectorXd x0,
                                    const OptimOptions& opts) {
  const double scale = std::max(opts.scale, 1.0);
  const Eigen::Index m = x0.size();

  OptimResult res;
  res.x = proj(x0);
  res.grad.resize(m);
  if (!try_eval(obj, res.x, res.f, &res.grad))
    throw DegenerateError("optimizer: starting point is infeasible");

  auto pg_mapping_norm = [&](const VectorXd& x, const VectorXd& g) {
    // Norm of the gradient mapping with step 1/scale, reported on the
    // objective's absolute scale.
    VectorXd mapped = proj(x + g / scale);
    return (x - mapped).lpNorm<Eigen::Infinity>() * scale;
  };

  MatrixXd H = MatrixXd::Identity(m, m) / scale;  // inverse-Hessian estimate (of -f)
  bool scaled_h = false;

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    res.pg_norm = pg_mapping_norm(res.x, res.grad);
    if (res.pg_norm <= opts.grad_tol * scale) {
      res.converged = true;
      break;
    }

    VectorXd dir = H * res.grad;  // ascent direction
    if (dir.dot(res.grad) <= 0.0) {
      H = MatrixXd::Identity(m, m) / scale;  // reset on loss of positive definiteness
      scaled_h = false;
      dir = res.grad / scale;
    }

    // Backtracking Armijo line search on the projected arc; singular system
    // matrices along the way just shrink the step. Trial points are evaluated
    // value-only; the gradient is computed once at the accepted point.
    constexpr double c1 = 1e-4;
    double alpha = 1.0;
    bool accepted = false;
    VectorXd x_new, g_new(m);
    double f_new = 0.0;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = proj(res.x + alpha * dir);
      VectorXd step = x_new - res.x;
      if (step.lpNorm<Eigen::Infinity>() < 1e-16) break;
      if (try_eval(obj, x_new, f_new, nullptr) && f_new >= res.f + c1 * res.grad.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.converged = res.pg_norm <= 1e3 * opts.grad_tol * scale;
      break;
    }
    f_new = obj(x_new, &g_new);

    VectorXd s = x_new - res.x;
    VectorXd y = res.grad - g_new;  // gradient change of -f
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled_h) {
        H = MatrixXd::Identity(m, m) * (sy / y.squaredNorm());
        scaled_h = true;
      }
      VectorXd Hy = H * y;
      double yHy = y.dot(Hy);
      double rho = 1.0 / sy;
      H += ((sy + yHy) * rho * rho) * (s * s.transpose());
      MatrixXd sHy = s * Hy.transpose();
      H -= rho * (sHy + sHy.transpose());
    }

    double df = std::abs(f_new - res.f);
    res.x = std::move(x_new);
    res.f = f_new;
    res.grad = std::move(g_new);
    if (df <= opts.f_tol * (1.0 + std::abs(res.f))) {
      res.pg_norm = pg_mapping_norm(res.x, res.grad);
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  res.pg_norm = pg_mapping_norm(res.x, res.grad);
  if (!res.converged && res.pg_norm <= opts.grad_tol * scale) res.converged = true;
  return res;
}

}  // namespace mir
