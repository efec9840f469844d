#pragma once

#include "mir/common.hpp"

#include <functional>

namespace mir {

struct OptimOptions {
  int max_iter = 500;
  double f_tol = 1e-9;        // relative objective change
  double grad_tol = 1e-6;     // projected-gradient tolerance, per observation
  double scale = 1.0;         // objective magnitude (nT); scales the gradient test
};

struct OptimResult {
  VectorXd x;
  double f = 0.0;
  VectorXd grad;
  bool converged = false;
  int iterations = 0;
  double pg_norm = 0.0;  // projected-gradient mapping norm at the solution, absolute scale
};

// Objective returns the value and fills the gradient when `grad` is non-null
// (value-only calls are much cheaper and the line search exploits that); it
// may throw SingularError for infeasible points, which the line search treats
// as -inf.
using Objective = std::function<double(const VectorXd&, VectorXd*)>;
using Projector = std::function<VectorXd(const VectorXd&)>;

// Projected quasi-Newton (BFGS) ascent with backtracking line search.
OptimResult maximize_projected_bfgs(const Objective& obj, const Projector& proj, VectorXd x0,
                                    const OptimOptions& opts);

}  // namespace mir
