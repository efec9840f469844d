#include "mir/simlab.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace mir {

VectorXd SimConfig::lambda() const {
  if (lambda_true.size() > 0) {
    if (lambda_true.size() != d) throw InputError("SimConfig: lambda_true has wrong length");
    return lambda_true;
  }
  VectorXd lam = VectorXd::Zero(d);
  if (task == SimTask::Select) {
    for (int k = 0; k < std::min(subset_size_true, d); ++k) lam(k) = 0.2;
  } else {
    lam.setConstant(0.2);
  }
  return lam;
}

VectorXd SimConfig::beta() const {
  if (beta_true.size() > 0) {
    if (beta_true.size() != p) throw InputError("SimConfig: beta_true has wrong length");
    return beta_true;
  }
  return VectorXd::Ones(p);
}

namespace {

// Stream roles, so draws for one purpose never perturb another.
enum Role : std::uint64_t { RoleAttributes = 0, RoleErrors = 1, RoleDeparture = 2, RoleCovariates = 3 };

double draw_error(Rng& rng, ErrorDist dist) {
  switch (dist) {
    case ErrorDist::Normal: return rng.normal();
    case ErrorDist::Mixture: return rng.mixture_normal();
    case ErrorDist::StdExponential: return rng.std_exponential();
  }
  throw InputError("unknown error distribution");
}

WeightSet weights_from_attributes(const SimConfig& cfg, const std::vector<VectorStack>& z) {
  AttributePanel panel;
  panel.kinds.assign(cfg.d, AttributeKind::Continuous);
  panel.values = z;
  return build_weight_set(panel, cfg.density_value());
}

VectorStack draw_errors(const SimConfig& cfg, Rng& rng) {
  VectorStack eps(cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    eps[t].resize(cfg.n);
    for (int i = 0; i < cfg.n; ++i) eps[t](i) = draw_error(rng, cfg.error_dist);
  }
  return eps;
}

void solve_responses(MirData& data, const VectorXd& lam, const VectorStack& eps) {
  data.Y.resize(data.weights.T);
  for (int t = 0; t < data.weights.T; ++t) {
    DeltaFactor f(delta_matrix(data.weights, lam, t), t);
    data.Y[t] = f.solve(eps[t]);
  }
}

}  // namespace

SimDraw gen_setting1(const SimConfig& cfg, int rep) {
  SimDraw out;
  Rng attr_rng = Rng::derive(cfg.base_seed, rep, RoleAttributes);
  std::vector<VectorStack> z(cfg.d, VectorStack(cfg.T, VectorXd(cfg.n)));
  for (int k = 0; k < cfg.d; ++k)
    for (int t = 0; t < cfg.T; ++t)
      for (int i = 0; i < cfg.n; ++i) z[k][t](i) = attr_rng.normal();
  out.data.weights = weights_from_attributes(cfg, z);

  Rng err_rng = Rng::derive(cfg.base_seed, rep, RoleErrors);
  VectorStack eps = draw_errors(cfg, err_rng);
  solve_responses(out.data, cfg.lambda(), eps);
  return out;
}

SimDraw gen_setting2(const SimConfig& cfg, int rep) {
  if (cfg.rho < 0.0 || cfg.rho >= 1.0) throw InputError("SimConfig: rho must lie in [0,1)");
  SimDraw out;
  const int q = cfg.d + 1;
  MatrixXd cov = MatrixXd::Constant(q, q, cfg.rho);
  cov.diagonal().setOnes();
  MatrixXd L = cov.llt().matrixL();

  // Joint draws: the first d coordinates are the attributes, the last the error.
  Rng rng = Rng::derive(cfg.base_seed, rep, RoleAttributes);
  std::vector<VectorStack> z(cfg.d, VectorStack(cfg.T, VectorXd(cfg.n)));
  VectorStack eps(cfg.T, VectorXd(cfg.n));
  out.Z.assign(cfg.T, MatrixXd(cfg.n, cfg.d));
  VectorXd w(q);
  for (int t = 0; t < cfg.T; ++t) {
    for (int i = 0; i < cfg.n; ++i) {
      for (int j = 0; j < q; ++j) w(j) = rng.normal();
      VectorXd v = L * w;
      for (int k = 0; k < cfg.d; ++k) {
        z[k][t](i) = v(k);
        out.Z[t](i, k) = v(k);
      }
      eps[t](i) = v(cfg.d);
    }
  }
  out.data.weights = weights_from_attributes(cfg, z);
  solve_responses(out.data, cfg.lambda(), eps);
  return out;
}

SimDraw gen_alternative(const SimConfig& cfg, int rep) {
  SimDraw out = gen_setting1(cfg, rep);  // replaces Y below; reuses weights/errors
  Rng err_rng = Rng::derive(cfg.base_seed, rep, RoleErrors);
  VectorStack eps = draw_errors(cfg, err_rng);
  const VectorXd lam = cfg.lambda();

  // Rank-one departure applied through the system: the influence matrix gains
  // kappa/(1 + kappa||E||^2) * Delta_t E E', so Y_t = (I + kappa E E') Delta_t^{-1} eps_t.
  // The system stays invertible for every draw (det(I + kappa E E') = 1 + kappa||E||^2 > 0)
  // and the E-direction of the response is amplified by 1 + kappa||E||^2, which the
  // adequacy test picks up through the excess dispersion of the per-period residual
  // sums of squares. Subtracting kappa E E' from Delta_t directly instead flips the
  // E-direction eigenvalue to 1 - kappa||E||^2 ~ -kappa n and *shrinks* that component,
  // leaving the residual dispersion essentially at its null level for any kappa; that
  // branch is undetectable by construction and is not used.
  Rng dep_rng = Rng::derive(cfg.base_seed, rep, RoleDeparture);
  for (int attempt = 0; attempt < 10; ++attempt) {
    VectorXd E(cfg.n);
    for (int i = 0; i < cfg.n; ++i) E(i) = dep_rng.normal();
    try {
      VectorStack Y(cfg.T);
      for (int t = 0; t < cfg.T; ++t) {
        DeltaFactor f(delta_matrix(out.data.weights, lam, t), t);
        Y[t] = f.solve(eps[t]);
        if (cfg.kappa != 0.0) Y[t] += cfg.kappa * E * E.dot(Y[t]);
      }
      out.data.Y = std::move(Y);
      return out;
    } catch (const SingularError&) {
      continue;  // redraw the departure direction
    }
  }
  throw DegenerateError("gen_alternative: could not draw an invertible system in 10 attempts");
}

SimDraw gen_covariates(const SimConfig& cfg, int rep) {
  if (cfg.p < 1) throw InputError("gen_covariates requires p >= 1");
  SimDraw out = gen_setting1(cfg, rep);
  Rng x_rng = Rng::derive(cfg.base_seed, rep, RoleCovariates);
  out.X.assign(cfg.T, MatrixXd(cfg.n, cfg.p));
  for (int t = 0; t < cfg.T; ++t)
    for (int j = 0; j < cfg.p; ++j)
      for (int i = 0; i < cfg.n; ++i) out.X[t](i, j) = x_rng.normal();

  // Rebuild Y with the regression mean included.
  Rng err_rng = Rng::derive(cfg.base_seed, rep, RoleErrors);
  VectorStack eps = draw_errors(cfg, err_rng);
  const VectorXd beta = cfg.beta();
  const VectorXd lam = cfg.lambda();
  for (int t = 0; t < cfg.T; ++t) {
    DeltaFactor f(delta_matrix(out.data.weights, lam, t), t);
    out.data.Y[t] = f.solve(VectorXd(eps[t] + out.X[t] * beta));
  }
  return out;
}

namespace {

struct RepOut {
  bool ok = false;
  VectorXd est, se;         // estimation-style tasks
  VectorXd naive_est, naive_se;
  double sel_size = 0.0;
  bool sel_correct = false;
  double sel_tp = 0.0, sel_fp = 0.0;
  bool reject = false;
};

RepOut run_replication(const SimConfig& cfg, int rep) {
  RepOut out;
  FitOptions fopt;
  fopt.feasibility = cfg.feasibility;

  switch (cfg.task) {
    case SimTask::Estimate: {
      SimDraw draw = cfg.setting == SimSetting::Endogenous ? gen_setting2(cfg, rep) : gen_setting1(cfg, rep);
      FitResult fit = fit_qmle(draw.data, fopt);
      if (!fit.converged) return out;
      out.est = fit.lambda;
      out.se = fit.std_errors.head(cfg.d);
      break;
    }
    case SimTask::Covariates: {
      SimDraw draw = gen_covariates(cfg, rep);
      FitResult fit = fit_covariates(draw.data, draw.X, fopt);
      if (!fit.converged) return out;
      out.est.resize(cfg.d + cfg.p);
      out.est << fit.lambda, fit.beta;
      out.se.resize(cfg.d + cfg.p);
      out.se << fit.std_errors.head(cfg.d), fit.std_errors.tail(cfg.p);
      break;
    }
    case SimTask::Select: {
      SimDraw draw = gen_setting1(cfg, rep);
      SelectOptions sopt;
      sopt.gamma = cfg.gamma;
      sopt.fit = fopt;
      SelectionResult sel = select_subsets(draw.data, sopt);
      const int s_true = std::min(cfg.subset_size_true, cfg.d);
      int tp = 0;
      for (int k : sel.selected)
        if (k < s_true) ++tp;
      int fp = static_cast<int>(sel.selected.size()) - tp;
      out.sel_size = static_cast<double>(sel.selected.size());
      out.sel_correct = (tp == s_true && fp == 0);
      out.sel_tp = 100.0 * tp / s_true;
      out.sel_fp = cfg.d > s_true ? 100.0 * fp / (cfg.d - s_true) : 0.0;
      break;
    }
    case SimTask::Gof: {
      SimDraw draw = gen_alternative(cfg, rep);
      FitResult fit = fit_qmle(draw.data, fopt);
      if (!fit.converged) return out;
      GofResult gof = influence_test(draw.data, fit);
      out.reject = gof.p_value < cfg.alpha;
      break;
    }
    case SimTask::Endogenous: {
      SimDraw draw = gen_setting2(cfg, rep);
      FitResult naive = fit_qmle(draw.data, fopt);
      // Multistart the adjusted fit: in spectral mode the det(Delta)=0 surface
      // is an infinite valley of the likelihood that creates a spurious local
      // maximum on its near side, and a single start (from zero or from the
      // naive solution) occasionally converges there. The deflated naive
      // start lands inside the basin of the global mode directly.
      EndogenousResult ea;
      bool have_ea = false;
      for (double scale : {1.0, 0.8, 0.0}) {
        FitOptions ea_opt = fopt;
        ea_opt.lambda0 = scale * naive.lambda;
        EndogenousResult cand = fit_endogenous(draw.data, draw.Z, ea_opt);
        if (!have_ea || cand.fit.loglik > ea.fit.loglik) {
          ea = std::move(cand);
          have_ea = true;
        }
      }
      if (!naive.converged || !ea.fit.converged) return out;
      out.naive_est = naive.lambda;
      out.naive_se = naive.std_errors.head(cfg.d);
      out.est = ea.fit.lambda;
      out.se = ea.fit.std_errors.head(cfg.d);
      break;
    }
  }
  out.ok = true;
  return out;
}

void aggregate_moments(const std::vector<RepOut>& reps, bool naive, const VectorXd& truth,
                       VectorXd& bias, VectorXd& se, VectorXd& se_star) {
  const Eigen::Index q = truth.size();
  VectorXd mean = VectorXd::Zero(q), mean_se = VectorXd::Zero(q);
  int count = 0;
  for (const auto& r : reps) {
    if (!r.ok) continue;
    mean += naive ? r.naive_est : r.est;
    mean_se += naive ? r.naive_se : r.se;
    ++count;
  }
  if (count == 0) throw DegenerateError("study: no successful replications");
  mean /= count;
  mean_se /= count;
  VectorXd var = VectorXd::Zero(q);
  for (const auto& r : reps) {
    if (!r.ok) continue;
    VectorXd dev = (naive ? r.naive_est : r.est) - mean;
    var += dev.cwiseProduct(dev);
  }
  bias = mean - truth;
  se = mean_se;
  se_star = (var / count).cwiseSqrt();
}

}  // namespace

SimReport run_study(const SimConfig& cfg) {
  if (cfg.replications < 1) throw InputError("SimConfig: replications must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<RepOut> reps(cfg.replications);
  const int nthreads = std::max(1, cfg.threads);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int rep = next.fetch_add(1);
      if (rep >= cfg.replications) return;
      try {
        reps[rep] = run_replication(cfg, rep);
      } catch (const Error&) {
        reps[rep].ok = false;
      }
    }
  };
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SimReport report;
  for (const auto& r : reps)
    if (!r.ok) ++report.failures;
  report.replications_done = cfg.replications - report.failures;
  if (report.failures > 0.05 * cfg.replications)
    throw DegenerateError("study: more than 5% of replications failed (" +
                          std::to_string(report.failures) + "/" + std::to_string(cfg.replications) + ")");

  switch (cfg.task) {
    case SimTask::Estimate:
      aggregate_moments(reps, false, cfg.lambda(), report.bias, report.se, report.se_star);
      break;
    case SimTask::Covariates: {
      VectorXd truth(cfg.d + cfg.p);
      truth << cfg.lambda(), cfg.beta();
      aggregate_moments(reps, false, truth, report.bias, report.se, report.se_star);
      break;
    }
    case SimTask::Endogenous:
      aggregate_moments(reps, false, cfg.lambda(), report.bias, report.se, report.se_star);
      aggregate_moments(reps, true, cfg.lambda(), report.naive_bias, report.naive_se, report.naive_se_star);
      break;
    case SimTask::Select: {
      double as = 0.0, ct = 0.0, tpr = 0.0, fpr = 0.0;
      for (const auto& r : reps) {
        if (!r.ok) continue;
        as += r.sel_size;
        ct += r.sel_correct ? 100.0 : 0.0;
        tpr += r.sel_tp;
        fpr += r.sel_fp;
      }
      report.avg_size = as / report.replications_done;
      report.correct_fit = ct / report.replications_done;
      report.tpr = tpr / report.replications_done;
      report.fpr = fpr / report.replications_done;
      break;
    }
    case SimTask::Gof: {
      int rejections = 0;
      for (const auto& r : reps)
        if (r.ok && r.reject) ++rejections;
      report.rejection_rate = static_cast<double>(rejections) / report.replications_done;
      break;
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace mir
