#include "mir/select.hpp"

#include <algorithm>
#include <cmath>

namespace mir {

double ebic(double loglik, int subset_size, double n_obs, int d, double gamma) {
  return -2.0 * loglik + subset_size * std::log(n_obs) + gamma * subset_size * std::log(static_cast<double>(d));
}

namespace {

// Log-likelihood of the null model (no mutual influence): Delta_t = I.
double empty_model_loglik(const MirData& data, double* sigma2_out) {
  const double N = static_cast<double>(data.n()) * data.T();
  double ss = 0.0;
  for (const auto& y : data.Y) ss += y.squaredNorm();
  double s2 = ss / N;
  if (s2 <= 0.0) throw DegenerateError("responses are identically zero");
  if (sigma2_out) *sigma2_out = s2;
  return -0.5 * N * (std::log(2.0 * M_PI) + 1.0 + std::log(s2));
}

FitResult empty_fit(const MirData& data) {
  FitResult fit;
  fit.lambda.resize(0);
  fit.loglik = empty_model_loglik(data, &fit.sigma2);
  fit.converged = true;
  fit.residuals = data.Y;
  fit.mu4 = mu4_hat(fit.residuals, fit.sigma2);
  return fit;
}

}  // namespace

SelectionResult select_subsets(const MirData& data, const SelectOptions& opts) {
  data.validate();
  const int d = data.d();
  const double N = static_cast<double>(data.n()) * data.T();
  const int q_max = opts.q_max < 0 ? std::min(d, 6) : std::min(opts.q_max, d);

  // Full-model fit provides warm starts for every subset.
  FitOptions warm_opts = opts.fit;
  warm_opts.compute_information = false;
  FitResult full = fit_qmle(data, warm_opts);

  SelectionResult res;
  bool have_best = false;
  double best_ebic = 0.0;

  auto consider = [&](SubsetFit cand) {
    // Enumeration is size-ascending then lexicographic, so keeping the
    // incumbent on ties prefers smaller, earlier subsets.
    if (!have_best || cand.ebic < best_ebic) {
      best_ebic = cand.ebic;
      res.selected = cand.subset;
      have_best = true;
    }
    res.table.push_back(std::move(cand));
  };

  if (opts.include_empty) {
    SubsetFit cand;
    cand.loglik = empty_model_loglik(data, nullptr);
    cand.ebic = ebic(cand.loglik, 0, N, d, opts.gamma);
    cand.converged = true;
    consider(std::move(cand));
  }

  for (int size = 1; size <= q_max; ++size) {
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      FitOptions sub_opts = opts.fit;
      sub_opts.compute_information = false;
      sub_opts.lambda0.resize(size);
      for (int i = 0; i < size; ++i) sub_opts.lambda0(i) = full.lambda(idx[i]);
      FitResult fit = fit_qmle_subset(data, idx, sub_opts);

      SubsetFit cand;
      cand.subset = idx;
      cand.loglik = fit.loglik;
      cand.ebic = ebic(fit.loglik, size, N, d, opts.gamma);
      cand.converged = fit.converged;
      cand.lambda = fit.lambda;
      consider(std::move(cand));

      // Next lexicographic combination.
      int i = size - 1;
      while (i >= 0 && idx[i] == d - size + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }

  if (res.selected.empty()) {
    res.fit = empty_fit(data);
  } else {
    FitOptions refit_opts = opts.fit;
    refit_opts.compute_information = true;
    refit_opts.lambda0.resize(static_cast<Eigen::Index>(res.selected.size()));
    for (size_t i = 0; i < res.selected.size(); ++i)
      refit_opts.lambda0(static_cast<Eigen::Index>(i)) = full.lambda(res.selected[i]);
    res.fit = fit_qmle_subset(data, res.selected, refit_opts);
  }
  return res;
}

}  // namespace mir
