#include "mir/simlab.hpp"

#include <doctest.h>

#include <cmath>

using namespace mir;

TEST_CASE("error laws are standardized") {
  Rng rng(123);
  const int N = 200000;
  auto moments = [&](auto draw) {
    double m = 0.0, v = 0.0;
    for (int i = 0; i < N; ++i) {
      double x = draw();
      m += x;
      v += x * x;
    }
    m /= N;
    return std::pair<double, double>(m, v / N - m * m);
  };
  auto [mn, vn] = moments([&] { return rng.normal(); });
  CHECK(std::abs(mn) < 0.01);
  CHECK(vn == doctest::Approx(1.0).epsilon(0.02));
  auto [mm, vm] = moments([&] { return rng.mixture_normal(); });
  CHECK(std::abs(mm) < 0.01);
  CHECK(vm == doctest::Approx(1.0).epsilon(0.03));
  auto [me, ve] = moments([&] { return rng.std_exponential(); });
  CHECK(std::abs(me) < 0.01);
  CHECK(ve == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("derived streams are reproducible and distinct") {
  SimConfig cfg;
  cfg.n = 15;
  cfg.T = 4;
  cfg.d = 2;
  SimDraw a = gen_setting1(cfg, 3);
  SimDraw b = gen_setting1(cfg, 3);
  for (int t = 0; t < cfg.T; ++t) CHECK(a.data.Y[t] == b.data.Y[t]);
  for (int k = 0; k < cfg.d; ++k)
    for (int t = 0; t < cfg.T; ++t) CHECK(a.data.weights.w(k, t) == b.data.weights.w(k, t));
  SimDraw c = gen_setting1(cfg, 4);
  CHECK(a.data.Y[0] != c.data.Y[0]);

  // role/replication streams never collide on their opening words
  std::map<std::uint64_t, int> seen;
  for (int rep = 0; rep < 10000; ++rep)
    for (int role = 0; role < 4; ++role) {
      Rng r = Rng::derive(cfg.base_seed, rep, role);
      CHECK(seen.emplace(r.next_u64(), 1).second);
    }
}

TEST_CASE("zero influence coefficients give white-noise responses") {
  SimConfig cfg;
  cfg.n = 40;
  cfg.T = 50;
  cfg.d = 2;
  cfg.lambda_true = VectorXd::Zero(2);
  SimDraw draw = gen_setting1(cfg, 1);
  double m = 0.0, v = 0.0;
  for (const auto& y : draw.data.Y) {
    m += y.sum();
    v += y.squaredNorm();
  }
  const double N = cfg.n * cfg.T;
  m /= N;
  CHECK(std::abs(m) < 0.05);
  CHECK(v / N - m * m == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("endogenous setting induces the intended attribute-error correlation") {
  SimConfig cfg;
  cfg.n = 60;
  cfg.T = 60;
  cfg.d = 3;
  cfg.setting = SimSetting::Endogenous;
  SimDraw draw = gen_setting2(cfg, 2);
  VectorXd lam = cfg.lambda();
  const double N = cfg.n * cfg.T;
  // recover the errors from the data-generating system matrix
  VectorXd eps_all(static_cast<int>(N));
  MatrixXd z_all(static_cast<int>(N), cfg.d);
  int row = 0;
  for (int t = 0; t < cfg.T; ++t) {
    VectorXd e = delta_matrix(draw.data.weights, lam, t) * draw.data.Y[t];
    for (int i = 0; i < cfg.n; ++i, ++row) {
      eps_all(row) = e(i);
      z_all.row(row) = draw.Z[t].row(i);
    }
  }
  double se = std::sqrt(eps_all.squaredNorm() / N - std::pow(eps_all.mean(), 2));
  for (int k = 0; k < cfg.d; ++k) {
    VectorXd zk = z_all.col(k);
    double sz = std::sqrt(zk.squaredNorm() / N - std::pow(zk.mean(), 2));
    double c = (zk.dot(eps_all) / N - zk.mean() * eps_all.mean()) / (se * sz);
    CHECK(c == doctest::Approx(cfg.rho).epsilon(0.15));
  }
}

TEST_CASE("alternative generator nests the null at kappa zero") {
  SimConfig cfg;
  cfg.n = 20;
  cfg.T = 6;
  cfg.d = 2;
  cfg.setting = SimSetting::Alternative;
  cfg.kappa = 0.0;
  SimDraw null_draw = gen_alternative(cfg, 5);
  SimConfig base = cfg;
  base.setting = SimSetting::Exogenous;
  SimDraw exo = gen_setting1(base, 5);
  for (int t = 0; t < cfg.T; ++t) CHECK(null_draw.data.Y[t] == exo.data.Y[t]);

  cfg.kappa = 0.2;
  SimDraw alt = gen_alternative(cfg, 5);
  CHECK(alt.data.Y[0] != exo.data.Y[0]);
  // the weight matrices themselves are unchanged under the alternative
  for (int t = 0; t < cfg.T; ++t) CHECK(alt.data.weights.w(0, t) == exo.data.weights.w(0, t));
}

TEST_CASE("covariate setting reproduces its own mean structure") {
  SimConfig cfg;
  cfg.n = 25;
  cfg.T = 8;
  cfg.d = 2;
  cfg.p = 3;
  SimDraw draw = gen_covariates(cfg, 4);
  REQUIRE(draw.X.size() == static_cast<size_t>(cfg.T));
  CHECK(draw.X[0].cols() == 3);
  // residuals at the true parameters have the covariate mean removed
  VectorXd lam = cfg.lambda();
  VectorXd beta = cfg.beta();
  double ss = 0.0;
  for (int t = 0; t < cfg.T; ++t) {
    VectorXd e = delta_matrix(draw.data.weights, lam, t) * draw.data.Y[t] - draw.X[t] * beta;
    ss += e.squaredNorm();
  }
  CHECK(ss / (cfg.n * cfg.T) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("run_study aggregates and is thread-count invariant") {
  SimConfig cfg;
  cfg.n = 20;
  cfg.T = 10;
  cfg.d = 2;
  cfg.replications = 8;
  cfg.threads = 1;
  SimReport r1 = run_study(cfg);
  CHECK(r1.replications_done == 8);
  CHECK(r1.failures == 0);
  REQUIRE(r1.bias.size() == 2);
  CHECK(r1.bias.lpNorm<Eigen::Infinity>() < 0.2);
  CHECK(r1.se.minCoeff() > 0.0);
  CHECK(r1.se_star.minCoeff() > 0.0);

  cfg.threads = 4;
  SimReport r4 = run_study(cfg);
  CHECK(r1.bias == r4.bias);
  CHECK(r1.se == r4.se);
  CHECK(r1.se_star == r4.se_star);
}

TEST_CASE("run_study selection and test tasks") {
  SimConfig cfg;
  cfg.n = 25;
  cfg.T = 10;
  cfg.d = 3;
  cfg.task = SimTask::Select;
  cfg.subset_size_true = 2;
  cfg.replications = 4;
  cfg.threads = 2;
  SimReport sel = run_study(cfg);
  CHECK(sel.avg_size >= 0.0);
  CHECK(sel.tpr >= 0.0);
  CHECK(sel.tpr <= 100.0);
  CHECK(sel.fpr <= 100.0);

  SimConfig gof = cfg;
  gof.task = SimTask::Gof;
  gof.subset_size_true = 3;
  gof.setting = SimSetting::Alternative;
  gof.kappa = 0.0;
  SimReport gr = run_study(gof);
  CHECK(gr.rejection_rate >= 0.0);
  CHECK(gr.rejection_rate <= 1.0);
}
