#include "mir/engine.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mir {

ProfiledObjective::ProfiledObjective(const VectorStack& Y, const WeightSet& weights,
                                     std::vector<int> active, const MatrixStack* X,
                                     bool demean_time)
    : Y_(&Y), W_(&weights), active_(std::move(active)), demean_(demean_time) {
  n_ = weights.n;
  T_ = weights.T;
  if (static_cast<int>(Y.size()) != T_) throw InputError("engine: Y period count differs from weights");
  for (const auto& y : Y)
    if (y.size() != n_) throw InputError("engine: Y length differs from weight dimension");
  if (active_.empty()) throw InputError("engine: empty active set");
  for (int k : active_)
    if (k < 0 || k >= weights.d) throw InputError("engine: active index out of range");
  if (demean_ && T_ < 2) throw InputError("engine: time-demeaning needs T >= 2");

  p_ = X ? static_cast<int>((*X)[0].cols()) : 0;
  if (X) {
    if (static_cast<int>(X->size()) != T_) throw InputError("engine: X period count differs from Y");
    for (const auto& x : *X)
      if (x.rows() != n_ || x.cols() != p_) throw InputError("engine: inconsistent X dimensions");
  }

  xbar_ = MatrixXd::Zero(n_, p_);
  if (p_ > 0) {
    for (const auto& x : *X) xbar_ += x;
    xbar_ /= static_cast<double>(T_);
    Xd_.reserve(T_);
    for (const auto& x : *X) Xd_.push_back(demean_ ? MatrixXd(x - xbar_) : x);
    MatrixXd gram = MatrixXd::Zero(p_, p_);
    for (const auto& x : Xd_) gram.noalias() += x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    double emin = es.eigenvalues().minCoeff(), emax = es.eigenvalues().maxCoeff();
    gram_cond_ = (emin > 0.0) ? emax / emin : std::numeric_limits<double>::infinity();
    if (!(emin > 0.0)) throw DegenerateError("engine: regressor Gram matrix is singular");
    gram_ldlt_.compute(gram);
  }

  Wy_.resize(active_.size());
  for (size_t a = 0; a < active_.size(); ++a) {
    Wy_[a].reserve(T_);
    for (int t = 0; t < T_; ++t) Wy_[a].push_back(weights.w(active_[a], t) * Y[t]);
  }
}

double ProfiledObjective::eval(const VectorXd& lambda, VectorXd* grad) const {
  const int m = this->m();
  if (lambda.size() != m) throw InputError("engine: lambda has wrong length");
  const double N = nobs();

  double logdet = 0.0;
  VectorStack u(T_);
  std::vector<DeltaFactor> factors;
  factors.reserve(grad ? T_ : 0);
  for (int t = 0; t < T_; ++t) {
    DeltaFactor f(delta_matrix(*W_, lambda, t, &active_), t);
    logdet += f.log_abs_det();
    u[t] = (*Y_)[t];
    for (int a = 0; a < m; ++a)
      if (lambda(a) != 0.0) u[t].noalias() -= lambda(a) * Wy_[a][t];
    if (grad) factors.push_back(std::move(f));
  }

  ubar_ = VectorXd::Zero(n_);
  if (demean_) {
    for (const auto& ut : u) ubar_ += ut;
    ubar_ /= static_cast<double>(T_);
    for (auto& ut : u) ut -= ubar_;
  }

  if (p_ > 0) {
    VectorXd rhs = VectorXd::Zero(p_);
    for (int t = 0; t < T_; ++t) rhs.noalias() += Xd_[t].transpose() * u[t];
    beta_ = gram_ldlt_.solve(rhs);
  } else {
    beta_.resize(0);
  }

  resid_ = std::move(u);
  double ss = 0.0;
  for (int t = 0; t < T_; ++t) {
    if (p_ > 0) resid_[t].noalias() -= Xd_[t] * beta_;
    ss += resid_[t].squaredNorm();
  }
  sigma2_ = ss / N;
  if (sigma2_ <= 0.0) throw DegenerateError("engine: profiled sigma^2 is zero");

  if (grad) {
    VectorXd dot = VectorXd::Zero(m), tr = VectorXd::Zero(m);
    for (int t = 0; t < T_; ++t) {
      MatrixXd invT = factors[t].inverse().transpose();  // one inverse per period
      for (int a = 0; a < m; ++a) {
        dot(a) += Wy_[a][t].dot(resid_[t]);
        tr(a) += W_->w(active_[a], t).cwiseProduct(invT).sum();
      }
    }
    *grad = dot / sigma2_ - tr;
  }
  return -0.5 * N * (std::log(2.0 * M_PI) + 1.0 + std::log(sigma2_)) + logdet;
}

InfoMatrices compute_information(const VectorStack&, const WeightSet& weights,
                                 const std::vector<int>& active, const VectorXd& lambda,
                                 double sigma2, const VectorStack& residuals,
                                 const MatrixStack* design, const VectorStack* mean) {
  const int n = weights.n, T = weights.T;
  const int m = static_cast<int>(active.size());
  const int p = design ? static_cast<int>((*design)[0].cols()) : 0;
  const int q = m + 1 + p;
  const double N = static_cast<double>(n) * T;
  const double s2 = sigma2, s4 = s2 * s2;

  InfoMatrices out;
  double sum3 = 0.0, sum4 = 0.0;
  for (const auto& r : residuals) {
    sum3 += r.array().cube().sum();
    sum4 += r.array().pow(4).sum();
  }
  out.mu4 = sum4 / (N * s4);
  out.mu3 = sum3 / (N * s2 * std::sqrt(s2));
  const double mu4 = out.mu4, mu3 = out.mu3;
  const double sigma = std::sqrt(s2);

  MatrixXd I = MatrixXd::Zero(q, q), J = MatrixXd::Zero(q, q);
  MatrixStack G(m), U(m);
  std::vector<VectorXd> h(m), dU(m);

  for (int t = 0; t < T; ++t) {
    DeltaFactor f(delta_matrix(weights, lambda, t, &active), t);
    MatrixXd inv = f.inverse();
    for (int a = 0; a < m; ++a) {
      G[a].noalias() = weights.w(active[a], t) * inv;
      U[a] = 0.5 * (G[a] + G[a].transpose());
      dU[a] = G[a].diagonal();
      h[a] = mean ? VectorXd(G[a] * (*mean)[t]) : VectorXd(VectorXd::Zero(n));
    }
    for (int a = 0; a < m; ++a) {
      double trG = G[a].trace();
      for (int b = 0; b <= a; ++b) {
        double trUU = U[a].cwiseProduct(U[b]).sum();
        double hh = h[a].dot(h[b]);
        double Iab = 2.0 * trUU + hh / s2;
        double Jab = 2.0 * trUU + (mu4 - 3.0) * dU[a].dot(dU[b]) + hh / s2 +
                     (mu3 / sigma) * (h[a].dot(dU[b]) + h[b].dot(dU[a]));
        I(a, b) += Iab;
        J(a, b) += Jab;
        if (a != b) {
          I(b, a) += Iab;
          J(b, a) += Jab;
        }
      }
      I(a, m) += trG / s2;
      I(m, a) += trG / s2;
      double Jas = (mu4 - 1.0) * trG / (2.0 * s2) + (mu3 / (2.0 * s2 * sigma)) * h[a].sum();
      J(a, m) += Jas;
      J(m, a) += Jas;
      for (int j = 0; j < p; ++j) {
        const auto xj = (*design)[t].col(j);
        double Iaj = xj.dot(h[a]) / s2;
        double Jaj = Iaj + (mu3 / sigma) * xj.dot(dU[a]);
        I(a, m + 1 + j) += Iaj;
        I(m + 1 + j, a) += Iaj;
        J(a, m + 1 + j) += Jaj;
        J(m + 1 + j, a) += Jaj;
      }
    }
    for (int j = 0; j < p; ++j) {
      const auto xj = (*design)[t].col(j);
      double Jjs = (mu3 / (2.0 * s2 * sigma)) * xj.sum();
      J(m + 1 + j, m) += Jjs;
      J(m, m + 1 + j) += Jjs;
      for (int i = 0; i <= j; ++i) {
        double xx = xj.dot((*design)[t].col(i)) / s2;
        I(m + 1 + j, m + 1 + i) += xx;
        J(m + 1 + j, m + 1 + i) += xx;
        if (i != j) {
          I(m + 1 + i, m + 1 + j) += xx;
          J(m + 1 + i, m + 1 + j) += xx;
        }
      }
    }
  }
  I /= N;
  J /= N;
  I(m, m) = 1.0 / (2.0 * s4);
  J(m, m) = (mu4 - 1.0) / (4.0 * s4);
  out.I = std::move(I);
  out.J = std::move(J);
  return out;
}

}  // namespace mir
