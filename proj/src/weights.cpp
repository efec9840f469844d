#include "mir/weights.hpp"

#include <algorithm>
#include <cmath>

namespace mir {

void AttributePanel::validate() const {
  if (values.empty()) throw InputError("attribute panel is empty");
  if (kinds.size() != values.size()) throw InputError("attribute panel: kinds/values size mismatch");
  const int T0 = T();
  const int n0 = n();
  if (T0 == 0 || n0 == 0) throw InputError("attribute panel has no periods or actors");
  for (int k = 0; k < d(); ++k) {
    if (static_cast<int>(values[k].size()) != T0)
      throw InputError("attribute panel: attribute " + std::to_string(k + 1) + " has inconsistent period count");
    for (int t = 0; t < T0; ++t) {
      if (values[k][t].size() != n0)
        throw InputError("attribute panel: attribute " + std::to_string(k + 1) + ", period " +
                         std::to_string(t + 1) + " has length " + std::to_string(values[k][t].size()) +
                         ", expected " + std::to_string(n0));
      if (kinds[k] == AttributeKind::Continuous && !values[k][t].allFinite())
        throw InputError("attribute panel: non-finite value in attribute " + std::to_string(k + 1) +
                         ", period " + std::to_string(t + 1));
    }
  }
}

void WeightSet::validate() const {
  for (int k = 0; k < d; ++k) {
    for (int t = 0; t < T; ++t) {
      const MatrixXd& W = w(k, t);
      if (W.rows() != n || W.cols() != n) throw InputError("weight set: wrong matrix dimension");
      if (W.diagonal().cwiseAbs().maxCoeff() > 0.0)
        throw InputError("weight set: nonzero diagonal at (k=" + std::to_string(k + 1) + ",t=" + std::to_string(t + 1) + ")");
      if (W.minCoeff() < 0.0)
        throw InputError("weight set: negative entry at (k=" + std::to_string(k + 1) + ",t=" + std::to_string(t + 1) + ")");
      if ((W.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-12)
        throw InputError("weight set: row sums deviate from 1 at (k=" + std::to_string(k + 1) + ",t=" + std::to_string(t + 1) + ")");
    }
  }
}

MatrixXd build_similarity_continuous(const VectorXd& z, double phi) {
  if (!(phi > 0.0)) throw InputError("similarity threshold phi must be positive");
  if (!z.allFinite()) throw InputError("continuous attribute contains non-finite values");
  const int n = static_cast<int>(z.size());
  MatrixXd A = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double diff = z(i) - z(j);
      if (std::abs(diff) < phi) {
        double a = std::exp(-diff * diff);
        A(i, j) = a;
        A(j, i) = a;
      }
    }
  }
  return A;
}

MatrixXd build_similarity_discrete(const VectorXd& z) {
  const int n = static_cast<int>(z.size());
  MatrixXd A = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (z(i) == z(j)) A(i, j) = A(j, i) = 1.0;
  return A;
}

double select_threshold(const VectorXd& z, double target_density) {
  const int n = static_cast<int>(z.size());
  if (n < 2) throw InputError("select_threshold requires n >= 2");
  if (!(target_density > 0.0) || target_density > 1.0)
    throw InputError("target_density must lie in (0,1]");
  // Ordered-pair distances (each unordered pair counted twice, matching the
  // off-diagonal density definition over n(n-1) entries).
  std::vector<double> dist;
  dist.reserve(static_cast<size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) dist.push_back(std::abs(z(i) - z(j)));
  std::sort(dist.begin(), dist.end());
  const auto m = static_cast<size_t>(std::ceil(target_density * static_cast<double>(dist.size())));
  const double vm = dist[std::min(m, dist.size()) - 1];
  // Half way to the next distinct distance; ties at the cut are all included.
  auto it = std::upper_bound(dist.begin(), dist.end(), vm);
  if (it != dist.end()) return vm + 0.5 * (*it - vm);
  return vm + (vm > 0.0 ? 0.5 * vm : 1.0);  // no larger distance: any phi > vm works
}

MatrixXd row_normalize(const MatrixXd& A) {
  if (A.minCoeff() < 0.0) throw InputError("row_normalize: negative entries");
  MatrixXd W = A;
  for (int i = 0; i < A.rows(); ++i) {
    double s = A.row(i).sum();
    if (s <= 0.0)
      throw InputError("row_normalize: actor " + std::to_string(i + 1) + " has zero row sum (isolated)");
    W.row(i) /= s;
  }
  return W;
}

namespace {

// Connect an all-zero row to its nearest neighbor. The link is the row's only
// entry, so normalization rescales it to 1 regardless of the kernel value
// (which can underflow for distant actors).
void repair_isolated_rows(MatrixXd& A, const VectorXd& z) {
  const int n = static_cast<int>(z.size());
  for (int i = 0; i < n; ++i) {
    if (A.row(i).sum() > 0.0) continue;
    int jbest = -1;
    double dbest = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double dj = std::abs(z(i) - z(j));
      if (jbest < 0 || dj < dbest) {
        jbest = j;
        dbest = dj;
      }
    }
    A(i, jbest) = 1.0;
  }
}

}  // namespace

WeightSet build_weight_set(const AttributePanel& panel, double target_density) {
  panel.validate();
  WeightSet ws = WeightSet::empty(panel.n(), panel.d(), panel.T());
  for (int k = 0; k < ws.d; ++k) {
    for (int t = 0; t < ws.T; ++t) {
      const VectorXd& z = panel.values[k][t];
      MatrixXd A;
      if (panel.kinds[k] == AttributeKind::Continuous) {
        double phi = select_threshold(z, target_density);
        A = build_similarity_continuous(z, phi);
        repair_isolated_rows(A, z);
      } else {
        A = build_similarity_discrete(z);
        for (int i = 0; i < ws.n; ++i)
          if (A.row(i).sum() <= 0.0)
            throw InputError("build_weight_set: actor " + std::to_string(i + 1) + " is isolated in attribute " +
                             std::to_string(k + 1) + ", period " + std::to_string(t + 1));
      }
      ws.w(k, t) = row_normalize(A);
    }
  }
  return ws;
}

}  // namespace mir
