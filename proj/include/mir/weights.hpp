#pragma once

#include "mir/common.hpp"

namespace mir {

enum class AttributeKind { Continuous, Discrete };

// Panel of actor attributes: values[k][t] is the length-n attribute vector of
// the k-th attribute at period t. Discrete attributes carry class labels
// encoded as (exactly comparable) numeric values.
struct AttributePanel {
  std::vector<AttributeKind> kinds;          // size d
  std::vector<VectorStack> values;           // [k][t], each length n

  int d() const { return static_cast<int>(values.size()); }
  int T() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }
  int n() const { return (values.empty() || values[0].empty()) ? 0 : static_cast<int>(values[0][0].size()); }

  void validate() const;
};

// Stack of row-stochastic weight matrices W_k^(t), zero diagonal, unit row sums.
struct WeightSet {
  int n = 0, d = 0, T = 0;
  MatrixStack mats;  // flat, index k*T + t

  const MatrixXd& w(int k, int t) const { return mats[static_cast<size_t>(k) * T + t]; }
  MatrixXd& w(int k, int t) { return mats[static_cast<size_t>(k) * T + t]; }

  static WeightSet empty(int n, int d, int T) {
    WeightSet ws;
    ws.n = n;
    ws.d = d;
    ws.T = T;
    ws.mats.assign(static_cast<size_t>(d) * T, MatrixXd::Zero(n, n));
    return ws;
  }

  // Checks zero diagonal, nonnegativity and unit row sums (1e-12).
  void validate() const;
};

// Gaussian-kernel similarity with hard distance cutoff phi; zero diagonal.
MatrixXd build_similarity_continuous(const VectorXd& z, double phi);

// Same-class indicator similarity; zero diagonal.
MatrixXd build_similarity_discrete(const VectorXd& z);

// Cutoff giving the smallest achievable off-diagonal density >= target_density.
double select_threshold(const VectorXd& z, double target_density);

// Divides each row by its sum; throws InputError on a zero row.
MatrixXd row_normalize(const MatrixXd& A);

// Full pipeline: per-(k,t) threshold selection, similarity construction,
// isolated-row repair (continuous attributes only) and row normalization.
WeightSet build_weight_set(const AttributePanel& panel, double target_density);

}  // namespace mir
