#pragma once

#include "mir/estimate.hpp"

namespace mir {

struct SelectOptions {
  double gamma = 2.0;   // extended BIC penalty weight
  int q_max = -1;       // largest subset size; -1 -> min(d, 6)
  bool include_empty = true;
  FitOptions fit;       // subset-fit settings (information is skipped internally)
};

struct SubsetFit {
  std::vector<int> subset;
  double loglik = 0.0;
  double ebic = 0.0;
  bool converged = false;
  VectorXd lambda;
};

struct SelectionResult {
  std::vector<int> selected;     // may be empty
  FitResult fit;                 // refit on the selected subset, with information
  std::vector<SubsetFit> table;  // all candidates in enumeration order
};

// EBIC_gamma = -2 loglik + |S| log(nT) + gamma |S| log(d).
double ebic(double loglik, int subset_size, double n_obs, int d, double gamma);

// Exhaustive subset search over sizes 0..q_max; ties resolved toward smaller
// subsets, then lexicographically.
SelectionResult select_subsets(const MirData& data, const SelectOptions& opts = {});

}  // namespace mir
