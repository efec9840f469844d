#include "mir/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mir {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << std::setprecision(17);
  return out;
}

std::vector<double> parse_row(const std::string& line, const std::string& path, int lineno) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      size_t pos = 0;
      row.push_back(std::stod(cell, &pos));
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
      if (pos != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw InputError(path + ":" + std::to_string(lineno) + ": cannot parse '" + cell + "' as a number");
    }
  }
  return row;
}

json manifest_json(const RunManifest& m) {
  json j;
  j["subcommand"] = m.subcommand;
  j["config"] = m.config;
  j["input_digests"] = m.input_digests;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["seconds"] = m.seconds;
  return j;
}

json vec_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

VectorStack read_y_csv(const std::string& path) {
  auto in = open_in(path);
  VectorStack Y;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = parse_row(line, path, lineno);
    Y.emplace_back(Eigen::Map<VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
    if (Y.back().size() != Y.front().size())
      throw InputError(path + ":" + std::to_string(lineno) + ": ragged row (expected " +
                       std::to_string(Y.front().size()) + " values, got " + std::to_string(Y.back().size()) + ")");
  }
  if (Y.empty()) throw InputError(path + ": no data rows");
  return Y;
}

void write_y_csv(const std::string& path, const VectorStack& Y) {
  auto out = open_out(path);
  for (const auto& y : Y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) out << (i ? "," : "") << y(i);
    out << "\n";
  }
}

MatrixXd read_matrix_csv(const std::string& path) {
  VectorStack rows = read_y_csv(path);
  MatrixXd M(static_cast<Eigen::Index>(rows.size()), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = rows[i];
  return M;
}

void write_matrix_csv(const std::string& path, const MatrixXd& M) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) out << (j ? "," : "") << M(i, j);
    out << "\n";
  }
}

namespace {

// Shared reader for long-format (index1, t, i, value) files.
std::vector<std::vector<std::vector<double>>> read_long_csv(const std::string& path,
                                                            const std::string& header0) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  std::string norm;
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) norm += static_cast<char>(std::tolower(c));
  if (norm != header0 + ",t,i,value")
    throw InputError(path + ":1: expected header '" + header0 + ",t,i,value', got '" + line + "'");

  // values[k][t][i]; sized from the maximal indices seen.
  std::vector<std::vector<std::vector<double>>> vals;
  std::vector<std::vector<std::vector<bool>>> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = parse_row(line, path, lineno);
    if (row.size() != 4)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected 4 fields, got " + std::to_string(row.size()));
    int k = static_cast<int>(row[0]), t = static_cast<int>(row[1]), i = static_cast<int>(row[2]);
    if (k < 1 || t < 1 || i < 1)
      throw InputError(path + ":" + std::to_string(lineno) + ": indices are 1-based and must be positive");
    if (static_cast<size_t>(k) > vals.size()) {
      vals.resize(k);
      seen.resize(k);
    }
    if (static_cast<size_t>(t) > vals[k - 1].size()) {
      vals[k - 1].resize(t);
      seen[k - 1].resize(t);
    }
    if (static_cast<size_t>(i) > vals[k - 1][t - 1].size()) {
      vals[k - 1][t - 1].resize(i, 0.0);
      seen[k - 1][t - 1].resize(i, false);
    }
    if (seen[k - 1][t - 1][i - 1])
      throw InputError(path + ":" + std::to_string(lineno) + ": duplicate entry");
    vals[k - 1][t - 1][i - 1] = row[3];
    seen[k - 1][t - 1][i - 1] = true;
  }
  for (size_t k = 0; k < seen.size(); ++k)
    for (size_t t = 0; t < seen[k].size(); ++t)
      for (size_t i = 0; i < seen[k][t].size(); ++i)
        if (!seen[k][t][i])
          throw InputError(path + ": missing entry (" + header0 + "=" + std::to_string(k + 1) + ", t=" +
                           std::to_string(t + 1) + ", i=" + std::to_string(i + 1) + ")");
  if (vals.empty()) throw InputError(path + ": no data rows");
  return vals;
}

}  // namespace

AttributePanel read_attributes_csv(const std::string& path, const std::vector<int>& discrete) {
  auto vals = read_long_csv(path, "k");
  AttributePanel panel;
  panel.kinds.assign(vals.size(), AttributeKind::Continuous);
  for (int k1 : discrete) {
    if (k1 < 1 || static_cast<size_t>(k1) > vals.size())
      throw InputError("discrete attribute index " + std::to_string(k1) + " out of range");
    panel.kinds[k1 - 1] = AttributeKind::Discrete;
  }
  panel.values.resize(vals.size());
  for (size_t k = 0; k < vals.size(); ++k) {
    panel.values[k].resize(vals[k].size());
    for (size_t t = 0; t < vals[k].size(); ++t)
      panel.values[k][t] =
          Eigen::Map<VectorXd>(vals[k][t].data(), static_cast<Eigen::Index>(vals[k][t].size()));
  }
  panel.validate();
  return panel;
}

MatrixStack read_covariates_csv(const std::string& path) {
  auto vals = read_long_csv(path, "j");
  const size_t p = vals.size(), T = vals[0].size();
  const size_t n = vals[0][0].size();
  MatrixStack X(T, MatrixXd(n, p));
  for (size_t j = 0; j < p; ++j) {
    if (vals[j].size() != T) throw InputError(path + ": covariates have inconsistent period counts");
    for (size_t t = 0; t < T; ++t) {
      if (vals[j][t].size() != n) throw InputError(path + ": covariates have inconsistent lengths");
      for (size_t i = 0; i < n; ++i) X[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vals[j][t][i];
    }
  }
  return X;
}

WeightSet read_weights_dir(const std::string& dir, int d, int T) {
  WeightSet ws;
  bool first = true;
  for (int k = 1; k <= d; ++k) {
    for (int t = 1; t <= T; ++t) {
      std::string path = dir + "/W" + std::to_string(k) + "_" + std::to_string(t) + ".csv";
      MatrixXd W = read_matrix_csv(path);
      if (W.rows() != W.cols()) throw InputError(path + ": weight matrix is not square");
      if (first) {
        ws = WeightSet::empty(static_cast<int>(W.rows()), d, T);
        first = false;
      } else if (W.rows() != ws.n) {
        throw InputError(path + ": dimension " + std::to_string(W.rows()) + " differs from earlier matrices (" +
                         std::to_string(ws.n) + ")");
      }
      ws.w(k - 1, t - 1) = std::move(W);
    }
  }
  ws.validate();
  return ws;
}

void write_weights_dir(const std::string& dir, const WeightSet& ws) {
  std::filesystem::create_directories(dir);
  for (int k = 1; k <= ws.d; ++k)
    for (int t = 1; t <= ws.T; ++t)
      write_matrix_csv(dir + "/W" + std::to_string(k) + "_" + std::to_string(t) + ".csv", ws.w(k - 1, t - 1));
}

void write_estimates_json(const std::string& path, const FitResult& fit, const RunManifest& manifest) {
  json j;
  json active = json::array();
  for (int k : fit.active) active.push_back(k + 1);
  j["active"] = active;
  j["lambda"] = vec_json(fit.lambda);
  j["sigma2"] = fit.sigma2;
  if (fit.beta.size() > 0) j["beta"] = vec_json(fit.beta);
  if (fit.omega.size() > 0) j["omega"] = vec_json(fit.omega);
  if (std::isfinite(fit.sigma2_ba)) j["sigma2_ba"] = fit.sigma2_ba;
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["mu4"] = fit.mu4;
  if (fit.std_errors.size() > 0) {
    j["std_errors"] = vec_json(fit.std_errors);
    json pvals = json::array();
    for (Eigen::Index i = 0; i < fit.lambda.size(); ++i) {
      double se = fit.std_errors(i);
      double zi = se > 0.0 ? fit.lambda(i) / se : std::numeric_limits<double>::infinity();
      pvals.push_back(2.0 * (1.0 - normal_cdf(std::abs(zi))));
    }
    j["p_values_lambda"] = pvals;
  }
  j["manifest"] = manifest_json(manifest);
  open_out(path) << j.dump(2) << "\n";
}

void write_gof_json(const std::string& path, const GofResult& gof, double alpha, const RunManifest& manifest) {
  json j;
  j["t_ql"] = gof.t_ql;
  j["mu_ql"] = gof.mu_ql;
  j["sigma2_ql"] = gof.sigma2_ql;
  j["z"] = gof.z;
  j["p_value"] = gof.p_value;
  j["alpha"] = alpha;
  j["reject"] = gof.p_value < alpha;
  j["mu4"] = gof.mu4;
  j["variance_terms"] = {gof.term1, gof.term2, gof.term3};
  j["n_over_T"] = gof.ratio;
  j["regime_warning"] = gof.regime_warning;
  j["manifest"] = manifest_json(manifest);
  open_out(path) << j.dump(2) << "\n";
}

void write_selection_csv(const std::string& path, const SelectionResult& sel) {
  auto out = open_out(path);
  out << "subset,size,loglik,ebic,converged,selected\n";
  for (const auto& row : sel.table) {
    std::string subset;
    for (size_t i = 0; i < row.subset.size(); ++i)
      subset += (i ? "+" : "") + std::to_string(row.subset[i] + 1);
    if (subset.empty()) subset = "none";
    out << subset << "," << row.subset.size() << "," << row.loglik << "," << row.ebic << ","
        << (row.converged ? 1 : 0) << "," << (row.subset == sel.selected ? 1 : 0) << "\n";
  }
}

namespace {

const char* task_name(SimTask t) {
  switch (t) {
    case SimTask::Estimate: return "estimate";
    case SimTask::Covariates: return "covariates";
    case SimTask::Select: return "select";
    case SimTask::Gof: return "gof";
    case SimTask::Endogenous: return "endogenous";
  }
  return "?";
}

void metric_rows(std::ostream& out, const std::string& prefix, const VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out << prefix << "," << i + 1 << "," << v(i) << "\n";
}

}  // namespace

void write_sim_report_csv(const std::string& path, const SimConfig& cfg, const SimReport& report) {
  auto out = open_out(path);
  out << "metric,param,value\n";
  metric_rows(out, "bias", report.bias);
  metric_rows(out, "se", report.se);
  metric_rows(out, "se_star", report.se_star);
  metric_rows(out, "naive_bias", report.naive_bias);
  metric_rows(out, "naive_se", report.naive_se);
  metric_rows(out, "naive_se_star", report.naive_se_star);
  if (cfg.task == SimTask::Select) {
    out << "avg_size,," << report.avg_size << "\n";
    out << "correct_fit,," << report.correct_fit << "\n";
    out << "tpr,," << report.tpr << "\n";
    out << "fpr,," << report.fpr << "\n";
  }
  if (cfg.task == SimTask::Gof) out << "rejection_rate,," << report.rejection_rate << "\n";
  out << "replications_done,," << report.replications_done << "\n";
  out << "failures,," << report.failures << "\n";
}

void write_sim_report_json(const std::string& path, const SimConfig& cfg, const SimReport& report,
                           const RunManifest& manifest) {
  json j;
  j["task"] = task_name(cfg.task);
  j["n"] = cfg.n;
  j["T"] = cfg.T;
  j["d"] = cfg.d;
  j["replications"] = cfg.replications;
  j["base_seed"] = cfg.base_seed;
  j["kappa"] = cfg.kappa;
  j["bias"] = vec_json(report.bias);
  j["se"] = vec_json(report.se);
  j["se_star"] = vec_json(report.se_star);
  j["naive_bias"] = vec_json(report.naive_bias);
  j["naive_se"] = vec_json(report.naive_se);
  j["naive_se_star"] = vec_json(report.naive_se_star);
  j["avg_size"] = report.avg_size;
  j["correct_fit"] = report.correct_fit;
  j["tpr"] = report.tpr;
  j["fpr"] = report.fpr;
  j["rejection_rate"] = report.rejection_rate;
  j["replications_done"] = report.replications_done;
  j["failures"] = report.failures;
  j["manifest"] = manifest_json(manifest);
  open_out(path) << j.dump(2) << "\n";
}

}  // namespace mir
