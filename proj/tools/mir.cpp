#include "mir/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

namespace {

constexpr const char* kVersion = "mir 1.0.0";

// Exit codes: 0 success, 1 internal, 2 input, 3 non-convergence, 4 regime.
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitNoConverge = 3;
constexpr int kExitRegime = 4;

struct CommonInputs {
  std::string y_path;
  std::string weights_dir;
  std::string attributes_path;
  int d = 0;
  double density = 0.1;
  std::vector<int> discrete;
};

struct Loaded {
  mir::MirData data;
  mir::MatrixStack Z;  // attribute matrices when built from attributes.csv
  std::map<std::string, std::string> digests;
};

Loaded load_inputs(const CommonInputs& in) {
  Loaded out;
  out.data.Y = mir::read_y_csv(in.y_path);
  out.digests[in.y_path] = mir::file_digest(in.y_path);
  const int T = static_cast<int>(out.data.Y.size());
  const int n = static_cast<int>(out.data.Y[0].size());

  if (!in.attributes_path.empty()) {
    mir::AttributePanel panel = mir::read_attributes_csv(in.attributes_path, in.discrete);
    out.digests[in.attributes_path] = mir::file_digest(in.attributes_path);
    if (panel.T() != T || panel.n() != n)
      throw mir::InputError("attributes dimensions (n=" + std::to_string(panel.n()) + ", T=" +
                            std::to_string(panel.T()) + ") do not match Y (n=" + std::to_string(n) +
                            ", T=" + std::to_string(T) + ")");
    out.data.weights = mir::build_weight_set(panel, in.density);
    out.Z.assign(T, mir::MatrixXd(n, panel.d()));
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < panel.d(); ++k) out.Z[t].col(k) = panel.values[k][t];
  } else if (!in.weights_dir.empty()) {
    if (in.d < 1) throw mir::InputError("--d is required with --weights");
    out.data.weights = mir::read_weights_dir(in.weights_dir, in.d, T);
    for (int k = 1; k <= in.d; ++k)
      for (int t = 1; t <= T; ++t) {
        std::string p = in.weights_dir + "/W" + std::to_string(k) + "_" + std::to_string(t) + ".csv";
        out.digests[p] = mir::file_digest(p);
      }
  } else {
    throw mir::InputError("either --weights or --attributes is required");
  }
  if (out.data.weights.n != n)
    throw mir::InputError("weight matrices are " + std::to_string(out.data.weights.n) + "x" +
                          std::to_string(out.data.weights.n) + " but Y has n=" + std::to_string(n) + " columns");
  out.data.validate();
  return out;
}

void add_common(CLI::App* cmd, CommonInputs& in) {
  cmd->add_option("--y", in.y_path, "response panel CSV (one row per period)")->required();
  cmd->add_option("--weights", in.weights_dir, "directory of W<k>_<t>.csv matrices");
  cmd->add_option("--d", in.d, "number of weight matrices (with --weights)");
  cmd->add_option("--attributes", in.attributes_path, "long-format attribute CSV (k,t,i,value)");
  cmd->add_option("--density", in.density, "target weight density (with --attributes)");
  cmd->add_option("--discrete", in.discrete, "1-based attribute indices treated as discrete");
}

mir::RunManifest make_manifest(const std::string& subcommand, const std::string& config,
                               const std::map<std::string, std::string>& digests, std::uint64_t seed,
                               double seconds) {
  mir::RunManifest m;
  m.subcommand = subcommand;
  m.config = config;
  m.input_digests = digests;
  m.seed = seed;
  m.version = kVersion;
  m.seconds = seconds;
  return m;
}

mir::SimConfig parse_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mir::InputError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw mir::InputError(path + ": invalid JSON: " + e.what());
  }
  mir::SimConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
  };
  get("n", cfg.n);
  get("T", cfg.T);
  get("d", cfg.d);
  get("replications", cfg.replications);
  get("rho", cfg.rho);
  get("kappa", cfg.kappa);
  get("density", cfg.density);
  get("p", cfg.p);
  get("gamma", cfg.gamma);
  get("alpha", cfg.alpha);
  get("base_seed", cfg.base_seed);
  get("threads", cfg.threads);
  get("subset_size_true", cfg.subset_size_true);
  if (j.contains("lambda_true")) {
    auto v = j.at("lambda_true").get<std::vector<double>>();
    cfg.lambda_true = Eigen::Map<mir::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (j.contains("beta_true")) {
    auto v = j.at("beta_true").get<std::vector<double>>();
    cfg.beta_true = Eigen::Map<mir::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (j.contains("errors")) {
    std::string e = j.at("errors").get<std::string>();
    if (e == "normal") cfg.error_dist = mir::ErrorDist::Normal;
    else if (e == "mixture") cfg.error_dist = mir::ErrorDist::Mixture;
    else if (e == "exponential") cfg.error_dist = mir::ErrorDist::StdExponential;
    else throw mir::InputError("config: unknown errors '" + e + "'");
  }
  if (j.contains("task")) {
    std::string t = j.at("task").get<std::string>();
    if (t == "estimate") cfg.task = mir::SimTask::Estimate;
    else if (t == "select") cfg.task = mir::SimTask::Select;
    else if (t == "gof") cfg.task = mir::SimTask::Gof;
    else if (t == "endogenous") cfg.task = mir::SimTask::Endogenous;
    else if (t == "covariates") cfg.task = mir::SimTask::Covariates;
    else throw mir::InputError("config: unknown task '" + t + "'");
  }
  if (j.contains("feasibility")) {
    std::string f = j.at("feasibility").get<std::string>();
    if (f == "l1") cfg.feasibility = mir::FeasibilityMode::L1Ball;
    else if (f == "spectral") cfg.feasibility = mir::FeasibilityMode::Spectral;
    else throw mir::InputError("config: unknown feasibility '" + f + "'");
  }
  return cfg;
}

std::string describe_sim(const mir::SimConfig& cfg) {
  std::ostringstream os;
  os << "n=" << cfg.n << " T=" << cfg.T << " d=" << cfg.d << " reps=" << cfg.replications
     << " seed=" << cfg.base_seed << " threads=" << cfg.threads << " kappa=" << cfg.kappa;
  return os.str();
}

int default_threads() {
  if (const char* env = std::getenv("MIR_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mutual influence regression: estimation, selection, adequacy testing, simulation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::uint64_t seed = 20240501ULL;
  int threads = default_threads();
  app.add_option("--seed", seed, "base random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads")->capture_default_str();

  CommonInputs fit_in, sel_in, test_in;
  std::string out_dir = ".";
  std::string model = "base";
  std::string x_path;
  bool spectral = false;

  auto* fit_cmd = app.add_subcommand("fit", "estimate the model by QMLE");
  fit_cmd->fallthrough();  // global options (--seed, --threads) may follow the subcommand
  add_common(fit_cmd, fit_in);
  fit_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  fit_cmd->add_option("--model", model, "base|covariates|interactions|fe|fe2|endogenous")->capture_default_str();
  fit_cmd->add_option("--x", x_path, "covariate CSV (j,t,i,value), for covariates/interactions/fe/fe2");
  fit_cmd->add_flag("--spectral", spectral, "feasibility by nonsingularity instead of the l1 ball");

  double gamma = 2.0;
  int qmax = -1;
  auto* sel_cmd = app.add_subcommand("select", "exhaustive EBIC weight-matrix selection");
  sel_cmd->fallthrough();
  add_common(sel_cmd, sel_in);
  sel_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  sel_cmd->add_option("--gamma", gamma, "EBIC penalty weight")->capture_default_str();
  sel_cmd->add_option("--qmax", qmax, "largest subset size (default min(d,6))");

  double alpha = 0.05;
  bool lambda_only = false;
  auto* test_cmd = app.add_subcommand("test", "influence-matrix adequacy test");
  test_cmd->fallthrough();
  add_common(test_cmd, test_in);
  test_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
  test_cmd->add_option("--alpha", alpha, "significance level")->capture_default_str();
  test_cmd->add_flag("--lambda-only", lambda_only, "variance correction over lambda indices only");

  std::string config_path;
  int table = 0;
  std::string cell;
  int reps = -1;
  std::string errors_name;
  double kappa = 0.0;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study");
  sim_cmd->fallthrough();
  sim_cmd->add_option("--config", config_path, "JSON study configuration");
  sim_cmd->add_option("--table", table, "preset: 1 estimation, 2 selection, 3 test, 4 endogeneity");
  sim_cmd->add_option("--cell", cell, "comma-separated overrides, e.g. n=25,T=25,d=2");
  sim_cmd->add_option("--reps", reps, "replication count override");
  sim_cmd->add_option("--errors", errors_name, "normal|mixture|exponential");
  sim_cmd->add_option("--kappa", kappa, "departure strength for --table 3")->capture_default_str();
  sim_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  try {
    std::filesystem::create_directories(out_dir);

    if (fit_cmd->parsed()) {
      Loaded loaded = load_inputs(fit_in);
      mir::FitOptions opts;
      if (spectral) opts.feasibility = mir::FeasibilityMode::Spectral;

      mir::MatrixStack X;
      if (!x_path.empty()) {
        X = mir::read_covariates_csv(x_path);
        loaded.digests[x_path] = mir::file_digest(x_path);
        if (static_cast<int>(X.size()) != loaded.data.T() || X[0].rows() != loaded.data.n())
          throw mir::InputError("covariate dimensions do not match Y");
      }

      mir::FitResult fit;
      if (model == "base") {
        fit = mir::fit_qmle(loaded.data, opts);
      } else if (model == "covariates") {
        if (X.empty()) throw mir::InputError("--model covariates requires --x");
        fit = mir::fit_covariates(loaded.data, X, opts);
      } else if (model == "interactions") {
        if (X.empty()) throw mir::InputError("--model interactions requires --x");
        fit = mir::fit_interactions(loaded.data, X, opts).fit;
      } else if (model == "fe") {
        fit = mir::fit_individual_effects(loaded.data, X.empty() ? nullptr : &X, opts);
      } else if (model == "fe2") {
        fit = mir::fit_time_effects(loaded.data, X.empty() ? nullptr : &X, opts);
      } else if (model == "endogenous") {
        if (loaded.Z.empty()) throw mir::InputError("--model endogenous requires --attributes");
        fit = mir::fit_endogenous(loaded.data, loaded.Z, opts).fit;
      } else {
        throw mir::InputError("unknown --model '" + model + "'");
      }

      auto manifest = make_manifest("fit", "model=" + model + (spectral ? " feasibility=spectral" : ""),
                                    loaded.digests, seed, elapsed());
      mir::write_estimates_json(out_dir + "/estimates.json", fit, manifest);
      mir::write_y_csv(out_dir + "/residuals.csv", fit.residuals);
      if (!fit.converged) {
        std::cerr << "warning: optimizer did not converge (projected gradient " << fit.pg_norm << ")\n";
        return kExitNoConverge;
      }
      return 0;
    }

    if (sel_cmd->parsed()) {
      Loaded loaded = load_inputs(sel_in);
      mir::SelectOptions opts;
      opts.gamma = gamma;
      opts.q_max = qmax;
      mir::SelectionResult sel = mir::select_subsets(loaded.data, opts);
      mir::write_selection_csv(out_dir + "/selection.csv", sel);
      std::ostringstream cfg;
      cfg << "gamma=" << gamma << " qmax=" << qmax;
      auto manifest = make_manifest("select", cfg.str(), loaded.digests, seed, elapsed());
      mir::write_estimates_json(out_dir + "/estimates.json", sel.fit, manifest);
      std::cout << "selected:";
      for (int k : sel.selected) std::cout << " " << k + 1;
      if (sel.selected.empty()) std::cout << " (none)";
      std::cout << "\n";
      return 0;
    }

    if (test_cmd->parsed()) {
      Loaded loaded = load_inputs(test_in);
      if (loaded.data.T() < 3) {
        std::cerr << "error: the adequacy test requires T >= 3 (got T=" << loaded.data.T() << ")\n";
        return kExitRegime;
      }
      mir::FitResult fit = mir::fit_qmle(loaded.data);
      if (!fit.converged) return kExitNoConverge;
      mir::GofOptions gopts;
      gopts.lambda_only = lambda_only;
      mir::GofResult gof = mir::influence_test(loaded.data, fit, gopts);
      std::ostringstream cfg;
      cfg << "alpha=" << alpha << " lambda_only=" << (lambda_only ? 1 : 0);
      auto manifest = make_manifest("test", cfg.str(), loaded.digests, seed, elapsed());
      mir::write_gof_json(out_dir + "/gof.json", gof, alpha, manifest);
      if (gof.regime_warning)
        std::cerr << "warning: n/T = " << gof.ratio << " is outside [0.25, 4]; the normal calibration may be unreliable\n";
      std::cout << (gof.p_value < alpha ? "reject" : "fail to reject")
                << " the model adequacy null (p=" << gof.p_value << ")\n";
      return 0;
    }

    // simulate
    mir::SimConfig cfg;
    std::map<std::string, std::string> digests;
    if (!config_path.empty()) {
      cfg = parse_sim_config(config_path);
      digests[config_path] = mir::file_digest(config_path);
    }
    switch (table) {
      case 0: break;
      case 1: cfg.task = mir::SimTask::Estimate; cfg.d = 2; break;
      case 2: cfg.task = mir::SimTask::Select; cfg.d = 8; cfg.subset_size_true = 3; break;
      case 3: cfg.task = mir::SimTask::Gof; cfg.d = 2; cfg.kappa = kappa; break;
      case 4: cfg.task = mir::SimTask::Endogenous; cfg.d = 6; cfg.rho = 0.5; break;
      default: throw mir::InputError("--table must be 1..4");
    }
    if (!cell.empty()) {
      std::stringstream ss(cell);
      std::string kv;
      while (std::getline(ss, kv, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw mir::InputError("--cell entries must look like key=value");
        std::string key = kv.substr(0, eq);
        int val = std::stoi(kv.substr(eq + 1));
        if (key == "n") cfg.n = val;
        else if (key == "T") cfg.T = val;
        else if (key == "d") cfg.d = val;
        else throw mir::InputError("--cell: unknown key '" + key + "'");
      }
    }
    if (reps > 0) cfg.replications = reps;
    if (!errors_name.empty()) {
      if (errors_name == "normal") cfg.error_dist = mir::ErrorDist::Normal;
      else if (errors_name == "mixture") cfg.error_dist = mir::ErrorDist::Mixture;
      else if (errors_name == "exponential") cfg.error_dist = mir::ErrorDist::StdExponential;
      else throw mir::InputError("unknown --errors '" + errors_name + "'");
    }
    if (app.count("--seed")) cfg.base_seed = seed;
    cfg.threads = threads;

    mir::SimReport report = mir::run_study(cfg);
    auto manifest = make_manifest("simulate", describe_sim(cfg), digests, cfg.base_seed, elapsed());
    mir::write_sim_report_csv(out_dir + "/report.csv", cfg, report);
    mir::write_sim_report_json(out_dir + "/report.json", cfg, report, manifest);
    std::cout << "study complete: " << report.replications_done << " replications, "
              << report.failures << " failures, " << report.seconds << " s\n";
    return 0;
  } catch (const mir::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const mir::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
