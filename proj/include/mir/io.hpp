#pragma once

#include "mir/extensions.hpp"
#include "mir/gof.hpp"
#include "mir/select.hpp"
#include "mir/simlab.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace mir {

// Provenance block attached to every output file.
struct RunManifest {
  std::string subcommand;
  std::string config;  // resolved flags, "key=value" lines
  std::map<std::string, std::string> input_digests;
  std::uint64_t seed = 0;
  std::string version;
  double seconds = 0.0;
};

// FNV-1a 64-bit digest of a file's bytes, as hex.
std::string file_digest(const std::string& path);

// Y.csv: wide, one row per period, n comma-separated values.
VectorStack read_y_csv(const std::string& path);
void write_y_csv(const std::string& path, const VectorStack& Y);

// Plain numeric matrix CSV.
MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const MatrixXd& M);

// attributes.csv: long format with header k,t,i,value (1-based indices).
// `discrete` lists 1-based attribute indices to treat as class labels.
AttributePanel read_attributes_csv(const std::string& path, const std::vector<int>& discrete = {});

// covariates.csv: long format with header j,t,i,value (1-based indices).
MatrixStack read_covariates_csv(const std::string& path);

// Weight matrices as one CSV per (k,t): dir/W<k>_<t>.csv, 1-based.
WeightSet read_weights_dir(const std::string& dir, int d, int T);
void write_weights_dir(const std::string& dir, const WeightSet& ws);

void write_estimates_json(const std::string& path, const FitResult& fit, const RunManifest& manifest);
void write_gof_json(const std::string& path, const GofResult& gof, double alpha, const RunManifest& manifest);
void write_selection_csv(const std::string& path, const SelectionResult& sel);
void write_sim_report_csv(const std::string& path, const SimConfig& cfg, const SimReport& report);
void write_sim_report_json(const std::string& path, const SimConfig& cfg, const SimReport& report,
                           const RunManifest& manifest);

}  // namespace mir
