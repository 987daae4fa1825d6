#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "logcorr/ensemble.hpp"
#include "logcorr/stats.hpp"

namespace logcorr {

// Experiment tags: logfield_clt, logfield_growth, eigenvalue_clt, wegner,
// local_law, coupling, advection, smoothing, variance_match.
std::vector<std::string> experiment_tags();

struct ExperimentConfig {
  std::string experiment;
  std::size_t n = 256;
  std::vector<std::size_t> n_ladder;  // empty means {n}
  std::size_t M = 100;
  int beta = 1;
  ProfileKind profile = ProfileKind::goe;
  LawKind law = LawKind::gaussian;
  std::vector<double> energies;
  std::vector<std::size_t> indices;
  double t = 0.1;
  double gamma = 0.3;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  // name -> {"lo": x, "hi": y}; missing names take the experiment defaults
  nlohmann::json criteria = nlohmann::json::object();
  std::size_t threads = 0;  // 0 means available parallelism
  // GOE/GUE with Gaussian entries may use the tridiagonal model
  bool tridiagonal = true;

  std::vector<std::size_t> ladder() const;
};

// Throws std::invalid_argument with a readable message.
void validate(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

struct CriterionResult {
  std::string name;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool passed = false;
};

struct RunResult {
  nlohmann::json config;
  std::string config_hash;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> raw;  // one row per replica, in replica order
  SummaryStats summary;
  nlohmann::json derived = nlohmann::json::object();  // predictions, fits, flags
  std::vector<CriterionResult> criteria;
  std::vector<std::string> warnings;
  std::size_t used = 0;
  std::size_t discarded = 0;
  double wall_seconds = 0.0;

  bool passed() const;
};

RunResult run_experiment(const ExperimentConfig& c);

RunResult run_logfield_clt(const ExperimentConfig& c);
RunResult run_logfield_growth(const ExperimentConfig& c);
RunResult run_eigenvalue_clt(const ExperimentConfig& c);
RunResult run_wegner(const ExperimentConfig& c);
RunResult run_local_law(const ExperimentConfig& c);
RunResult run_coupling(const ExperimentConfig& c);
RunResult run_advection(const ExperimentConfig& c);
RunResult run_smoothing(const ExperimentConfig& c);
RunResult run_variance_match(const ExperimentConfig& c);

std::string raw_csv(const RunResult& r);
nlohmann::json summary_json(const RunResult& r);
nlohmann::json manifest_json(const RunResult& r);
// writes manifest.json, raw.csv and summary.json under dir
void write_result(const RunResult& r, const std::string& dir);
// text table of a summary.json document
std::string render_report(const nlohmann::json& summary);

}  // namespace logcorr
