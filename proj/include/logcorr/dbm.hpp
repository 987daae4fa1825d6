#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"

namespace logcorr {

using cplx = std::complex<double>;

struct DtPolicy {
  double c = 0.1;          // dt <= c * n * (min gap)^2
  double dt_max = 1e-3;
  int max_halvings = 20;
  std::size_t store_stride = 1;
  bool record_noise = false;
};

struct NoiseStep {
  double dt;
  std::vector<double> db;  // Brownian increments, one per particle
};

struct DbmPath {
  int beta = 1;
  std::size_t n = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> particles;
  // exact sum of the accepted step sizes between consecutive stored states;
  // differences of `times` lose them once steps fall near the resolution of t
  std::vector<double> durations;
  std::vector<NoiseStep> noise;
  DtPolicy policy;
  std::size_t steps = 0;  // accepted Euler steps including substeps
};

DbmPath run_dbm(std::vector<double> initial, int beta, double t_end, const DtPolicy& policy,
                std::uint64_t seed);
std::pair<DbmPath, DbmPath> run_coupled(std::vector<double> init_a, std::vector<double> init_b,
                                        int beta, double t_end, const DtPolicy& policy,
                                        std::uint64_t seed);
// Re-run the Euler scheme on a recorded noise sequence.
DbmPath replay_dbm(std::vector<double> initial, int beta, const std::vector<NoiseStep>& noise,
                   std::size_t store_stride = 1);

struct KernelState {
  std::vector<double> u;
  std::vector<double> v;
  double time = 0.0;
};

// Explicit Euler for du_k = (1/N) sum_l (u_l - u_k)/(x_k - x_l)^2 along the
// stored positions; v starts from |u0|. Keeps every keep_every-th state and the last.
std::vector<KernelState> evolve_kernel(const std::vector<double>& u0, const DbmPath& path,
                                       std::size_t keep_every = 1);

cplx observable_f(const DbmPath& path, const std::vector<KernelState>& kernel, cplx z, double t);
cplx observable_f_tilde(const DbmPath& path, const std::vector<KernelState>& kernel, cplx z,
                        double t);

double rigidity_report(const DbmPath& path);

double ubar(const std::vector<double>& a, const std::vector<double>& b, double t, std::size_t k,
            double alpha = 0.1);

nlohmann::json noise_to_json(const std::vector<NoiseStep>& noise);
std::vector<NoiseStep> noise_from_json(const nlohmann::json& j);
std::string path_to_csv(const DbmPath& p);

}  // namespace logcorr
