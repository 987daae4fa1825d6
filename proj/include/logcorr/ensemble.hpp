#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace logcorr {

enum class ProfileKind { goe, gue, uniform, circulant, custom };
enum class LawKind { gaussian, rademacher, uniform };
enum class SymmetryClass { real, complex };

std::string to_string(ProfileKind k);
std::string to_string(LawKind k);
std::string to_string(SymmetryClass c);
ProfileKind profile_kind_from(const std::string& s);
LawKind law_kind_from(const std::string& s);

struct VarianceProfile {
  std::size_t n = 0;
  ProfileKind kind = ProfileKind::uniform;
  std::size_t bandwidth = 0;
  Eigen::MatrixXd sigma2;
  // n*sigma2 lies in [lower, upper]
  double lower = 0.0;
  double upper = 0.0;
  // every row sums to exactly 1
  bool exact_gw = false;

  double trace() const { return sigma2.diagonal().sum(); }
};

struct ProfileParams {
  std::size_t bandwidth = 1;
  Eigen::MatrixXd custom;  // entries of sigma2 for kind == custom
};

VarianceProfile make_profile(ProfileKind kind, std::size_t n,
                             const ProfileParams& params = {});

// Two equal blocks: n*sigma2 = within inside a block, between across.
VarianceProfile make_two_block(std::size_t n, double within, double between);

struct Cumulants {
  double s1, s2, s3, s4;
};

struct EntryLaw {
  LawKind kind = LawKind::gaussian;
};

Cumulants entry_cumulants(EntryLaw law);

struct SeedRecord {
  std::uint64_t seed = 0;
  std::string stream;
};

struct MatrixSample {
  std::size_t n = 0;
  SymmetryClass cls = SymmetryClass::real;
  Eigen::MatrixXd re;
  Eigen::MatrixXd im;  // empty for the real class
  SeedRecord seed;

  bool is_complex() const { return cls == SymmetryClass::complex; }
  double trace() const { return re.trace(); }
};

MatrixSample sample_matrix(const VarianceProfile& profile, EntryLaw law,
                           SymmetryClass cls, std::uint64_t seed);

// e^{-t/2} h0 + sqrt(1 - e^{-t}) U with U a fresh GOE/GUE matrix
MatrixSample ou_interpolate(const MatrixSample& h0, double t, std::uint64_t seed);

// beta-Hermite tridiagonal model with the GOE (beta=1) / GUE (beta=2)
// eigenvalue law in the normalization of make_profile(goe|gue, n).
struct TridiagonalSample {
  std::size_t n = 0;
  int beta = 1;
  std::vector<double> diag;
  std::vector<double> off;  // length n-1
  SeedRecord seed;
};

TridiagonalSample sample_gaussian_tridiagonal(std::size_t n, int beta,
                                              std::uint64_t seed);

nlohmann::json to_json(const VarianceProfile& p);
VarianceProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MatrixSample& s);
MatrixSample sample_from_json(const nlohmann::json& j);

}  // namespace logcorr
