#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "logcorr/ensemble.hpp"

namespace logcorr {

using cplx = std::complex<double>;

struct Spectrum {
  std::size_t n = 0;
  std::vector<double> lambdas;  // ascending
  std::string source;
  std::uint64_t seed = 0;
};

Spectrum eigenvalues(const MatrixSample& sample);
Spectrum eigenvalues(const TridiagonalSample& sample);

// semicircle density, Stieltjes transform and distribution function
double rho(double x);
// sqrt(z^2-4) on the branch analytic off [-2,2] with sqrt(z^2-4) ~ z
cplx sqrt_z2m4(cplx z);
cplx m_sc(cplx z);
double semicircle_cdf(double x);
double quantile(std::size_t k, std::size_t n);
std::vector<double> quantiles(std::size_t n);

struct ScaleParams {
  double kappa;
  double ell;
};

double kappa(double E);
ScaleParams scale_params(double E, std::size_t n);

cplx stieltjes(const Spectrum& spec, cplx z);

// U(z) = integral of log(z-x) against the semicircle
cplx log_potential(cplx z);

// sum_j log(z - lambda_j) - n U(z); on the real axis negative arguments
// take log|x| + i pi.
cplx log_char_poly(const Spectrum& spec, cplx z);
// Same quantity from the tridiagonal model without diagonalizing.
cplx log_char_poly(const TridiagonalSample& t, cplx z);
// number of eigenvalues above E (Sturm count)
std::size_t count_above(const TridiagonalSample& t, double E);

enum class CharMode { closed_form, ode };
// z_t solving d/dt z_t = m_sc(z_t) + z_t/2 with z_0 = z
cplx characteristic(cplx z, double t, CharMode mode = CharMode::closed_form);

// pi n sqrt(beta / log n) rho(gamma_k) (lambda_k - gamma_k), k one-based
double normalized_fluct(const Spectrum& spec, std::size_t k, int beta);

Eigen::MatrixXcd dense_complex(const MatrixSample& sample);
Eigen::MatrixXcd resolvent(const MatrixSample& sample, cplx z);
double ward_residual(const MatrixSample& sample, cplx z);

std::string to_csv(const Spectrum& s);
nlohmann::json to_json(const Spectrum& s);

}  // namespace logcorr
