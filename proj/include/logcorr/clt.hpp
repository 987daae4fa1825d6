#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "logcorr/ensemble.hpp"

namespace logcorr {

using RealFn = std::function<double(double)>;

struct TestFunction {
  RealFn f, df, d2f;
  double lo = -4.0, hi = 4.0;  // support
  double l1_f = 0.0, l1_df = 0.0, l1_d2f = 0.0;
  std::string tag;
  // points where f varies on the short length `scale`; quadrature grades toward them
  std::vector<double> features;
  double scale = 1.0;
  bool log_type = false;
};

// Validates derivatives against central differences and computes the L1 norms.
TestFunction make_test_function(RealFn f, RealFn df, RealFn d2f, double lo, double hi,
                                std::string tag, std::vector<double> features = {},
                                double scale = 1.0);

// c0 + c1 x + c2 x^2 + ... (support taken as [-4,4])
TestFunction polynomial(std::vector<double> coeffs);
// polynomial times the smooth cutoff equal to 1 on [-3,3] and 0 outside [-4,4]
TestFunction polynomial_with_cutoff(std::vector<double> coeffs);
// exp(-1/(1-u^2)) bump with u = (x - center)/width, normalized to f(center) = 1
TestFunction bump(double center, double width);
// product x^2 * bump(center, width)
TestFunction x2_bump(double center, double width);

enum class LogPart { real, imag };
// log((x-E) + i n^{-gamma}) times the [-3,3]/[-4,4] cutoff, one part of it
TestFunction log_test_function(double E, double gamma, std::size_t n, LogPart part);

struct QuadOptions {
  std::size_t per_panel = 16;
  std::size_t max_doublings = 5;
  double rel_tol = 1e-6;
};

struct VarianceBreakdown {
  double main = 0.0;
  double trace_s_term = 0.0;
  double quartic_term = 0.0;
  double epsilon_band = 0.0;
  std::pair<double, double> total_with_band{0.0, 0.0};
  bool beta_halved = false;
  double total() const { return main + trace_s_term + quartic_term; }
};

VarianceBreakdown variance_gw(const TestFunction& f, const VarianceProfile& S, EntryLaw law,
                              int beta = 1, const QuadOptions& q = {});
// asymmetric main term on its own
double variance_main(const TestFunction& f, const QuadOptions& q = {});
double variance_main_symmetric(const TestFunction& f, const QuadOptions& q = {});
// (1/2) sum_k k c_k^2 with f(2 cos t) = c_0/2 + sum_k c_k cos(k t)
double variance_main_chebyshev(const TestFunction& f, std::size_t terms = 64);

struct HsMesh {
  double a = 0.8;
  double n_eff = 0.0;  // 0 means use the profile dimension
  double y_min = 0.0;  // 0 means n_eff^{-1+a}
  std::size_t x_panels = 16;
  std::size_t x_per_panel = 6;
  std::size_t y_nodes = 24;
  bool check_refinement = true;
};

double variance_wigner_type(const TestFunction& f, const VarianceProfile& S, EntryLaw law,
                            const HsMesh& mesh = {});

struct ExpectationTerms {
  double leading = 0.0;
  double boundary = 0.0;
  double s_ii_term = 0.0;
  double quartic_term = 0.0;
  bool order_one_ambiguous = true;
  double total() const { return leading + boundary + s_ii_term + quartic_term; }
};

ExpectationTerms expectation_terms(const TestFunction& f, const VarianceProfile& S, EntryLaw law);

double delta_shift(double E, std::size_t n, int beta);

struct CovarianceExponents {
  Eigen::MatrixXd a, b, c;
  std::vector<double> energies;
  std::vector<std::size_t> indices;
  std::size_t n = 0;
  int beta = 1;
};

CovarianceExponents covariance_exponents(const std::vector<double>& energies, std::size_t n,
                                         int beta,
                                         const std::vector<std::size_t>& indices = {});

std::vector<double> char_curve(double V, const std::vector<double>& lambdas);

// pieces of the error band, exposed for diagnostics
struct BandParts {
  double trace_a = 0.0;     // sum_i A_ii
  double frob2 = 0.0;       // ||A||_F^2
  double op_norm = 0.0;     // ||A||_2
  double i_a = 0.0;         // |I_A(f)|
  double j_f = 0.0;         // iint |(f(x)-f(y)) f'(y)| / sqrt|4-x^2|
};
BandParts epsilon_band_parts(const TestFunction& f, const VarianceProfile& S,
                             const QuadOptions& q = {});

}  // namespace logcorr
