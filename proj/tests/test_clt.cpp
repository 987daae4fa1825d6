#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "logcorr/clt.hpp"
#include "logcorr/ensemble.hpp"
#include "logcorr/rng.hpp"
#include "logcorr/spectral.hpp"
#include "logcorr/stats.hpp"

using namespace logcorr;
using std::numbers::pi;

namespace {

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("variance main term on simple functions") {
  const VarianceProfile u = make_profile(ProfileKind::uniform, 16);
  const VarianceBreakdown one = variance_gw(polynomial({1.0}), u, {});
  CHECK(std::abs(one.main) < 1e-12);
  CHECK(std::abs(one.trace_s_term) < 1e-12);
  CHECK(std::abs(one.quartic_term) < 1e-12);

  for (const VarianceProfile& S : {u, make_profile(ProfileKind::goe, 10), make_two_block(12, 1.5, 0.5)}) {
    const VarianceBreakdown lin = variance_gw(polynomial({0.0, 1.0}), S, {});
    CHECK(lin.main == doctest::Approx(2.0).epsilon(1e-9));
  }
  CHECK(variance_gw(polynomial({0.0, 0.0, 1.0}), u, {}).main == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(variance_main_symmetric(polynomial({0.0, 1.0})) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(variance_main_symmetric(polynomial({3.0}))) < 1e-12);

  // f = x with uniform S: main 2 and trace term -1 add up to Var Tr H = 1
  const VarianceBreakdown lin = variance_gw(polynomial({0.0, 1.0}), u, {});
  CHECK(lin.trace_s_term == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(lin.total() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lin.epsilon_band >= 0);
}

TEST_CASE("main term quadratures agree on random polynomials") {
  CounterStream g(derive(11, hash_tag("poly")));
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> c(7);
    for (double& x : c) x = g.normal();
    const TestFunction f = polynomial(c);
    const double a = variance_main(f), s = variance_main_symmetric(f), ch = variance_main_chebyshev(f);
    CHECK(a >= 0);
    CHECK(close_rel(a, s, 1e-6));
    CHECK(close_rel(a, ch, 1e-6));
  }
  // cos(k theta) basis: main = k/2 per unit coefficient
  const TestFunction t3 = polynomial({0.0, -3.0, 0.0, 1.0});  // 2 cos 3t = x^3 - 3x
  CHECK(variance_main_chebyshev(t3) == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("quartic terms against exact moments") {
  const VarianceProfile u = make_profile(ProfileKind::uniform, 20);
  // Var Tr H^2 = 4 + 2 k4 exactly; the stored coefficient is twice that of the k4 part
  const VarianceBreakdown g = variance_gw(polynomial({0.0, 0.0, 1.0}), u, {LawKind::gaussian});
  const VarianceBreakdown r = variance_gw(polynomial({0.0, 0.0, 1.0}), u, {LawKind::rademacher});
  CHECK(std::abs(g.quartic_term) < 1e-12);
  CHECK(r.quartic_term == doctest::Approx(-8.0).epsilon(1e-9));
  CHECK(r.main + r.trace_s_term + r.quartic_term / 2 == doctest::Approx(0.0).epsilon(1e-9));

  // E Tr H^4 shift between Rademacher and Gaussian is k4 sum s^2 / n^2 = -2
  const ExpectationTerms eg = expectation_terms(polynomial({0.0, 0.0, 0.0, 0.0, 1.0}), u, {LawKind::gaussian});
  const ExpectationTerms er = expectation_terms(polynomial({0.0, 0.0, 0.0, 0.0, 1.0}), u, {LawKind::rademacher});
  CHECK(er.quartic_term - eg.quartic_term == doctest::Approx(-2.0).epsilon(1e-9));
  // Tr H^2 does not see the fourth cumulant
  CHECK(std::abs(expectation_terms(polynomial({0.0, 0.0, 1.0}), u, {LawKind::rademacher}).quartic_term) < 1e-12);
}

TEST_CASE("expectation terms") {
  const VarianceProfile u = make_profile(ProfileKind::uniform, 16);
  const ExpectationTerms one = expectation_terms(polynomial({1.0}), u, {});
  CHECK(one.leading == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(one.boundary == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(one.s_ii_term) < 1e-12);
  CHECK(std::abs(one.total()) < 1e-12);
  CHECK(one.order_one_ambiguous);

  const ExpectationTerms lin = expectation_terms(polynomial({0.0, 1.0}), u, {LawKind::rademacher});
  for (double v : {lin.leading, lin.boundary, lin.s_ii_term, lin.quartic_term}) CHECK(std::abs(v) < 1e-12);

  const ExpectationTerms sq = expectation_terms(polynomial({0.0, 0.0, 1.0}), u, {});
  CHECK(sq.leading == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sq.boundary == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("delta shift") {
  for (double E : {-2.0, -0.3, 0.0, 1.99})
    for (std::size_t n : {10, 1000}) CHECK(delta_shift(E, n, 2) == 0.0);
  CHECK(delta_shift(2.0, 1000, 1) == doctest::Approx(-std::log(1000.0) / 6).epsilon(1e-12));
  CHECK(delta_shift(0.0, 1000, 1) == doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS(delta_shift(0.0, 1, 1));

  // continuous across the kappa = n^{-2/3} crossover
  const std::size_t n = 1000;
  const double E0 = 2.0 - std::pow(double(n), -2.0 / 3.0);
  CHECK(std::abs(delta_shift(std::nextafter(E0, 0.0), n, 1) - delta_shift(std::nextafter(E0, 3.0), n, 1)) < 1e-12);
}

TEST_CASE("covariance exponents") {
  const CovarianceExponents c0 = covariance_exponents({0.0, 0.0}, 1000, 1);
  CHECK(c0.a(0, 0) == doctest::Approx(1.0 + std::log(std::sqrt(2.0)) / std::log(1000.0)).epsilon(1e-12));
  CHECK(c0.a(0, 0) == doctest::Approx(1.0502).epsilon(1e-4));
  const CovarianceExponents c1 = covariance_exponents({0.0, 0.5}, 1000, 1);
  CHECK(c1.a(0, 1) == doctest::Approx(0.10034).epsilon(1e-4));
  const CovarianceExponents edge = covariance_exponents({2.0}, 1000, 1);
  CHECK(edge.b(0, 0) == 0.0);
  CHECK_THROWS(covariance_exponents({2.5}, 100, 1));

  const std::vector<double> ladder{0.0, 0.01, 0.05, 0.2, 0.8};
  const CovarianceExponents L = covariance_exponents(ladder, 4096, 1, {1000, 1500, 2000, 2048, 3000});
  CHECK((L.a - L.a.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((L.b - L.b.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((L.c - L.c.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(L.a.allFinite());
  CHECK(L.b.allFinite());
  for (int j = 1; j + 1 < 5; ++j) CHECK(L.a(0, j) > L.a(0, j + 1));
}

TEST_CASE("characteristic curve") {
  const std::vector<double> c = char_curve(2.0, {0.0, 1.0});
  CHECK(c[0] == 1.0);
  CHECK(c[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK_THROWS(char_curve(-0.1, {0.0}));
}

TEST_CASE("log test function") {
  CHECK_THROWS(log_test_function(0.0, 0.0, 100, LogPart::real));
  CHECK_THROWS(log_test_function(0.0, 1.0, 100, LogPart::real));
  for (std::size_t n : {100, 1000, 10000}) {
    const double gamma = 0.3;
    const TestFunction re = log_test_function(0.2, gamma, n, LogPart::real);
    CHECK(re.f(1.7) == doctest::Approx(std::log(1.5)).epsilon(1e-2));
    CHECK(re.l1_d2f <= 10.0 * std::pow(double(n), gamma));
    const VarianceBreakdown v = variance_gw(re, make_profile(ProfileKind::uniform, 64), {});
    CHECK(v.epsilon_band <= 5.0 * gamma * std::log(double(n)));
    const TestFunction im = log_test_function(0.2, gamma, n, LogPart::imag);
    CHECK(im.l1_d2f <= 10.0 * std::pow(double(n), gamma));
  }
}

TEST_CASE("Helffer-Sjostrand variance") {
  HsMesh mesh;
  mesh.y_min = 1e-3;
  const VarianceProfile u = make_profile(ProfileKind::uniform, 64);
  const TestFunction f = x2_bump(0.0, 1.5);
  const double hs = variance_wigner_type(f, u, {}, mesh);
  const double gw = variance_gw(f, u, {}).total();
  CHECK(std::abs(hs - gw) <= 5e-2 * std::abs(gw));

  CHECK(std::abs(variance_wigner_type(polynomial_with_cutoff({1.0}), u, {}, mesh)) < 1e-6);

  // Rademacher entries make Tr H^2 constant, Gaussian ones give 4 + O(1/n)
  const TestFunction sq = polynomial_with_cutoff({0.0, 0.0, 1.0});
  CHECK(variance_wigner_type(sq, u, {}, mesh) == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(std::abs(variance_wigner_type(sq, u, {LawKind::rademacher}, mesh)) < 1e-3);

  // f = x gives the diagonal sum exactly
  const TestFunction lin = polynomial_with_cutoff({0.0, 1.0});
  const VarianceProfile tb = make_two_block(64, 1.5, 0.5);
  CHECK(variance_wigner_type(lin, tb, {LawKind::rademacher}, mesh) == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("two block trace variance by sampling") {
  const std::size_t n = 256, M = 4000;
  const VarianceProfile tb = make_two_block(n, 1.5, 0.5);
  std::vector<double> tr(M);
  for (std::size_t r = 0; r < M; ++r) tr[r] = sample_matrix(tb, {}, SymmetryClass::real, derive(3, r)).trace();
  const ColumnStats s = summarize_column(tr);
  const double se = s.variance * std::sqrt(2.0 / (M - 1));
  CHECK(std::abs(s.variance - tb.trace()) <= 3 * se);
}
