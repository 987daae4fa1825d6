#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <algorithm>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "logcorr/ensemble.hpp"
#include "logcorr/spectral.hpp"

using namespace logcorr;
using std::numbers::pi;

namespace {

Spectrum from(std::vector<double> l) {
  Spectrum s;
  s.n = l.size();
  s.lambdas = std::move(l);
  return s;
}

MatrixSample goe(std::size_t n, std::uint64_t seed) {
  return sample_matrix(make_profile(ProfileKind::goe, n), {}, SymmetryClass::real, seed);
}

}  // namespace

TEST_CASE("eigenvalues of small inputs") {
  MatrixSample one;
  one.n = 1;
  one.re = Eigen::MatrixXd::Constant(1, 1, 0.37);
  CHECK(eigenvalues(one).lambdas == std::vector<double>{0.37});

  MatrixSample d;
  d.n = 3;
  d.re = Eigen::Vector3d(3, -1, 2).asDiagonal();
  const Spectrum s = eigenvalues(d);
  CHECK(s.lambdas[0] == doctest::Approx(-1));
  CHECK(s.lambdas[1] == doctest::Approx(2));
  CHECK(s.lambdas[2] == doctest::Approx(3));
}

TEST_CASE("eigenvalue sum equals the trace") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const MatrixSample h = goe(100, seed);
    const Spectrum s = eigenvalues(h);
    double sum = 0;
    for (double l : s.lambdas) sum += l;
    CHECK(std::abs(sum - h.trace()) < 1e-8 * 100);
    CHECK(std::is_sorted(s.lambdas.begin(), s.lambdas.end()));
  }
  const MatrixSample g = sample_matrix(make_profile(ProfileKind::gue, 50), {}, SymmetryClass::complex, 4);
  const Spectrum s = eigenvalues(g);
  double sum = 0;
  for (double l : s.lambdas) sum += l;
  CHECK(std::abs(sum - g.trace()) < 1e-8 * 50);
}

TEST_CASE("semicircle density and Stieltjes transform") {
  CHECK(rho(0.0) == doctest::Approx(1 / pi).epsilon(1e-15));
  CHECK(rho(2.0) == 0.0);
  CHECK(rho(-2.0) == 0.0);
  const cplx m = m_sc(cplx(0, 1));
  CHECK(std::abs(m - cplx(0, (std::sqrt(5.0) - 1) / 2)) < 1e-14);
  CHECK_THROWS(m_sc(cplx(0.5, 0.0)));
  CHECK(std::abs(m_sc(cplx(3.0, 0.0)) - cplx((-3 + std::sqrt(5.0)) / 2, 0)) < 1e-14);
}

TEST_CASE("m_sc solves its quadratic on a grid") {
  double worst = 0;
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 25; ++j) {
      const cplx z(-4 + 8.0 * i / 39, std::pow(10.0, -6 + 7.0 * j / 24));
      const cplx m = m_sc(z);
      REQUIRE(m.imag() > 0);
      worst = std::max(worst, std::abs(m * m + z * m + 1.0));
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("quantiles") {
  CHECK(std::abs(quantile(500, 1000)) < 1e-12);
  CHECK(quantile(1000, 1000) == 2.0);
  double worst = 0;
  for (std::size_t k = 1; k <= 1000; ++k)
    worst = std::max(worst, std::abs(semicircle_cdf(quantile(k, 1000)) - k / 1000.0));
  CHECK(worst <= 1e-10);
  CHECK_THROWS(quantile(0, 10));
  CHECK_THROWS(quantile(11, 10));
}

TEST_CASE("scale parameters") {
  CHECK(scale_params(1.5, 10).kappa == doctest::Approx(0.5));
  CHECK(scale_params(0.0, 100).ell == doctest::Approx(7.0710678118654752e-3).epsilon(1e-14));
  CHECK(scale_params(2.0, 1000).ell == doctest::Approx(std::pow(1000.0, -2.0 / 3)));
  CHECK(kappa(-1.0) == 1.0);
}

TEST_CASE("empirical Stieltjes transform") {
  const Spectrum zero = from({0.0});
  CHECK(std::abs(stieltjes(zero, cplx(0, 1)) - cplx(0, 1)) < 1e-15);
  const Spectrum s = eigenvalues(goe(40, 9));
  const cplx z(0.3, 0.2);
  CHECK(std::abs(stieltjes(s, std::conj(z)) - std::conj(stieltjes(s, z))) < 1e-14);
  CHECK_THROWS(stieltjes(s, cplx(s.lambdas[3], 0.0)));
}

TEST_CASE("local law scale for the Stieltjes transform") {
  const std::size_t n = 1024;
  const cplx z(0.0, 0.1);
  for (int r = 0; r < 50; ++r) {
    const Spectrum s = eigenvalues(sample_gaussian_tridiagonal(n, 1, r));
    CHECK(std::abs(stieltjes(s, z) - m_sc(z)) <= 5.0 / (n * 0.1));
  }
}

TEST_CASE("log potential") {
  // quadrature oracle: U(x) = int log|x - y| rho(y) dy on the real axis
  boost::math::quadrature::tanh_sinh<double> ts;
  auto U_quad = [&](double x) {
    auto g = [&](double y) { return std::log(std::abs(x - y)) * rho(y); };
    if (x >= 2.0) return ts.integrate(g, -2.0, 2.0);
    return ts.integrate(g, -2.0, x) + ts.integrate(g, x, 2.0);
  };
  CHECK(std::abs(log_potential(cplx(2.0, 0.0)) - cplx(0.5, 0.0)) < 1e-12);
  CHECK(std::abs(U_quad(2.0) - 0.5) < 1e-8);
  CHECK(std::abs(log_potential(cplx(2.5, 0.0)).real() - U_quad(2.5)) < 1e-8);
  CHECK(std::abs(log_potential(cplx(0.7, 0.0)).real() - U_quad(0.7)) < 1e-8);
  // Im U(x + i0) = pi (1 - F(x))
  CHECK(std::abs(log_potential(cplx(0.7, 0.0)).imag() - pi * (1 - semicircle_cdf(0.7))) < 1e-12);
  CHECK(std::abs(log_potential(cplx(1e6, 0)) - std::log(cplx(1e6, 0))) < 1e-6);
  const cplx z(1, 1);
  const double h = 1e-5;
  const cplx d = (log_potential(z + h) - log_potential(z - h)) / (2 * h);
  CHECK(std::abs(d + m_sc(z)) < 1e-7);
  CHECK_THROWS(log_potential(cplx(-3.0, 0.0)));
  // conjugation
  CHECK(std::abs(log_potential(std::conj(cplx(0.3, 0.4))) - std::conj(log_potential(cplx(0.3, 0.4)))) < 1e-14);
}

TEST_CASE("log characteristic polynomial") {
  const Spectrum s = eigenvalues(goe(60, 3));
  // all eigenvalues below E >= 2: real
  const double top = std::max(2.0, s.lambdas.back() + 0.1);
  CHECK(log_char_poly(s, cplx(top, 0)).imag() == doctest::Approx(0.0));
  // counting
  for (std::size_t k = 1; k + 1 < s.n; k += 7) {
    const double E = 0.5 * (s.lambdas[k] + s.lambdas[k + 1]);
    const cplx L = log_char_poly(s, cplx(E, 0));
    const double count = (L.imag() + s.n * log_potential(cplx(E, 0)).imag()) / pi;
    CHECK(std::abs(count - static_cast<double>(s.n - k - 1)) < 1e-9);
  }
  // conjugation symmetry
  const cplx z(0.2, 0.05);
  CHECK(std::abs(log_char_poly(s, std::conj(z)) - std::conj(log_char_poly(s, z))) < 1e-10);
  CHECK_THROWS(log_char_poly(s, cplx(s.lambdas[5], 0)));
  // quantile spectrum is close to its own centering
  for (std::size_t n : {100, 1000}) {
    const Spectrum q = from(quantiles(n));
    CHECK(std::abs(log_char_poly(q, cplx(0, 1))) <= 2.0);
  }
}

TEST_CASE("imaginary part drops by pi across each eigenvalue") {
  const Spectrum s = from({-1.0, -0.2, 0.4, 1.1});
  double prev = log_char_poly(s, cplx(-1.5, 0)).imag() + 4 * log_potential(cplx(-1.5, 0)).imag();
  for (double E : {-0.6, 0.1, 0.8, 1.5}) {
    const double cur = log_char_poly(s, cplx(E, 0)).imag() + 4 * log_potential(cplx(E, 0)).imag();
    CHECK(std::abs(prev - cur - pi) < 1e-12);
    prev = cur;
  }
}

TEST_CASE("tridiagonal log determinant agrees with the spectrum") {
  for (int beta : {1, 2}) {
    const TridiagonalSample t = sample_gaussian_tridiagonal(300, beta, 17);
    const Spectrum s = eigenvalues(t);
    for (cplx z : {cplx(0.1, 0.01), cplx(-1.3, 1e-4), cplx(2.0, 0.0), cplx(0.37, 0.0), cplx(2.5, 0.0)}) {
      CHECK(std::abs(log_char_poly(t, z) - log_char_poly(s, z)) < 1e-8);
    }
    for (double E : {-1.0, 0.0, 0.5, 1.9}) {
      const std::size_t above = std::count_if(s.lambdas.begin(), s.lambdas.end(), [&](double l) { return l > E; });
      CHECK(count_above(t, E) == above);
    }
  }
}

TEST_CASE("characteristics") {
  const cplx z(0.5, 0.1);
  CHECK(std::abs(characteristic(z, 0.0) - z) < 1e-15);
  const double h = 1e-6;
  const cplx d = (characteristic(z, h) - characteristic(z, 0.0)) / h;
  const cplx d2 = (characteristic(z, 2 * h) - characteristic(z, 0.0)) / (2 * h);
  CHECK(std::abs((2.0 * d - d2) - (m_sc(z) + z / 2.0)) < 1e-6);
  CHECK(std::abs(sqrt_z2m4(z) / 2.0 - (m_sc(z) + z / 2.0)) < 1e-14);

  const cplx w(1.9, 0.01);
  double worst = 0;
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    worst = std::max(worst, std::abs(characteristic(w, t) - characteristic(w, t, CharMode::ode)));
  }
  CHECK(worst <= 1e-8);
  // semigroup
  CHECK(std::abs(characteristic(characteristic(w, 0.3), 0.4) - characteristic(w, 0.7)) < 1e-8);
  CHECK_THROWS(characteristic(cplx(0.2, 0.0), 0.1));
  CHECK_THROWS(characteristic(cplx(0.2, -0.1), 0.1));
}

TEST_CASE("normalized fluctuations") {
  Spectrum q = from(quantiles(100));
  CHECK(normalized_fluct(q, 37, 1) == 0.0);
  q.lambdas[49] += 1e-3;
  CHECK(normalized_fluct(q, 50, 1) == doctest::Approx(100 * 1e-3 / std::sqrt(std::log(100.0))).epsilon(1e-9));
  CHECK(normalized_fluct(q, 50, 1) == doctest::Approx(0.046607).epsilon(1e-4));
  CHECK_THROWS(normalized_fluct(q, 100, 1));
  CHECK_THROWS(normalized_fluct(q, 0, 1));
}

TEST_CASE("Ward identity") {
  MatrixSample d;
  d.n = 2;
  d.re = Eigen::Vector2d(1, -1).asDiagonal();
  const Eigen::MatrixXcd G = resolvent(d, cplx(0, 1));
  CHECK(std::norm(G(0, 0)) + std::norm(G(0, 1)) == doctest::Approx(0.5));
  CHECK(G(0, 0).imag() == doctest::Approx(0.5));
  CHECK(ward_residual(d, cplx(0, 1)) < 1e-14);

  MatrixSample id;
  id.n = 3;
  id.re = Eigen::MatrixXd::Identity(3, 3);
  CHECK(ward_residual(id, cplx(0, 2)) <= 1e-12);
  CHECK(ward_residual(goe(64, 5), cplx(0.3, 0.05)) <= 1e-9);
  CHECK_THROWS(ward_residual(id, cplx(0.3, 0.0)));
}

TEST_CASE("spectrum export") {
  const Spectrum s = from({-1.0, 0.5});
  CHECK(to_csv(s) == "lambda\n-1\n0.5\n");
  CHECK(to_json(s).at("lambdas").size() == 2);
}
