#include "logcorr/spectral.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace logcorr {

namespace {
constexpr double pi = std::numbers::pi;

std::string seed_text(const SeedRecord& s) {
  return " (seed " + std::to_string(s.seed) + ", " + s.stream + ")";
}
}  // namespace

Spectrum eigenvalues(const MatrixSample& sample) {
  const auto n = static_cast<lapack_int>(sample.n);
  Spectrum out;
  out.n = sample.n;
  out.source = sample.seed.stream;
  out.seed = sample.seed.seed;
  out.lambdas.resize(sample.n);
  if (sample.n == 0) return out;
  lapack_int info = 0;
  if (sample.is_complex()) {
    Eigen::MatrixXcd a = dense_complex(sample);
    info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', n, a.data(), n, out.lambdas.data());
  } else {
    Eigen::MatrixXd a = sample.re;
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'U', n, a.data(), n, out.lambdas.data());
  }
  if (info != 0)
    throw std::runtime_error("eigensolver failed, info=" + std::to_string(info) +
                             seed_text(sample.seed));
  return out;
}

Spectrum eigenvalues(const TridiagonalSample& t) {
  Spectrum out;
  out.n = t.n;
  out.source = t.seed.stream;
  out.seed = t.seed.seed;
  out.lambdas = t.diag;
  std::vector<double> e = t.off;
  if (t.n == 0) return out;
  const lapack_int info =
      LAPACKE_dsterf(static_cast<lapack_int>(t.n), out.lambdas.data(), e.data());
  if (info != 0)
    throw std::runtime_error("tridiagonal eigensolver failed, info=" + std::to_string(info) +
                             seed_text(t.seed));
  return out;
}

double rho(double x) {
  const double r = 4.0 - x * x;
  return r > 0.0 ? std::sqrt(r) / (2.0 * pi) : 0.0;
}

cplx sqrt_z2m4(cplx z) {
  // +0 imaginary part so the real axis is reached from above
  if (z.imag() == 0.0) z = cplx(z.real(), 0.0);
  return std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
}

cplx m_sc(cplx z) {
  if (z.imag() == 0.0 && std::abs(z.real()) < 2.0)
    throw std::domain_error("m_sc undefined on the cut (-2,2)");
  return -2.0 / (z + sqrt_z2m4(z));
}

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * pi) + std::asin(0.5 * x) / pi;
}

double quantile(std::size_t k, std::size_t n) {
  if (n == 0 || k < 1 || k > n) throw std::out_of_range("quantile index out of range");
  if (k == n) return 2.0;
  const double p = static_cast<double>(k) / static_cast<double>(n);
  double lo = -2.0, hi = 2.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (semicircle_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double d = rho(x);
    if (d <= 0.0) break;
    const double nx = x - (semicircle_cdf(x) - p) / d;
    if (nx <= lo || nx >= hi) break;
    x = nx;
  }
  // edge indices where Newton stalls on the square-root density
  if (std::abs(semicircle_cdf(x) - p) > 1e-13) {
    while (hi - lo > 4e-16) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (semicircle_cdf(mid) < p ? lo : hi) = mid;
    }
    x = 0.5 * (lo + hi);
  }
  return x;
}

std::vector<double> quantiles(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 1; k <= n; ++k) g[k - 1] = quantile(k, n);
  return g;
}

double kappa(double E) { return std::min(std::abs(E + 2.0), std::abs(E - 2.0)); }

ScaleParams scale_params(double E, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double edge = std::pow(nd, -2.0 / 3.0);
  const double k = kappa(E);
  const bool inside = E >= -2.0 + edge && E <= 2.0 - edge;
  return {k, inside ? 1.0 / (nd * std::sqrt(k)) : edge};
}

cplx stieltjes(const Spectrum& spec, cplx z) {
  cplx s = 0.0;
  for (double l : spec.lambdas) {
    if (z.imag() == 0.0 && l == z.real())
      throw std::domain_error("stieltjes evaluated at an eigenvalue");
    s += 1.0 / (l - z);
  }
  return s / static_cast<double>(spec.n);
}

cplx log_potential(cplx z) {
  if (z.imag() == 0.0) {
    if (z.real() <= -2.0) throw std::domain_error("log_potential on the branch cut");
    z = cplx(z.real(), 0.0);
  }
  const cplx w = z + sqrt_z2m4(z);
  // z^2/4 - z sqrt(z^2-4)/4 rewritten as z/w to avoid cancellation
  return z / w + std::log(w) - std::log(2.0) - 0.5;
}

cplx log_char_poly(const Spectrum& spec, cplx z) {
  const bool real_axis = z.imag() == 0.0;
  cplx acc = 0.0;
  for (double l : spec.lambdas) {
    if (real_axis) {
      const double d = z.real() - l;
      if (d == 0.0) throw std::domain_error("log_char_poly: eigenvalue at evaluation point");
      acc += cplx(std::log(std::abs(d)), d < 0.0 ? pi : 0.0);
    } else {
      acc += std::log(z - l);
    }
  }
  return acc - static_cast<double>(spec.n) * log_potential(z);
}

cplx log_char_poly(const TridiagonalSample& t, cplx z) {
  // LDL pivots of z - T; for Im z > 0 each pivot stays in the upper half
  // plane so the principal logs add up to the branch-consistent total.
  const bool real_axis = z.imag() == 0.0;
  if (real_axis) z = cplx(z.real(), 0.0);
  cplx acc = 0.0;
  cplx d = 1.0;
  for (std::size_t k = 0; k < t.n; ++k) {
    cplx nd = z - t.diag[k];
    if (k > 0) nd -= t.off[k - 1] * t.off[k - 1] / d;
    if (nd == 0.0) throw std::domain_error("log_char_poly: eigenvalue at evaluation point");
    d = nd;
    if (real_axis)
      acc += cplx(std::log(std::abs(d.real())), d.real() < 0.0 ? pi : 0.0);
    else
      acc += std::log(d);
  }
  return acc - static_cast<double>(t.n) * log_potential(z);
}

std::size_t count_above(const TridiagonalSample& t, double E) {
  std::size_t neg = 0;
  double d = 1.0;
  for (std::size_t k = 0; k < t.n; ++k) {
    double nd = E - t.diag[k];
    if (k > 0) nd -= t.off[k - 1] * t.off[k - 1] / d;
    if (nd == 0.0) nd = -1e-300;
    if (nd < 0.0) ++neg;
    d = nd;
  }
  return neg;
}

cplx characteristic(cplx z, double t, CharMode mode) {
  if (!(z.imag() > 0.0)) throw std::domain_error("characteristic needs Im z > 0");
  if (t < 0.0) throw std::domain_error("characteristic needs t >= 0");
  if (mode == CharMode::closed_form) {
    // with w = z + sqrt(z^2-4), z - sqrt(z^2-4) = 4/w
    const cplx w = std::exp(0.5 * t) * (z + sqrt_z2m4(z));
    return 0.5 * (w + 4.0 / w);
  }
  namespace odeint = boost::numeric::odeint;
  using state = std::array<double, 2>;
  state x{z.real(), z.imag()};
  auto rhs = [](const state& s, state& ds, double) {
    const cplx v = 0.5 * sqrt_z2m4(cplx(s[0], s[1]));
    ds = {v.real(), v.imag()};
  };
  if (t > 0.0)
    odeint::integrate_adaptive(
        odeint::make_controlled<odeint::runge_kutta_dopri5<state>>(1e-14, 1e-14), rhs, x,
        0.0, t, std::min(1e-3, t));
  return {x[0], x[1]};
}

double normalized_fluct(const Spectrum& spec, std::size_t k, int beta) {
  if (k < 1 || k > spec.n) throw std::out_of_range("normalized_fluct index out of range");
  const double g = quantile(k, spec.n);
  const double r = rho(g);
  if (r <= 0.0) throw std::domain_error("normalized_fluct at a zero of the density");
  const double nd = static_cast<double>(spec.n);
  return pi * nd * std::sqrt(beta / std::log(nd)) * r * (spec.lambdas[k - 1] - g);
}

Eigen::MatrixXcd dense_complex(const MatrixSample& sample) {
  Eigen::MatrixXcd a(sample.n, sample.n);
  a.real() = sample.re;
  if (sample.is_complex())
    a.imag() = sample.im;
  else
    a.imag().setZero();
  return a;
}

Eigen::MatrixXcd resolvent(const MatrixSample& sample, cplx z) {
  if (!(z.imag() != 0.0)) throw std::domain_error("resolvent needs Im z != 0");
  Eigen::MatrixXcd a = dense_complex(sample);
  a.diagonal().array() -= z;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  return lu.inverse();
}

double ward_residual(const MatrixSample& sample, cplx z) {
  if (!(z.imag() > 0.0)) throw std::domain_error("ward_residual needs Im z > 0");
  const Eigen::MatrixXcd g = resolvent(sample, z);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double lhs = g.row(i).cwiseAbs2().sum();
    worst = std::max(worst, std::abs(lhs - g(i, i).imag() / z.imag()));
  }
  return worst;
}

std::string to_csv(const Spectrum& s) {
  std::ostringstream os;
  os.precision(17);
  os << "lambda\n";
  for (double l : s.lambdas) os << l << "\n";
  return os.str();
}

nlohmann::json to_json(const Spectrum& s) {
  return {{"n", s.n}, {"source", s.source}, {"seed", s.seed}, {"lambdas", s.lambdas}};
}

}  // namespace logcorr
