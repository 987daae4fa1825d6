#include "logcorr/clt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "logcorr/qve.hpp"
#include "logcorr/quadrature.hpp"
#include "logcorr/spectral.hpp"

namespace logcorr {

namespace {

constexpr double pi = std::numbers::pi;

// Panel breakpoints on [a,b]: `base` uniform panels, plus geometric grading
// toward each feature down to a quarter of `scale`.
std::vector<double> graded_breaks(double a, double b, const std::vector<double>& features,
                                  double scale, std::size_t base) {
  std::set<double> br;
  for (std::size_t i = 0; i <= base; ++i) br.insert(a + (b - a) * i / base);
  const double panel = (b - a) / base;
  for (double x0 : features) {
    if (!(x0 > a && x0 < b)) continue;
    br.insert(x0);
    for (double h = 0.25 * scale; h < panel; h *= 2.0) {
      if (x0 - h > a) br.insert(x0 - h);
      if (x0 + h < b) br.insert(x0 + h);
    }
  }
  return {br.begin(), br.end()};
}

// theta rule on [0, pi] for x = 2 cos(theta), graded toward features in x
Rule theta_rule(const TestFunction& f, std::size_t per_panel) {
  std::set<double> br;
  const std::size_t base = 16;
  for (std::size_t i = 0; i <= base; ++i) br.insert(pi * i / base);
  const std::vector<double> xb = graded_breaks(-2.0, 2.0, f.features, f.scale, 8);
  for (double x : xb) br.insert(std::acos(std::clamp(0.5 * x, -1.0, 1.0)));
  return composite({br.begin(), br.end()}, per_panel);
}

double divided(const TestFunction& f, double x, double y, double fx, double fy) {
  if (std::abs(x - y) < 1e-8) return f.df(0.5 * (x + y));
  return (fx - fy) / (x - y);
}

template <class Eval>
double converge(Eval eval, const QuadOptions& q, const char* what) {
  std::size_t p = q.per_panel;
  double prev = eval(p);
  for (std::size_t d = 0; d < q.max_doublings; ++d) {
    p *= 2;
    const double cur = eval(p);
    if (std::abs(cur - prev) <= q.rel_tol * std::abs(cur) + 1e-13) return cur;
    prev = cur;
  }
  throw std::runtime_error(std::string(what) + ": quadrature did not converge");
}

double l1_norm(const RealFn& g, double lo, double hi, const std::vector<double>& feat,
               double scale) {
  const Rule r = composite(graded_breaks(lo, hi, feat, scale, 64), 12);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::abs(g(r.x[i]));
  return s;
}

}  // namespace

TestFunction make_test_function(RealFn f, RealFn df, RealFn d2f, double lo, double hi,
                                std::string tag, std::vector<double> features, double scale) {
  if (!(lo < hi)) throw std::invalid_argument("test function support is empty");
  TestFunction t{f, df, d2f, lo, hi, 0.0, 0.0, 0.0, std::move(tag), std::move(features), scale};
  // derivative probes against central differences, relative to the largest
  // derivative seen on the probe grid
  const double h = 1e-4 * std::min(1.0, scale);
  std::vector<double> xs;
  double top1 = 1.0, top2 = 1.0;
  for (int i = 1; i < 40; ++i) {
    const double x = lo + (hi - lo) * i / 40.0 + 1e-3 * scale;
    if (x - h <= lo || x + h >= hi) continue;
    xs.push_back(x);
    top1 = std::max(top1, std::abs(df(x)) + std::abs(f(x)) / scale);
    top2 = std::max(top2, std::abs(d2f(x)) + std::abs(df(x)) / scale);
  }
  for (double x : xs) {
    const double fd1 = (f(x + h) - f(x - h)) / (2 * h);
    const double fd2 = (df(x + h) - df(x - h)) / (2 * h);
    if (std::abs(fd1 - df(x)) > 1e-5 * top1 || std::abs(fd2 - d2f(x)) > 1e-5 * top2)
      throw std::invalid_argument("test function '" + t.tag +
                                  "': derivative does not match finite differences");
  }
  t.l1_f = l1_norm(f, lo, hi, t.features, scale);
  t.l1_df = l1_norm(df, lo, hi, t.features, scale);
  t.l1_d2f = l1_norm(d2f, lo, hi, t.features, scale);
  if (!std::isfinite(t.l1_f) || !std::isfinite(t.l1_df) || !std::isfinite(t.l1_d2f))
    throw std::invalid_argument("test function norms are not finite");
  return t;
}

TestFunction polynomial(std::vector<double> c) {
  auto diff = [](const std::vector<double>& a) {
    std::vector<double> d;
    for (std::size_t k = 1; k < a.size(); ++k) d.push_back(a[k] * static_cast<double>(k));
    return d;
  };
  const std::vector<double> c1 = diff(c), c2 = diff(c1);
  auto horner = [](const std::vector<double>& a) {
    return [a](double x) {
      double s = 0.0;
      for (std::size_t k = a.size(); k-- > 0;) s = s * x + a[k];
      return s;
    };
  };
  std::string tag = "poly";
  for (double v : c) tag += ":" + std::to_string(v);
  return make_test_function(horner(c), horner(c1), horner(c2), -4.0, 4.0, tag);
}

TestFunction polynomial_with_cutoff(std::vector<double> c) {
  const TestFunction p = polynomial(c);
  auto f = [p](double x) { return p.f(x) * smooth_cutoff(x, 3.0, 4.0); };
  auto df = [p](double x) {
    return p.df(x) * smooth_cutoff(x, 3.0, 4.0) + p.f(x) * smooth_cutoff_d1(x, 3.0, 4.0);
  };
  auto d2f = [p](double x) {
    return p.d2f(x) * smooth_cutoff(x, 3.0, 4.0) +
           2.0 * p.df(x) * smooth_cutoff_d1(x, 3.0, 4.0) +
           p.f(x) * smooth_cutoff_d2(x, 3.0, 4.0);
  };
  return make_test_function(f, df, d2f, -4.0, 4.0, p.tag + "*cutoff");
}

TestFunction bump(double center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("bump width must be positive");
  auto parts = [center, width](double x, double& g1, double& g2) {
    const double u = (x - center) / width;
    if (std::abs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    g1 = -2.0 * u / (q * q);
    g2 = -2.0 / (q * q) - 8.0 * u * u / (q * q * q);
    return std::exp(1.0 - 1.0 / q);
  };
  auto f = [parts](double x) {
    double a, b;
    return parts(x, a, b);
  };
  auto df = [parts, width](double x) {
    double g1 = 0, g2 = 0;
    const double v = parts(x, g1, g2);
    return v * g1 / width;
  };
  auto d2f = [parts, width](double x) {
    double g1 = 0, g2 = 0;
    const double v = parts(x, g1, g2);
    return v * (g1 * g1 + g2) / (width * width);
  };
  return make_test_function(f, df, d2f, center - width, center + width,
                            "bump:" + std::to_string(center) + ":" + std::to_string(width),
                            {center}, width);
}

TestFunction x2_bump(double center, double width) {
  const TestFunction b = bump(center, width);
  auto f = [b](double x) { return x * x * b.f(x); };
  auto df = [b](double x) { return 2 * x * b.f(x) + x * x * b.df(x); };
  auto d2f = [b](double x) { return 2 * b.f(x) + 4 * x * b.df(x) + x * x * b.d2f(x); };
  return make_test_function(f, df, d2f, b.lo, b.hi, "x2*" + b.tag, b.features, b.scale);
}

TestFunction log_test_function(double E, double gamma, std::size_t n, LogPart part) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  const double eps = std::pow(static_cast<double>(n), -gamma);
  RealFn g, g1, g2;
  if (part == LogPart::real) {
    g = [E, eps](double x) { return 0.5 * std::log((x - E) * (x - E) + eps * eps); };
    g1 = [E, eps](double x) { return (x - E) / ((x - E) * (x - E) + eps * eps); };
    g2 = [E, eps](double x) {
      const double u = x - E, q = u * u + eps * eps;
      return (eps * eps - u * u) / (q * q);
    };
  } else {
    g = [E, eps](double x) { return std::atan2(eps, x - E); };
    g1 = [E, eps](double x) { return -eps / ((x - E) * (x - E) + eps * eps); };
    g2 = [E, eps](double x) {
      const double u = x - E, q = u * u + eps * eps;
      return 2.0 * eps * u / (q * q);
    };
  }
  auto f = [g](double x) { return g(x) * smooth_cutoff(x, 3.0, 4.0); };
  auto df = [g, g1](double x) {
    return g1(x) * smooth_cutoff(x, 3.0, 4.0) + g(x) * smooth_cutoff_d1(x, 3.0, 4.0);
  };
  auto d2f = [g, g1, g2](double x) {
    return g2(x) * smooth_cutoff(x, 3.0, 4.0) + 2 * g1(x) * smooth_cutoff_d1(x, 3.0, 4.0) +
           g(x) * smooth_cutoff_d2(x, 3.0, 4.0);
  };
  TestFunction t = make_test_function(
      f, df, d2f, -4.0, 4.0, std::string(part == LogPart::real ? "relog:" : "imlog:") +
                                 std::to_string(E) + ":" + std::to_string(gamma),
      {E}, eps);
  t.log_type = true;
  return t;
}

double variance_main(const TestFunction& f, const QuadOptions& q) {
  return converge(
      [&](std::size_t p) {
        const Rule r = theta_rule(f, p);
        const std::size_t m = r.x.size();
        std::vector<double> x(m), fx(m), dfx(m), s2(m);
        for (std::size_t i = 0; i < m; ++i) {
          x[i] = 2.0 * std::cos(r.x[i]);
          fx[i] = f.f(x[i]);
          dfx[i] = f.df(x[i]);
          const double s = std::sin(r.x[i]);
          s2[i] = 4.0 * s * s;
        }
        double tot = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < m; ++j)
            row += r.w[j] * divided(f, x[i], x[j], fx[i], fx[j]) * dfx[j] * s2[j];
          tot += r.w[i] * row;
        }
        return tot / (pi * pi);
      },
      q, "variance main term");
}

double variance_main_symmetric(const TestFunction& f, const QuadOptions& q) {
  return converge(
      [&](std::size_t p) {
        const Rule r = theta_rule(f, p);
        const std::size_t m = r.x.size();
        std::vector<double> x(m), fx(m), c(m);
        for (std::size_t i = 0; i < m; ++i) {
          c[i] = std::cos(r.x[i]);
          x[i] = 2.0 * c[i];
          fx[i] = f.f(x[i]);
        }
        double tot = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            const double d = divided(f, x[i], x[j], fx[i], fx[j]);
            row += r.w[j] * d * d * (4.0 - 4.0 * c[i] * c[j]);
          }
          tot += r.w[i] * row;
        }
        return tot / (2.0 * pi * pi);
      },
      q, "symmetric variance main term");
}

double variance_main_chebyshev(const TestFunction& f, std::size_t terms) {
  // Gauss-Chebyshev nodes; exact for trigonometric degree < 2M
  const std::size_t M = std::max<std::size_t>(4 * terms, 256);
  std::vector<double> vals(M), th(M);
  for (std::size_t j = 0; j < M; ++j) {
    th[j] = pi * (j + 0.5) / M;
    vals[j] = f.f(2.0 * std::cos(th[j]));
  }
  double s = 0.0;
  for (std::size_t k = 1; k <= terms; ++k) {
    double ck = 0.0;
    for (std::size_t j = 0; j < M; ++j) ck += vals[j] * std::cos(k * th[j]);
    ck *= 2.0 / M;
    s += 0.5 * k * ck * ck;
  }
  return s;
}

namespace {

double fourth_cumulant_sum(const VarianceProfile& S, EntryLaw law) {
  // (1/n^2) sum_{ja} s4_ja with s4_ja = k4 (n sigma2_ja)^2
  return entry_cumulants(law).s4 * S.sigma2.cwiseAbs2().sum();
}

struct Perron {
  double lambda1 = 0.0;
  Eigen::VectorXd v;
};

Perron perron(const Eigen::MatrixXd& M) {
  Perron p;
  const auto n = M.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd u = M * v;
    const double nu = u.norm();
    if (nu == 0.0) break;
    u /= nu;
    const double d = (u - v).norm();
    v = u;
    if (d < 1e-14) break;
  }
  p.v = v;
  p.lambda1 = v.dot(M * v);
  return p;
}

double top_abs_eig(const Eigen::MatrixXd& A) {
  const auto n = A.rows();
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = (i % 2 ? -1.0 : 1.0) + 0.01 * i / double(n);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd u = A * v;
    const double nu = u.norm();
    if (nu < 1e-300) return 0.0;
    lam = nu;
    u /= nu;
    // a sign-flipping iterate still converges in |.|
    if (std::min((u - v).norm(), (u + v).norm()) < 1e-12) break;
    v = u;
  }
  return lam;
}

}  // namespace

BandParts epsilon_band_parts(const TestFunction& f, const VarianceProfile& S,
                             const QuadOptions& q) {
  BandParts b;
  const Perron p = perron(S.sigma2);
  const Eigen::MatrixXd A = S.sigma2 - p.lambda1 * p.v * p.v.transpose();
  b.trace_a = S.trace() - p.lambda1;
  b.frob2 = A.squaredNorm();
  b.op_norm = top_abs_eig(A);

  const Rule r = theta_rule(f, 2 * q.per_panel);
  const std::size_t m = r.x.size();
  std::vector<double> x(m), fx(m), dfx(m), s2(m);
  std::vector<cplx> mx(m);
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = 2.0 * std::cos(r.x[i]);
    fx[i] = f.f(x[i]);
    dfx[i] = f.df(x[i]);
    const double s = std::sin(r.x[i]);
    s2[i] = 4.0 * s * s;
    mx[i] = cplx(-0.5 * x[i], std::sqrt(std::max(0.0, 4.0 - x[i] * x[i])) * 0.5);
  }
  cplx ia = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      ia += r.w[i] * r.w[j] * (fx[i] - fx[j]) * dfx[j] * mx[i] * s2[j];
  b.i_a = std::abs(ia) / (pi * pi);

  // x over [-2,2] by theta, over 2<|x|<4 by x = 2 cosh u; y plain on [-4,4]
  const double lo = std::max(-4.0, f.lo), hi = std::min(4.0, f.hi);
  const Rule ry = composite(graded_breaks(lo, hi, f.features, f.scale, 32), 2 * q.per_panel);
  std::vector<double> fy(ry.x.size()), dfy(ry.x.size());
  for (std::size_t j = 0; j < ry.x.size(); ++j) {
    fy[j] = f.f(ry.x[j]);
    dfy[j] = f.df(ry.x[j]);
  }
  auto inner = [&](double xv) {
    const double fxv = f.f(xv);
    double s = 0.0;
    for (std::size_t j = 0; j < ry.x.size(); ++j) s += ry.w[j] * std::abs((fxv - fy[j]) * dfy[j]);
    return s;
  };
  double jf = 0.0;
  for (std::size_t i = 0; i < m; ++i) jf += r.w[i] * inner(x[i]);
  const Rule ru = gauss_legendre(4 * q.per_panel, 0.0, std::acosh(2.0));
  for (std::size_t i = 0; i < ru.x.size(); ++i) {
    const double xv = 2.0 * std::cosh(ru.x[i]);
    jf += ru.w[i] * (inner(xv) + inner(-xv));
  }
  b.j_f = jf;
  return b;
}

VarianceBreakdown variance_gw(const TestFunction& f, const VarianceProfile& S, EntryLaw law,
                              int beta, const QuadOptions& q) {
  if (beta != 1 && beta != 2) throw std::invalid_argument("beta must be 1 or 2");
  VarianceBreakdown v;
  v.main = variance_main(f, q);
  const double ix = chebyshev_integral([&](double x) { return f.f(x) * x; }, 512);
  const double i2 = chebyshev_integral([&](double x) { return f.f(x) * (2.0 - x * x); }, 512);
  v.trace_s_term = -S.trace() / (4.0 * pi * pi) * ix * ix;
  v.quartic_term = fourth_cumulant_sum(S, law) / (pi * pi) * i2 * i2;
  const BandParts b = epsilon_band_parts(f, S, q);
  const double h = b.op_norm < 1.0 ? b.frob2 / (1.0 - b.op_norm)
                                   : std::numeric_limits<double>::infinity();
  v.epsilon_band = std::abs(b.trace_a) * b.i_a + (b.frob2 > 0.0 ? h * b.j_f : 0.0);
  if (beta == 2) {
    v.main *= 0.5;
    v.trace_s_term *= 0.5;
    v.quartic_term *= 0.5;
    v.epsilon_band *= 0.5;
    v.beta_halved = true;
  }
  v.total_with_band = {v.total() - v.epsilon_band, v.total() + v.epsilon_band};
  return v;
}

ExpectationTerms expectation_terms(const TestFunction& f, const VarianceProfile& S,
                                   EntryLaw law) {
  ExpectationTerms e;
  e.leading = -chebyshev_integral(f.f, 512) / (2.0 * pi);
  e.boundary = (f.f(2.0) + f.f(-2.0)) / 4.0;
  e.s_ii_term =
      S.trace() * chebyshev_integral([&](double x) { return f.f(x) * (2.0 - x * x); }, 512) /
      (2.0 * pi);
  const double x4 = chebyshev_integral(
      [&](double x) { return f.f(x) * (x * x * x * x - 4.0 * x * x + 2.0); }, 512);
  e.quartic_term = fourth_cumulant_sum(S, law) * x4 / (2.0 * pi);
  return e;
}

double delta_shift(double E, std::size_t n, int beta) {
  if (n < 2) throw std::invalid_argument("delta_shift needs n >= 2");
  const double floor = std::pow(static_cast<double>(n), -2.0 / 3.0);
  return 0.25 * (2.0 / beta - 1.0) * std::log(std::max(kappa(E), floor));
}

CovarianceExponents covariance_exponents(const std::vector<double>& energies, std::size_t n,
                                         int beta, const std::vector<std::size_t>& indices) {
  for (double E : energies)
    if (!(E >= -2.0 && E <= 2.0)) throw std::invalid_argument("energies must lie in [-2,2]");
  CovarianceExponents c;
  c.energies = energies;
  c.indices = indices;
  c.n = n;
  c.beta = beta;
  const double ln = std::log(static_cast<double>(n));
  auto grids = [&](const std::vector<double>& Es, Eigen::MatrixXd* a, Eigen::MatrixXd* b) {
    const auto m = static_cast<Eigen::Index>(Es.size());
    Eigen::MatrixXd ra(m, m), rb(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const double sep = std::max(std::abs(Es[i] - Es[j]), scale_params(Es[i], n).ell);
        ra(i, j) = std::log(sep) / -ln;
        const double k = kappa(Es[i]);
        const double ratio = k > 0.0 ? std::min(sep / k, 1.0) : 1.0;
        rb(i, j) = std::log(ratio) / -ln;
      }
    if (a) *a = 0.5 * (ra + ra.transpose());
    if (b) *b = 0.5 * (rb + rb.transpose());
  };
  grids(energies, &c.a, &c.b);
  if (!indices.empty()) {
    std::vector<double> g;
    for (std::size_t k : indices) g.push_back(quantile(k, n));
    grids(g, nullptr, &c.c);
  }
  return c;
}

std::vector<double> char_curve(double V, const std::vector<double>& lambdas) {
  if (!(V >= 0.0)) throw std::invalid_argument("char_curve needs V >= 0");
  std::vector<double> out;
  for (double l : lambdas) out.push_back(std::exp(-0.5 * l * l * V));
  return out;
}

}  // namespace logcorr
