#include "logcorr/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace logcorr {

namespace {

const Rule& unit_rule(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      dp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p1 = 1.0, p2 = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    dp = n * (z * p1 - p2) / (z * z - 1.0);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

}  // namespace

Rule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw std::invalid_argument("gauss_legendre needs n >= 1");
  const Rule& u = unit_rule(n);
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (std::size_t i = 0; i < n; ++i) {
    r.x[i] = c + h * u.x[i];
    r.w[i] = h * u.w[i];
  }
  return r;
}

Rule composite(const std::vector<double>& breaks, std::size_t per_panel) {
  Rule out;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const Rule r = gauss_legendre(per_panel, breaks[p], breaks[p + 1]);
    out.x.insert(out.x.end(), r.x.begin(), r.x.end());
    out.w.insert(out.w.end(), r.w.begin(), r.w.end());
  }
  return out;
}

double chebyshev_integral(const std::function<double(double)>& g, std::size_t nodes) {
  const Rule r = gauss_legendre(nodes, 0.0, std::numbers::pi);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) s += r.w[i] * g(2.0 * std::cos(r.x[i]));
  return s;
}

namespace {
// quintic smoothstep on [0,1] and its derivatives
double ss(double u) { return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u); }
double ss1(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
double ss2(double u) { return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); }
}  // namespace

double smooth_cutoff(double x, double inner, double outer) {
  const double a = std::abs(x);
  if (a <= inner) return 1.0;
  if (a >= outer) return 0.0;
  return 1.0 - ss((a - inner) / (outer - inner));
}

double smooth_cutoff_d1(double x, double inner, double outer) {
  const double a = std::abs(x);
  if (a <= inner || a >= outer) return 0.0;
  const double w = outer - inner;
  return -(x > 0 ? 1.0 : -1.0) * ss1((a - inner) / w) / w;
}

double smooth_cutoff_d2(double x, double inner, double outer) {
  const double a = std::abs(x);
  if (a <= inner || a >= outer) return 0.0;
  const double w = outer - inner;
  return -ss2((a - inner) / w) / (w * w);
}

}  // namespace logcorr
