#pragma once

#include <functional>
#include <vector>

namespace logcorr {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre rule on [a,b]
Rule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

// composite Gauss-Legendre over the given breakpoints
Rule composite(const std::vector<double>& breaks, std::size_t per_panel);

// integral over [-2,2] of g(x)/sqrt(4-x^2), via x = 2 cos(theta)
double chebyshev_integral(const std::function<double(double)>& g, std::size_t nodes = 256);

// C^2 cutoff: 1 on |x| <= inner, 0 on |x| >= outer, quintic smoothstep between
double smooth_cutoff(double x, double inner, double outer);
double smooth_cutoff_d1(double x, double inner, double outer);
double smooth_cutoff_d2(double x, double inner, double outer);

}  // namespace logcorr
