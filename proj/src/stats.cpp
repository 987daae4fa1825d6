#include "logcorr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace logcorr {

double compensated_sum(const std::vector<double>& v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  return s + c;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(samples.begin(), samples.end());
  const double M = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = normal_cdf(samples[i]);
    d = std::max({d, (i + 1) / M - F, F - i / M});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

ColumnStats summarize_column(const std::vector<double>& x, const std::string& name) {
  if (x.empty()) throw std::invalid_argument("summarize: empty sample");
  ColumnStats c;
  c.name = name;
  c.count = x.size();
  const double M = static_cast<double>(x.size());
  c.mean = compensated_sum(x) / M;
  std::vector<double> d2(x.size()), d3(x.size()), d4(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - c.mean;
    d2[i] = d * d;
    d3[i] = d2[i] * d;
    d4[i] = d2[i] * d2[i];
  }
  const double m2 = compensated_sum(d2) / M;
  const double m3 = compensated_sum(d3) / M;
  const double m4 = compensated_sum(d4) / M;
  c.variance = x.size() > 1 ? m2 * M / (M - 1.0) : 0.0;
  if (m2 > 0.0) {
    c.skewness = m3 / std::pow(m2, 1.5);
    c.kurtosis = m4 / (m2 * m2) - 3.0;
    std::vector<double> z(x.size());
    const double sd = std::sqrt(c.variance);
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - c.mean) / sd;
    c.ks = ks_distance(z);
  } else {
    c.ks = ks_distance(std::vector<double>(x.size(), 0.0));
  }
  const double se = std::sqrt(c.variance / M);
  c.ci_mean = {c.mean - 1.96 * se, c.mean + 1.96 * se};
  const double se_var = std::sqrt(std::max(0.0, m4 - m2 * m2) / M);
  c.ci_variance = {c.variance - 1.96 * se_var, c.variance + 1.96 * se_var};
  return c;
}

SummaryStats summarize(const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& names) {
  if (rows.empty()) throw std::invalid_argument("summarize: empty sample set");
  const std::size_t k = names.size();
  SummaryStats s;
  std::vector<std::vector<double>> cols(k);
  for (const auto& r : rows) {
    if (r.size() != k) throw std::invalid_argument("summarize: ragged rows");
    for (std::size_t j = 0; j < k; ++j) cols[j].push_back(r[j]);
  }
  for (std::size_t j = 0; j < k; ++j) s.columns.push_back(summarize_column(cols[j], names[j]));
  const double M = static_cast<double>(rows.size());
  s.covariance = Eigen::MatrixXd::Zero(k, k);
  if (rows.size() > 1) {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a; b < k; ++b) {
        std::vector<double> p(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          p[i] = (cols[a][i] - s.columns[a].mean) * (cols[b][i] - s.columns[b].mean);
        s.covariance(a, b) = s.covariance(b, a) = compensated_sum(p) / (M - 1.0);
      }
  }
  return s;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& weights) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("linear_fit needs >= 2 points");
  std::vector<double> w = weights.empty() ? std::vector<double>(n, 1.0) : weights;
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (!weights.empty()) {
    // weights are inverse variances
    f.slope_se = std::sqrt(1.0 / sxx);
  } else if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("correlation: bad sizes");
  const double ma = compensated_sum(a) / a.size(), mb = compensated_sum(b) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

nlohmann::json to_json(const SummaryStats& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : s.columns)
    cols.push_back({{"name", c.name},
                    {"count", c.count},
                    {"mean", c.mean},
                    {"variance", c.variance},
                    {"skewness", c.skewness},
                    {"kurtosis", c.kurtosis},
                    {"ks", c.ks},
                    {"ci_mean", {c.ci_mean.first, c.ci_mean.second}},
                    {"ci_variance", {c.ci_variance.first, c.ci_variance.second}}});
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.covariance.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < s.covariance.cols(); ++j) row.push_back(s.covariance(i, j));
    cov.push_back(row);
  }
  return {{"columns", cols}, {"covariance", cov}};
}

}  // namespace logcorr
