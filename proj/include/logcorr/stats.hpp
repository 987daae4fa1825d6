#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace logcorr {

// Neumaier-compensated sum in the order given
double compensated_sum(const std::vector<double>& v);

struct ColumnStats {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double kurtosis = 0.0;  // excess
  double ks = 0.0;        // standardized sample vs N(0,1)
  std::pair<double, double> ci_mean{0.0, 0.0};
  std::pair<double, double> ci_variance{0.0, 0.0};
};

struct SummaryStats {
  std::vector<ColumnStats> columns;
  Eigen::MatrixXd covariance;
};

double normal_cdf(double x);

// KS distance of the raw samples to the standard normal CDF
double ks_distance(std::vector<double> samples);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

ColumnStats summarize_column(const std::vector<double>& x, const std::string& name = "");
// rows are replicas, columns are statistics
SummaryStats summarize(const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& names);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

// weighted least squares; empty weights means equal weights
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& weights = {});

double correlation(const std::vector<double>& a, const std::vector<double>& b);
double median(std::vector<double> v);

nlohmann::json to_json(const SummaryStats& s);

}  // namespace logcorr
