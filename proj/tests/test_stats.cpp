#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "logcorr/rng.hpp"
#include "logcorr/stats.hpp"

using namespace logcorr;

TEST_CASE("KS distance") {
  const boost::math::normal_distribution<> phi;
  for (std::size_t M : {10, 137, 2000}) {
    std::vector<double> grid(M);
    for (std::size_t i = 0; i < M; ++i) grid[i] = boost::math::quantile(phi, (i + 0.5) / M);
    CHECK(ks_distance(grid) == doctest::Approx(0.5 / M).epsilon(1e-9));
  }
  CHECK(ks_distance({0.0}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS(ks_distance({}));
  CHECK_THROWS(summarize_column({}));
  CHECK(ks_two_sample({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(ks_two_sample({0.0, 1.0}, {5.0, 6.0}) == 1.0);
}

TEST_CASE("estimators on synthetic normal input") {
  const std::size_t M = 100000;
  CounterStream g(derive(1, hash_tag("stats")));
  std::vector<double> x(M);
  for (double& v : x) v = g.normal();
  const ColumnStats s = summarize_column(x, "x");
  CHECK(s.count == M);
  CHECK(std::abs(s.mean) <= 3 / std::sqrt(double(M)));
  CHECK(std::abs(s.variance - 1) <= 3 * std::sqrt(2.0 / M));
  CHECK(s.ks < 1.63 / std::sqrt(double(M)));
  CHECK(std::abs(s.skewness) <= 3 * std::sqrt(6.0 / M));
  CHECK(std::abs(s.kurtosis) <= 3 * std::sqrt(24.0 / M));
  CHECK(s.ci_mean.first <= s.mean);
  CHECK(s.mean <= s.ci_mean.second);
  CHECK(s.ci_variance.first <= s.variance);
  CHECK(s.variance <= s.ci_variance.second);
}

TEST_CASE("summary of several columns") {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({double(i), 2.0 * i + 1, std::pow(-1.0, i)});
  const SummaryStats s = summarize(rows, {"a", "b", "c"});
  REQUIRE(s.columns.size() == 3);
  CHECK(s.columns[1].mean == doctest::Approx(50.0));
  CHECK(s.covariance(0, 1) == doctest::Approx(2 * s.columns[0].variance));
  CHECK(s.covariance(1, 1) == doctest::Approx(s.columns[1].variance));
  CHECK(correlation({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  const nlohmann::json j = to_json(s);
  CHECK(j["columns"].size() == 3);
  CHECK_THROWS(summarize(rows, {"a", "b"}));
}

TEST_CASE("linear fit") {
  const LinearFit f = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-12));
  // weights pick out the first two points
  const LinearFit w = linear_fit({0, 1, 2}, {0, 1, 10}, {1, 1, 1e-12});
  CHECK(w.slope == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("compensated sum") {
  std::vector<double> v{1.0, 1e100, 1.0, -1e100};
  CHECK(compensated_sum(v) == 2.0);
  std::vector<double> tenth(10, 0.1);
  CHECK(compensated_sum(tenth) == 1.0);
}
