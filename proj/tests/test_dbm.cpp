#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "logcorr/dbm.hpp"
#include "logcorr/ensemble.hpp"
#include "logcorr/rng.hpp"
#include "logcorr/spectral.hpp"
#include "logcorr/stats.hpp"

using namespace logcorr;

namespace {

std::vector<double> goe_spectrum(std::size_t n, std::uint64_t seed) {
  return eigenvalues(sample_gaussian_tridiagonal(n, 1, seed)).lambdas;
}

DbmPath frozen(const std::vector<double>& x, std::vector<double> times) {
  DbmPath p;
  p.n = x.size();
  p.times = times;
  p.particles.assign(times.size(), x);
  return p;
}

}  // namespace

TEST_CASE("single particle is an OU process") {
  // stationary start: N(0,1), dx = dB - x/2 dt keeps variance 1
  const std::size_t M = 10000;
  std::vector<double> end(M);
  CounterStream g(derive(5, hash_tag("ou start")));
  DtPolicy p;
  p.store_stride = 1u << 30;
  for (std::size_t r = 0; r < M; ++r) end[r] = run_dbm({g.normal()}, 2, 1.0, p, derive(6, r)).particles.back()[0];
  const ColumnStats s = summarize_column(end);
  CHECK(std::abs(s.variance - 1.0) <= 3 * std::sqrt(2.0 / (M - 1)));
  CHECK(std::abs(s.mean) <= 3 / std::sqrt(double(M)));
}

TEST_CASE("ordering and storage") {
  DtPolicy p;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DbmPath path = run_dbm({-1.0, 1.0}, 1, 0.8, p, seed);
    CHECK(path.times.front() == 0.0);
    CHECK(path.times.back() == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(path.times.size() == path.particles.size());
    bool ok = true;
    for (const auto& x : path.particles) ok = ok && x[0] < x[1];
    CHECK(ok);
    CHECK(std::is_sorted(path.times.begin(), path.times.end()));
  }
  CHECK_THROWS(run_dbm({1.0, -1.0}, 1, 0.1, p, 0));
  CHECK_THROWS(run_dbm({-1.0, 1.0}, 1, 1.5, p, 0));
  CHECK_THROWS(run_dbm({-1.0, 1.0}, 3, 0.1, p, 0));
  // ties are split, not rejected
  CHECK_NOTHROW(run_dbm({0.0, 0.0, 1.0}, 1, 0.01, p, 0));
}

TEST_CASE("collision beyond the substep limit") {
  // noise far above the spacing crosses on every draw
  DtPolicy p;
  p.c = 1e10;
  p.dt_max = 1.0;
  p.max_halvings = 0;
  std::vector<double> x(100);
  for (std::size_t k = 0; k < 100; ++k) x[k] = 1e-3 * k;
  CHECK_THROWS_AS(run_dbm(x, 1, 1.0, p, 1), std::runtime_error);
}

TEST_CASE("GUE is invariant under the flow") {
  const std::size_t n = 256, R = 50;
  DtPolicy p;
  p.store_stride = 1u << 30;
  std::vector<double> flowed, fresh;
  for (std::size_t r = 0; r < R; ++r) {
    const std::vector<double> x0 = eigenvalues(sample_gaussian_tridiagonal(n, 2, derive(1, r))).lambdas;
    const DbmPath path = run_dbm(x0, 2, 0.5, p, derive(2, r));
    flowed.insert(flowed.end(), path.particles.back().begin(), path.particles.back().end());
    const std::vector<double> f = eigenvalues(sample_gaussian_tridiagonal(n, 2, derive(3, r))).lambdas;
    fresh.insert(fresh.end(), f.begin(), f.end());
  }
  const double ks = ks_two_sample(flowed, fresh);
  MESSAGE("pooled KS flowed vs fresh GUE: " << ks);
  CHECK(ks < 0.02);
}

TEST_CASE("coupled runs") {
  const std::vector<double> a = goe_spectrum(32, 4);
  DtPolicy p;
  const auto [pa, pb] = run_coupled(a, a, 1, 0.2, p, 9);
  CHECK(pa.times == pb.times);
  CHECK(pa.particles == pb.particles);
  const DbmPath single = run_dbm(a, 1, 0.2, p, 9);
  CHECK(single.particles == pa.particles);

  const std::vector<double> b = goe_spectrum(32, 5);
  const auto [qa, qb] = run_coupled(a, b, 1, 0.0, p, 9);
  CHECK(qa.particles.front() == a);
  CHECK(qb.particles.front() == b);
  CHECK(qa.particles.size() == 1);
  CHECK_THROWS(run_coupled(a, goe_spectrum(16, 1), 1, 0.1, p, 0));
}

TEST_CASE("noise record") {
  DtPolicy p;
  p.record_noise = true;
  const std::vector<double> x0 = goe_spectrum(64, 8);
  const DbmPath path = run_dbm(x0, 1, 0.3, p, 21);
  const DbmPath again = replay_dbm(x0, 1, path.noise);
  CHECK(again.times == path.times);
  CHECK(again.particles == path.particles);

  // stride 3 replay keeps every third step and the end
  DtPolicy p3 = p;
  p3.store_stride = 3;
  const DbmPath strided = run_dbm(x0, 1, 0.3, p3, 21);
  CHECK(replay_dbm(x0, 1, strided.noise, 3).particles == strided.particles);

  std::vector<double> z;
  double sum_sq = 0, sum_dt = 0;
  for (const NoiseStep& s : path.noise)
    for (double d : s.db) {
      z.push_back(d / std::sqrt(s.dt));
      sum_sq += d * d;
      sum_dt += s.dt;
    }
  REQUIRE(z.size() >= 10000);
  const ColumnStats st = summarize_column(z);
  CHECK(std::abs(st.mean) <= 3 / std::sqrt(double(z.size())));
  CHECK(std::abs(st.variance - 1) <= 3 * std::sqrt(2.0 / z.size()));
  CHECK(std::abs(sum_sq / sum_dt - 1) <= 0.05);

  const std::vector<NoiseStep> back = noise_from_json(noise_to_json(path.noise));
  REQUIRE(back.size() == path.noise.size());
  CHECK(back[5].dt == path.noise[5].dt);
  CHECK(back[5].db == path.noise[5].db);
}

TEST_CASE("kernel evolution") {
  const std::vector<double> x0 = goe_spectrum(48, 2);
  DtPolicy p;
  const DbmPath path = run_dbm(x0, 1, 0.2, p, 4);

  const std::vector<KernelState> flat = evolve_kernel(std::vector<double>(48, 2.5), path);
  for (double u : flat.back().u) CHECK(u == doctest::Approx(2.5).epsilon(1e-14));

  std::vector<double> u0(48);
  CounterStream g(12);
  for (double& u : u0) u = g.normal();
  const std::vector<KernelState> ks = evolve_kernel(u0, path);
  const double l1 = std::accumulate(u0.begin(), u0.end(), 0.0, [](double s, double u) { return s + std::abs(u); });
  const double s0 = std::accumulate(u0.begin(), u0.end(), 0.0);
  double prev_max = 1e300, prev_min = -1e300;
  bool mono = true, conserved = true;
  for (const KernelState& k : ks) {
    conserved = conserved && std::abs(std::accumulate(k.u.begin(), k.u.end(), 0.0) - s0) <= 1e-8 * l1;
    const double mx = *std::max_element(k.u.begin(), k.u.end());
    const double mn = *std::min_element(k.u.begin(), k.u.end());
    mono = mono && mx <= prev_max + 1e-15 && mn >= prev_min - 1e-15;
    prev_max = mx;
    prev_min = mn;
  }
  CHECK(conserved);
  CHECK(mono);
  for (std::size_t k = 0; k < 48; ++k) CHECK(ks.front().v[k] == std::abs(u0[k]));

  // thinning keeps the last state
  const std::vector<KernelState> thin = evolve_kernel(u0, path, 7);
  CHECK(thin.back().time == ks.back().time);
  CHECK(thin.back().u == ks.back().u);

  CHECK_THROWS(evolve_kernel(std::vector<double>(3, 0.0), path));
  const DbmPath tight = frozen({0.0, 1e-6}, {0.0, 0.1});
  CHECK_THROWS_AS(evolve_kernel({1.0, 0.0}, tight), std::runtime_error);
}

TEST_CASE("kernel matches a finite difference of the flow") {
  const std::size_t n = 64;
  const double delta = 1e-6, t = 0.1;
  const std::vector<double> a = goe_spectrum(n, 30);
  std::vector<double> u0(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    u0[k] = std::sin(0.3 * k) + 0.5;
    b[k] = a[k] + delta * u0[k];
  }
  DtPolicy p;
  const auto [pa, pb] = run_coupled(a, b, 1, t, p, 77);
  const std::vector<KernelState> ks = evolve_kernel(u0, pa);
  const double scale = std::exp(pa.times.back() / 2) / delta;
  double err = 0, ref = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double fd = scale * (pb.particles.back()[k] - pa.particles.back()[k]);
    err = std::max(err, std::abs(fd - ks.back().u[k]));
    ref = std::max(ref, std::abs(ks.back().u[k]));
  }
  MESSAGE("finite difference relative error " << err / ref);
  CHECK(err / ref <= 1e-3);
}

TEST_CASE("observables") {
  const std::vector<double> x0 = goe_spectrum(40, 3);
  DtPolicy p;
  const DbmPath path = run_dbm(x0, 1, 0.1, p, 5);
  const std::vector<KernelState> ones = evolve_kernel(std::vector<double>(40, 1.0), path);
  Spectrum s;
  s.n = 40;
  s.lambdas = x0;
  const cplx z(0.3, 0.2);
  CHECK(std::abs(observable_f(path, ones, z, 0.0) - 40.0 * stieltjes(s, z)) < 1e-12);

  std::vector<double> u0(40);
  for (std::size_t k = 0; k < 40; ++k) u0[k] = std::cos(double(k));
  const std::vector<KernelState> ks = evolve_kernel(u0, path);
  const double tl = path.times.back();
  CHECK(std::abs(observable_f(path, ks, std::conj(z), tl) - std::conj(observable_f(path, ks, z, tl))) < 1e-12);
  CHECK(std::abs(observable_f_tilde(path, ks, std::conj(z), tl) - std::conj(observable_f_tilde(path, ks, z, tl))) < 1e-12);
  CHECK_THROWS(observable_f(path, ks, cplx(0.3, 0.0), 0.0));
  CHECK_THROWS(observable_f(path, ks, z, 0.5 * path.times[1]));
}

TEST_CASE("rigidity") {
  CHECK(rigidity_report(frozen(quantiles(100), {0.0, 0.5})) == 0.0);
  const double one = rigidity_report(frozen({0.3}, {0.0}));
  CHECK(std::isfinite(one));
  CHECK(one == doctest::Approx(std::abs(0.3 - quantile(1, 1))).epsilon(1e-12));

  const std::size_t n = 128, R = 20;
  DtPolicy p;
  p.store_stride = 50;
  std::size_t good = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const DbmPath path = run_dbm(goe_spectrum(n, derive(40, r)), 1, 0.5, p, derive(41, r));
    if (rigidity_report(path) <= std::pow(std::log(double(n)), 2)) ++good;
  }
  CHECK(good >= 19);
}

TEST_CASE("homogenized gap predictor") {
  const std::size_t n = 200;
  const std::vector<double> a = goe_spectrum(n, 1);
  CHECK(ubar(a, a, 0.1, 100) == 0.0);
  std::vector<double> b = a;
  for (double& x : b) x -= 0.37;
  CHECK(ubar(a, b, 0.1, 100) == doctest::Approx(0.37).epsilon(1e-6));
  CHECK(ubar(a, b, 0.5, 40) == doctest::Approx(0.37).epsilon(1e-6));
  CHECK_THROWS_AS(ubar(a, b, 0.1, 5), std::out_of_range);
  CHECK_THROWS(ubar(a, b, 0.0, 100));
}

TEST_CASE("path export") {
  const DbmPath p = frozen({-0.5, 0.5}, {0.0});
  CHECK(path_to_csv(p) == "time,k,x\n0,1,-0.5\n0,2,0.5\n");
}
