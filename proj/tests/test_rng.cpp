#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "logcorr/rng.hpp"

using namespace logcorr;

TEST_CASE("derive is stable and composes") {
  CHECK(derive(7, 1, 2) == derive(derive(7, 1), 2));
  CHECK(derive(7, 1) != derive(7, 2));
  CHECK(derive(7, 1, 2) != derive(7, 2, 1));
  // splitmix64 reference outputs
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(mix64(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("hash_tag is FNV-1a") {
  CHECK(hash_tag("") == 0xcbf29ce484222325ULL);
  CHECK(hash_tag("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("counter stream restarts anywhere") {
  CounterStream a(42);
  std::vector<std::uint64_t> v;
  for (int i = 0; i < 10; ++i) v.push_back(a());
  CounterStream b(42, 5);
  CHECK(b() == v[5]);
  CHECK(a.counter() == 10);
}

TEST_CASE("uniform, normal and chi moments") {
  CounterStream g(derive(3, 9));
  const int M = 100000;
  double su = 0, sn = 0, sn2 = 0, sc2 = 0;
  for (int i = 0; i < M; ++i) {
    const double u = g.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = g.normal();
    sn += z;
    sn2 += z * z;
    const double c = g.chi(5.0);
    sc2 += c * c;
  }
  CHECK(std::abs(su / M - 0.5) < 3 * std::sqrt(1.0 / 12 / M));
  CHECK(std::abs(sn / M) < 3 / std::sqrt(M));
  CHECK(std::abs(sn2 / M - 1.0) < 3 * std::sqrt(2.0 / M));
  // chi^2 with 5 degrees of freedom has mean 5 and variance 10
  CHECK(std::abs(sc2 / M - 5.0) < 3 * std::sqrt(10.0 / M));
}

TEST_CASE("sign is balanced") {
  CounterStream g(11);
  int plus = 0;
  for (int i = 0; i < 10000; ++i) {
    const double s = g.sign();
    REQUIRE(std::abs(s) == 1.0);
    plus += s > 0;
  }
  CHECK(std::abs(plus - 5000) < 3 * 50);
}
