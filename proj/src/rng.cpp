#include "logcorr/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace logcorr {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CounterStream::result_type CounterStream::operator()() {
  return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
}

double CounterStream::uniform() {
  // 53 random bits, shifted off zero
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

double CounterStream::sign() { return ((*this)() >> 63) ? 1.0 : -1.0; }

double CounterStream::chi(double k) {
  // chi^2_k = 2 Gamma(k/2)
  std::gamma_distribution<double> g(0.5 * k, 2.0);
  return std::sqrt(g(*this));
}

}  // namespace logcorr
