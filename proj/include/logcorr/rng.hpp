#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace logcorr {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x);

inline std::uint64_t derive(std::uint64_t key) { return key; }

// Key of a child stream. derive(seed, a, b) == derive(derive(seed, a), b).
template <class... Rest>
std::uint64_t derive(std::uint64_t key, std::uint64_t part, Rest... rest) {
  return derive(mix64(key ^ mix64(part + 0x632be59bd9b4e019ULL)),
                static_cast<std::uint64_t>(rest)...);
}

// FNV-1a, used to turn experiment tags into stream keys.
std::uint64_t hash_tag(std::string_view s);

// Counter-based stream: the k-th output depends only on (key, k), so a
// stream can be restarted anywhere. Satisfies UniformRandomBitGenerator.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit CounterStream(std::uint64_t key, std::uint64_t start = 0)
      : key_(key), counter_(start) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // uniform on the open interval (0,1)
  double uniform();
  double normal();
  // +1 or -1 with equal probability
  double sign();
  // chi variate with k degrees of freedom
  double chi(double k);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace logcorr
