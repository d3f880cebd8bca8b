#include "dynba/rng.hpp"

#include <cmath>
#include <initializer_list>
#include <numbers>

namespace dynba {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed) : key_(splitmix64_mix(seed + kGolden)) {}

CounterRng CounterRng::stream(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  CounterRng out(0);
  std::uint64_t k = key_;
  for (std::uint64_t tag : {a, b, c}) k = splitmix64_mix(k ^ splitmix64_mix(tag + kGolden));
  out.key_ = k;
  return out;
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const { return splitmix64_mix(key_ + (counter + 1) * kGolden); }

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * kTwoPow53Inv;
}

double CounterRng::normal(std::uint64_t index) const {
  // u1 in (0, 1] keeps the logarithm finite
  const double u1 = static_cast<double>((bits(2 * index) >> 11) + 1) * kTwoPow53Inv;
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dynba
