#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace qmscat {

/// Pairwise (cascade) summation. Fixed recursion order, so the result is
/// reproducible and the rounding error grows like log(n) instead of n.
inline double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 64) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += values[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

inline double pairwise_sum(std::span<const double> values) {
  return pairwise_sum(values.data(), values.size());
}

/// Pairwise sum of f(values[i]) without materializing the mapped array.
template <typename F>
double pairwise_sum_map(const double* values, std::size_t n, F&& f) {
  if (n <= 64) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += f(values[i]);
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_map(values, half, f) +
         pairwise_sum_map(values + half, n - half, f);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seed for a child RNG stream (bag index, fold index, draw index, ...).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::uint64_t stream_id) {
  std::uint64_t state = master ^ (0x9e3779b97f4a7c15ull * (stream_id + 1));
  return splitmix64(state);
}

inline constexpr double kcal_per_hartree = 627.509;

}  // namespace qmscat
