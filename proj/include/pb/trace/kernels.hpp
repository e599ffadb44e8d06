#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pb::trace {

/// Neumaier (improved Kahan) accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double compensation = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if ((sum >= 0 ? sum : -sum) >= (x >= 0 ? x : -x)) {
      compensation += (sum - t) + x;
    } else {
      compensation += (x - t) + sum;
    }
    sum = t;
  }

  void merge(const CompensatedSum& other) noexcept {
    add(other.sum);
    compensation += other.compensation;
  }

  double value() const noexcept { return sum + compensation; }
};

/// Standard normal deviate addressed by (seed, index). Pure function of its
/// arguments, so any sample of a noise stream can be regenerated in isolation.
double gaussian_at(std::uint64_t seed, std::uint64_t index) noexcept;

// OpenMP kernels used on the hot paths. Every kernel has a serial twin in
// `reference` that the tests hold it against.
namespace kernels {

inline constexpr std::size_t kSumBlock = 4096;

/// Blocked compensated sum; block partials are merged in index order, so the
/// result does not depend on the thread count.
double compensated_sum(std::span<const double> values);

/// out[i] = max(0, mean_ma + sigma_ma * N(seed, first_index + i)).
void synthesize_current(std::span<double> out, double mean_ma, double sigma_ma,
                        std::uint64_t seed, std::uint64_t first_index);

/// Mean of values[bounds[b], bounds[b+1]) for each b. Empty ranges yield 0.
std::vector<double> range_means(std::span<const double> values, std::span<const std::size_t> bounds);

/// Index of the first value strictly greater than limit.
std::optional<std::size_t> first_above(std::span<const double> values, double limit);

}  // namespace kernels

namespace reference {

/// Left-to-right compensated sum over the whole span.
double compensated_sum(std::span<const double> values);

void synthesize_current(std::span<double> out, double mean_ma, double sigma_ma,
                        std::uint64_t seed, std::uint64_t first_index);

std::vector<double> range_means(std::span<const double> values, std::span<const std::size_t> bounds);

std::optional<std::size_t> first_above(std::span<const double> values, double limit);

}  // namespace reference

}  // namespace pb::trace
