#include "pb/trace/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pb::trace {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Maps 53 high bits onto the open interval (0, 1).
constexpr double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double block_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

CompensatedSum block_partial(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc;
}

double clamp_sample(double mean_ma, double sigma_ma, std::uint64_t seed, std::uint64_t index) noexcept {
  const double v = sigma_ma == 0.0 ? mean_ma : mean_ma + sigma_ma * gaussian_at(seed, index);
  return v > 0.0 ? v : 0.0;
}

double bucket_mean(std::span<const double> values, std::size_t first, std::size_t last) noexcept {
  if (last <= first) return 0.0;
  return block_sum(values.subspan(first, last - first)) / static_cast<double>(last - first);
}

}  // namespace

double gaussian_at(std::uint64_t seed, std::uint64_t index) noexcept {
  const std::uint64_t key = splitmix64(seed);
  const double u1 = unit_open(splitmix64(key ^ splitmix64(2 * index)));
  const double u2 = unit_open(splitmix64(key ^ splitmix64(2 * index + 1)));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace kernels {

double compensated_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= kSumBlock) return block_partial(values).value();

  const std::size_t blocks = (n + kSumBlock - 1) / kSumBlock;
  std::vector<CompensatedSum> partial(blocks);
  const auto nb = static_cast<std::int64_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::size_t first = static_cast<std::size_t>(b) * kSumBlock;
    const std::size_t len = std::min(kSumBlock, n - first);
    partial[static_cast<std::size_t>(b)] = block_partial(values.subspan(first, len));
  }

  CompensatedSum total;
  for (const auto& p : partial) total.merge(p);
  return total.value();
}

void synthesize_current(std::span<double> out, double mean_ma, double sigma_ma,
                        std::uint64_t seed, std::uint64_t first_index) {
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        clamp_sample(mean_ma, sigma_ma, seed, first_index + static_cast<std::uint64_t>(i));
  }
}

std::vector<double> range_means(std::span<const double> values, std::span<const std::size_t> bounds) {
  if (bounds.size() < 2) return {};
  std::vector<double> out(bounds.size() - 1);
  const auto nb = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t b = 0; b < nb; ++b) {
    const auto i = static_cast<std::size_t>(b);
    out[i] = bucket_mean(values, bounds[i], bounds[i + 1]);
  }
  return out;
}

std::optional<std::size_t> first_above(std::span<const double> values, double limit) {
  const auto n = static_cast<std::int64_t>(values.size());
  std::int64_t found = std::numeric_limits<std::int64_t>::max();
#pragma omp parallel for schedule(static) reduction(min : found) if (n > 8192)
  for (std::int64_t i = 0; i < n; ++i) {
    if (values[static_cast<std::size_t>(i)] > limit && i < found) found = i;
  }
  if (found == std::numeric_limits<std::int64_t>::max()) return std::nullopt;
  return static_cast<std::size_t>(found);
}

}  // namespace kernels

namespace reference {

double compensated_sum(std::span<const double> values) { return block_sum(values); }

void synthesize_current(std::span<double> out, double mean_ma, double sigma_ma,
                        std::uint64_t seed, std::uint64_t first_index) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp_sample(mean_ma, sigma_ma, seed, first_index + i);
  }
}

std::vector<double> range_means(std::span<const double> values, std::span<const std::size_t> bounds) {
  std::vector<double> out;
  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    out.push_back(bucket_mean(values, bounds[b], bounds[b + 1]));
  }
  return out;
}

std::optional<std::size_t> first_above(std::span<const double> values, double limit) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > limit) return i;
  }
  return std::nullopt;
}

}  // namespace reference

}  // namespace pb::trace
