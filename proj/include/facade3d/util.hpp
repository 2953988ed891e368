#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>
#include <vector>

namespace facade3d {

/// Seeded RNG used by every stochastic operation. Seeds are always explicit;
/// there is no global RNG state anywhere in the library.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Derives an independent stream seed from (seed, tag, index). Used so that
/// per-item work (one RANSAC run per image, one noise stream per row) is
/// reproducible regardless of thread count or execution order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index);

/// Runs fn(i) for i in [begin, end) on up to num_threads threads
/// (0 = hardware concurrency). Static chunking; fn must only write to
/// per-index state. The first exception thrown by any worker is rethrown.
void parallel_for(int begin, int end, int num_threads,
                  const std::function<void(int)>& fn);

/// Median of a sample (average of the two middle values for even sizes).
double median(std::vector<double> values);

/// Linearly interpolated inclusive percentile, pct in [0, 100].
double percentile(std::vector<double> values, double pct);

inline double deg2rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }

constexpr double kPi = 3.14159265358979323846;

}  // namespace facade3d
