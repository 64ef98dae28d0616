#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gibbs/sampler.hpp"

namespace gibbs {

struct CredibleInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;

  /// Inclusive at both endpoints.
  bool contains(double v) const noexcept { return lower <= v && v <= upper; }
  double length() const noexcept { return upper - lower; }
};

/// How per-coordinate interval membership is folded into one coverage value.
class CoverageMode {
 public:
  enum class Kind { per_coordinate_average, all_coordinates, coordinate };

  static CoverageMode per_coordinate_average() { return CoverageMode(Kind::per_coordinate_average, 0); }
  static CoverageMode all_coordinates() { return CoverageMode(Kind::all_coordinates, 0); }
  static CoverageMode coordinate(std::size_t k) { return CoverageMode(Kind::coordinate, k); }

  /// Accepts "average", "all" or "coord:K".
  static CoverageMode parse(std::string_view text);

  CoverageMode() = default;
  Kind kind() const noexcept { return kind_; }
  std::size_t index() const noexcept { return index_; }
  std::string to_string() const;

 private:
  CoverageMode(Kind kind, std::size_t index) : kind_(kind), index_(index) {}
  Kind kind_ = Kind::per_coordinate_average;
  std::size_t index_ = 0;
};

/// Linear interpolation between order statistics at 1-indexed position
/// (n-1)q + 1. `sorted` must be ascending and nonempty.
double interpolated_quantile(std::span<const double> sorted, double q);

/// (q_{alpha/2}, q_{1-alpha/2}) of the draws. Needs at least 20 draws and
/// alpha in (0, 0.5).
CredibleInterval equal_tailed_interval(std::span<const double> draws, double alpha);

/// One equal-tailed interval per coordinate of the sample.
std::vector<CredibleInterval> marginal_intervals(const PosteriorSample& sample, double alpha);

/// Coverage of theta by per-coordinate intervals, in [0, 1].
double coverage_event(std::span<const CredibleInterval> intervals,
                      std::span<const double> theta, const CoverageMode& mode);

}  // namespace gibbs
