#include "gibbs/credible.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gibbs {

CoverageMode CoverageMode::parse(std::string_view text) {
  if (text == "average" || text == "per_coordinate_average") return per_coordinate_average();
  if (text == "all" || text == "all_coordinates") return all_coordinates();
  if (text.starts_with("coord:")) {
    text.remove_prefix(6);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
    if (ec == std::errc() && ptr == text.data() + text.size() && !text.empty()) {
      return coordinate(k);
    }
  }
  throw std::invalid_argument("unknown coverage mode '" + std::string(text) +
                              "' (expected average, all or coord:K)");
}

std::string CoverageMode::to_string() const {
  switch (kind_) {
    case Kind::per_coordinate_average:
      return "average";
    case Kind::all_coordinates:
      return "all";
    case Kind::coordinate:
      return "coord:" + std::to_string(index_);
  }
  return "average";
}

double interpolated_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("interpolated_quantile: no values");
  q = std::clamp(q, 0.0, 1.0);
  const double pos = static_cast<double>(sorted.size() - 1) * q;  // 0-indexed
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

CredibleInterval equal_tailed_interval(std::span<const double> draws, double alpha) {
  if (draws.size() < 20) {
    throw std::invalid_argument("equal_tailed_interval: need at least 20 draws");
  }
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw std::invalid_argument("equal_tailed_interval: alpha must lie in (0, 0.5)");
  }
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  return {interpolated_quantile(sorted, alpha / 2.0),
          interpolated_quantile(sorted, 1.0 - alpha / 2.0), 1.0 - alpha};
}

std::vector<CredibleInterval> marginal_intervals(const PosteriorSample& sample, double alpha) {
  std::vector<CredibleInterval> out;
  out.reserve(sample.param_dim);
  for (std::size_t k = 0; k < sample.param_dim; ++k) {
    out.push_back(equal_tailed_interval(sample.column(k), alpha));
  }
  return out;
}

double coverage_event(std::span<const CredibleInterval> intervals,
                      std::span<const double> theta, const CoverageMode& mode) {
  if (intervals.size() != theta.size() || theta.empty()) {
    throw std::invalid_argument("coverage_event: need one interval per coordinate");
  }
  switch (mode.kind()) {
    case CoverageMode::Kind::coordinate:
      if (mode.index() >= theta.size()) {
        throw std::invalid_argument("coverage_event: coordinate index out of range");
      }
      return intervals[mode.index()].contains(theta[mode.index()]) ? 1.0 : 0.0;
    case CoverageMode::Kind::all_coordinates:
      for (std::size_t k = 0; k < theta.size(); ++k) {
        if (!intervals[k].contains(theta[k])) return 0.0;
      }
      return 1.0;
    case CoverageMode::Kind::per_coordinate_average: {
      std::size_t hits = 0;
      for (std::size_t k = 0; k < theta.size(); ++k) hits += intervals[k].contains(theta[k]);
      return static_cast<double>(hits) / static_cast<double>(theta.size());
    }
  }
  return 0.0;
}

}  // namespace gibbs
