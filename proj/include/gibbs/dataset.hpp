#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace gibbs {

/// Whether responses are real-valued or class labels in {-1, +1}.
enum class ResponseKind { real, label };

/// Non-owning view of one row of a Dataset.
struct Observation {
  std::span<const double> covariates;
  double response = 0.0;
};

/// Immutable table of observations. Copies share the underlying storage.
///
/// Covariates are stored row-major with a fixed dimension per row; the
/// dimension may be zero (e.g. a plain sample of scalars).
class Dataset {
 public:
  Dataset(std::vector<double> covariates, std::size_t dim,
          std::vector<double> responses,
          ResponseKind kind = ResponseKind::real);

  static Dataset from_rows(const std::vector<std::vector<double>>& covariates,
                           std::vector<double> responses,
                           ResponseKind kind = ResponseKind::real);

  /// Scalar sample with no covariates.
  static Dataset from_values(std::vector<double> values);

  std::size_t size() const noexcept { return responses().size(); }
  std::size_t dim() const noexcept;
  ResponseKind response_kind() const noexcept;

  Observation row(std::size_t i) const;
  std::span<const double> covariates() const noexcept;
  std::span<const double> responses() const noexcept;

  /// New dataset made of the given rows; indices may repeat.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  struct Storage {
    std::vector<double> covariates;
    std::vector<double> responses;
    std::size_t dim = 0;
    ResponseKind kind = ResponseKind::real;
  };
  std::shared_ptr<const Storage> storage_;
};

// CSV with a header row `x1,...,xp,y`. Decimal point is always '.'.
Dataset read_dataset_csv(std::istream& in, ResponseKind kind = ResponseKind::real);
Dataset read_dataset_csv(const std::filesystem::path& path,
                         ResponseKind kind = ResponseKind::real);
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Same data with a constant-1 column prepended to the covariates.
Dataset with_intercept(const Dataset& data);

}  // namespace gibbs
