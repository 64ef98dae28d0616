#include "gibbs/dataset.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "csv_util.hpp"

namespace gibbs {

Dataset::Dataset(std::vector<double> covariates, std::size_t dim,
                 std::vector<double> responses, ResponseKind kind) {
  if (responses.empty()) {
    throw std::invalid_argument("Dataset: at least one observation is required");
  }
  if (covariates.size() != responses.size() * dim) {
    throw std::invalid_argument("Dataset: covariate table has " +
                                std::to_string(covariates.size()) +
                                " entries, expected " +
                                std::to_string(responses.size() * dim));
  }
  if (kind == ResponseKind::label) {
    for (std::size_t i = 0; i < responses.size(); ++i) {
      if (responses[i] != 1.0 && responses[i] != -1.0) {
        throw std::invalid_argument("Dataset: label at row " + std::to_string(i) +
                                    " is not -1 or +1");
      }
    }
  }
  auto s = std::make_shared<Storage>();
  s->covariates = std::move(covariates);
  s->responses = std::move(responses);
  s->dim = dim;
  s->kind = kind;
  storage_ = std::move(s);
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& covariates,
                           std::vector<double> responses, ResponseKind kind) {
  if (covariates.size() != responses.size()) {
    throw std::invalid_argument("Dataset: row count mismatch between covariates and responses");
  }
  const std::size_t dim = covariates.empty() ? 0 : covariates.front().size();
  std::vector<double> flat;
  flat.reserve(covariates.size() * dim);
  for (const auto& r : covariates) {
    if (r.size() != dim) {
      throw std::invalid_argument("Dataset: rows have differing covariate dimension");
    }
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Dataset(std::move(flat), dim, std::move(responses), kind);
}

Dataset Dataset::from_values(std::vector<double> values) {
  return Dataset({}, 0, std::move(values), ResponseKind::real);
}

std::size_t Dataset::dim() const noexcept { return storage_->dim; }

ResponseKind Dataset::response_kind() const noexcept { return storage_->kind; }

std::span<const double> Dataset::covariates() const noexcept { return storage_->covariates; }

std::span<const double> Dataset::responses() const noexcept { return storage_->responses; }

Observation Dataset::row(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("Dataset::row: index out of range");
  const std::size_t d = storage_->dim;
  return {std::span<const double>(storage_->covariates).subspan(i * d, d),
          storage_->responses[i]};
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  const std::size_t d = storage_->dim;
  std::vector<double> cov;
  std::vector<double> resp;
  cov.reserve(indices.size() * d);
  resp.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("Dataset::subset: index out of range");
    const auto* src = storage_->covariates.data() + i * d;
    cov.insert(cov.end(), src, src + d);
    resp.push_back(storage_->responses[i]);
  }
  return Dataset(std::move(cov), d, std::move(resp), storage_->kind);
}

Dataset with_intercept(const Dataset& data) {
  const std::size_t d = data.dim();
  std::vector<double> cov;
  cov.reserve(data.size() * (d + 1));
  for (std::size_t i = 0; i < data.size(); ++i) {
    cov.push_back(1.0);
    const auto x = data.row(i).covariates;
    cov.insert(cov.end(), x.begin(), x.end());
  }
  auto resp = std::vector<double>(data.responses().begin(), data.responses().end());
  return Dataset(std::move(cov), d + 1, std::move(resp), data.response_kind());
}

Dataset read_dataset_csv(std::istream& in, ResponseKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset CSV: missing header");
  const auto header = csv::split(line);
  if (header.empty() || csv::trim(header.back()) != "y") {
    throw std::invalid_argument("dataset CSV: last header column must be 'y'");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t k = 0; k < dim; ++k) {
    if (csv::trim(header[k]) != "x" + std::to_string(k + 1)) {
      throw std::invalid_argument("dataset CSV: expected header column x" +
                                  std::to_string(k + 1));
    }
  }
  std::vector<double> cov;
  std::vector<double> resp;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != dim + 1) {
      throw std::invalid_argument("dataset CSV: line " + std::to_string(line_no) +
                                  " has " + std::to_string(fields.size()) + " fields");
    }
    for (std::size_t k = 0; k < dim; ++k) cov.push_back(csv::parse_double(fields[k], line_no));
    resp.push_back(csv::parse_double(fields[dim], line_no));
  }
  return Dataset(std::move(cov), dim, std::move(resp), kind);
}

Dataset read_dataset_csv(const std::filesystem::path& path, ResponseKind kind) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file " + path.string());
  return read_dataset_csv(in, kind);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const std::size_t d = data.dim();
  for (std::size_t k = 0; k < d; ++k) out << 'x' << (k + 1) << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto obs = data.row(i);
    for (double x : obs.covariates) out << csv::format_double(x) << ',';
    if (data.response_kind() == ResponseKind::label) {
      out << (obs.response > 0 ? "1" : "-1") << '\n';
    } else {
      out << csv::format_double(obs.response) << '\n';
    }
  }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open " + path.string() + " for writing");
  write_dataset_csv(out, data);
}

}  // namespace gibbs
