#include "sisvive/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <Eigen/SVD>

#include "sisvive/csv.hpp"
#include "sisvive/error.hpp"
#include "sisvive/projection.hpp"

namespace sisvive {

namespace {

constexpr double kInvariantTol = 1e-10;

std::vector<std::string> default_names(Eigen::Index l) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(l));
  for (Eigen::Index j = 0; j < l; ++j) names.push_back("z" + std::to_string(j + 1));
  return names;
}

void check_preprocessed_invariants(const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                                   const Eigen::MatrixXd& z) {
  const Eigen::Index n = y.size();
  const Eigen::Index l = z.cols();
  if (n < l + 2) {
    throw Error(ErrorCode::kTooFewObservations,
                "need n >= L + 2 observations (n = " + std::to_string(n) +
                    ", L = " + std::to_string(l) + ")");
  }
  if (std::abs(y.mean()) >= kInvariantTol || std::abs(d.mean()) >= kInvariantTol) {
    throw Error(ErrorCode::kInvalidArgument, "outcome and exposure must be centered");
  }
  for (Eigen::Index j = 0; j < l; ++j) {
    if (std::abs(z.col(j).mean()) >= kInvariantTol ||
        std::abs(z.col(j).norm() - 1.0) >= kInvariantTol) {
      throw Error(ErrorCode::kInvalidArgument,
                  "instrument column " + std::to_string(j + 1) +
                      " is not centered with unit norm");
    }
  }
  if (numerical_rank(z) < l) {
    throw Error(ErrorCode::kRankDeficient, "instrument matrix is rank deficient");
  }
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::VectorXd d, Eigen::MatrixXd z,
                 std::optional<Eigen::MatrixXd> x, std::vector<std::string> instrument_names)
    : y_(std::move(y)),
      d_(std::move(d)),
      z_(std::move(z)),
      x_(std::move(x)),
      names_(std::move(instrument_names)) {
  const Eigen::Index n = y_.size();
  if (d_.size() != n || z_.rows() != n || (x_ && x_->rows() != n)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "outcome, exposure, instruments and covariates must have the same row count");
  }
  if (z_.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "at least one instrument is required");
  }
  if (names_.empty()) {
    names_ = default_names(z_.cols());
  } else if (static_cast<Eigen::Index>(names_.size()) != z_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "instrument name count does not match columns");
  }
}

Dataset Dataset::from_preprocessed(Eigen::VectorXd y, Eigen::VectorXd d, Eigen::MatrixXd z,
                                   std::vector<std::string> instrument_names) {
  Dataset ds(std::move(y), std::move(d), std::move(z), std::nullopt,
             std::move(instrument_names));
  check_preprocessed_invariants(ds.y_, ds.d_, ds.z_);
  ds.preprocessed_ = true;
  return ds;
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(m), d(m);
  Eigen::MatrixXd z(m, z_.cols());
  std::optional<Eigen::MatrixXd> x;
  if (x_) x.emplace(m, x_->cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= n()) throw Error(ErrorCode::kInvalidArgument, "row index out of range");
    y(i) = y_(r);
    d(i) = d_(r);
    z.row(i) = z_.row(r);
    if (x) x->row(i) = x_->row(r);
  }
  return Dataset(std::move(y), std::move(d), std::move(z), std::move(x), names_);
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  return (sv.array() > tol).count();
}

std::pair<Dataset, ScalingRecord> preprocess(const Dataset& ds) {
  if (ds.preprocessed()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset is already preprocessed");
  }
  const Eigen::Index n = ds.n();
  const Eigen::Index l = ds.num_instruments();

  ScalingRecord record;
  record.z_means = ds.z().colwise().mean().transpose();
  record.y_mean = ds.y().mean();
  record.d_mean = ds.d().mean();

  Eigen::VectorXd y, d;
  Eigen::MatrixXd z;
  if (ds.x()) {
    // An empty covariate matrix means intercept-only residualization.
    const Eigen::MatrixXd& x = *ds.x();
    Eigen::MatrixXd design(n, x.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(x.cols()) = x;
    if (numerical_rank(design) < design.cols()) {
      throw Error(ErrorCode::kRankDeficient,
                  "covariates together with the intercept are rank deficient");
    }
    const Projector px(design);
    y = px.apply_complement(ds.y());
    d = px.apply_complement(ds.d());
    z = px.apply_complement(ds.z());
    record.residualized_on_covariates = true;
  } else {
    y = ds.y().array() - record.y_mean;
    d = ds.d().array() - record.d_mean;
    z = ds.z().rowwise() - record.z_means.transpose();
  }

  record.z_norms.resize(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    const double raw_norm = ds.z().col(j).norm();
    const double norm = z.col(j).norm();
    if (!(norm >= kZeroVarianceTol * std::max(1.0, raw_norm))) {
      throw Error(ErrorCode::kZeroVarianceInstrument,
                  "instrument '" + ds.instrument_names()[static_cast<std::size_t>(j)] +
                      "' has zero variance after centering");
    }
    record.z_norms(j) = norm;
    z.col(j) /= norm;
  }

  if (n < l + 2) {
    throw Error(ErrorCode::kTooFewObservations,
                "need n >= L + 2 observations (n = " + std::to_string(n) +
                    ", L = " + std::to_string(l) + ")");
  }
  if (numerical_rank(z) < l) {
    throw Error(ErrorCode::kRankDeficient, "instrument matrix is rank deficient");
  }

  Dataset out(std::move(y), std::move(d), std::move(z), std::nullopt, ds.instrument_names());
  out.preprocessed_ = true;
  out.scaling_ = record;
  return {std::move(out), std::move(record)};
}

Dataset load_csv(const std::string& path, const ColumnRoles& roles) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open data file '" + path + "'");
  const std::vector<csv::Row> rows = csv::parse(in);
  if (rows.empty()) throw Error(ErrorCode::kMalformedCsv, "'" + path + "' has no header row");

  std::map<std::string, std::size_t> column_index;
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    const std::string name = trim(rows[0][c]);
    if (!column_index.emplace(name, c).second) {
      throw Error(ErrorCode::kMalformedCsv, "duplicate header column '" + name + "'");
    }
  }

  // Every role column must be distinct.
  std::set<std::string> assigned;
  auto claim = [&](const std::string& name, const char* role) {
    if (name.empty()) {
      throw Error(ErrorCode::kInvalidArgument, std::string("no column given for role ") + role);
    }
    if (!assigned.insert(name).second) {
      throw Error(ErrorCode::kDuplicateRole,
                  "column '" + name + "' is assigned to more than one role");
    }
    const auto it = column_index.find(name);
    if (it == column_index.end()) {
      throw Error(ErrorCode::kUnknownColumn, "unknown column '" + name + "'");
    }
    return it->second;
  };
  const std::size_t y_col = claim(roles.outcome, "outcome");
  const std::size_t d_col = claim(roles.exposure, "exposure");
  if (roles.instruments.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one instrument column is required");
  }
  std::vector<std::size_t> z_cols, x_cols;
  for (const auto& name : roles.instruments) z_cols.push_back(claim(name, "instrument"));
  for (const auto& name : roles.covariates) x_cols.push_back(claim(name, "covariate"));

  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  const std::size_t width = rows[0].size();
  auto cell = [&](Eigen::Index i, std::size_t c) {
    const auto& row = rows[static_cast<std::size_t>(i) + 1];
    if (row.size() != width) {
      throw Error(ErrorCode::kMalformedCsv, "row " + std::to_string(i + 1) + " has " +
                                                std::to_string(row.size()) + " fields, expected " +
                                                std::to_string(width));
    }
    const std::string text = trim(row[c]);
    const std::string& column = trim(rows[0][c]);
    if (text.empty() || text == "NA" || text == "NaN" || text == "nan") {
      throw Error(ErrorCode::kMissingValue, "missing value at row " + std::to_string(i + 1) +
                                                ", column '" + column + "'");
    }
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
      throw Error(ErrorCode::kNonNumericCell, "non-numeric value '" + text + "' at row " +
                                                  std::to_string(i + 1) + ", column '" + column +
                                                  "'");
    }
    return value;
  };

  Eigen::VectorXd y(n), d(n);
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(z_cols.size()));
  std::optional<Eigen::MatrixXd> x;
  if (!x_cols.empty()) x.emplace(n, static_cast<Eigen::Index>(x_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = cell(i, y_col);
    d(i) = cell(i, d_col);
    for (std::size_t k = 0; k < z_cols.size(); ++k) {
      z(i, static_cast<Eigen::Index>(k)) = cell(i, z_cols[k]);
    }
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      (*x)(i, static_cast<Eigen::Index>(k)) = cell(i, x_cols[k]);
    }
  }
  return Dataset(std::move(y), std::move(d), std::move(z), std::move(x), roles.instruments);
}

}  // namespace sisvive
