#pragma once

#include <string>

#include <Eigen/Core>

#include "sisvive/dataset.hpp"

namespace sisvive {

/// Mutual incoherence constants of unit-norm instruments.
struct MipDiagnostics {
  double mu = 0.0;     // max_{i != j} |Z_i^T Z_j|
  double rho = 0.0;    // max_j |Dhat^T Z_j| / ||Dhat||
  double s_max = 0.0;  // min(1 / (12 mu), 1 / (10 rho^2)); +inf terms when mu or rho is 0
};

MipDiagnostics mip_constants(const Dataset& ds);

/// Upper bound on |beta_hat - beta| at `lambda` for s invalid instruments and
/// known structural errors `epsilon`. Throws Error(kBoundInapplicable) unless
/// s < s_max.
double corollary2_error_bound(const Dataset& ds, Eigen::Index s, double lambda,
                              const Eigen::VectorXd& epsilon);

enum class RipMatrix { kInstruments, kProjectedOnDhat, kOther };

struct RipDiagnostics {
  Eigen::Index k = 0;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  RipMatrix matrix = RipMatrix::kOther;
};

std::string to_string(RipMatrix m);

/// Exhaustive enumeration is exponential in the column count.
inline constexpr Eigen::Index kMaxRipColumns = 20;

/// Restricted isometry constants of order k: extreme eigenvalues of the Gram
/// submatrices over every size-k support. Throws Error(kTooManyInstruments)
/// when m has more than kMaxRipColumns columns.
RipDiagnostics rip_constants(const Eigen::MatrixXd& m, Eigen::Index k,
                             RipMatrix tag = RipMatrix::kOther);
/// Same for Z or P_Dhat Z of a preprocessed dataset.
RipDiagnostics rip_constants(const Dataset& ds, Eigen::Index k, RipMatrix which);

struct StrengthDiagnostics {
  double first_stage_f = 0.0;
  double concentration_scaled = 0.0;
  bool infinite = false;  // exposure lies exactly in the instrument span
};

StrengthDiagnostics strength(const Dataset& ds);

struct SarganResult {
  double statistic = 0.0;
  Eigen::Index df = 0;
  double p_value = 1.0;
};

/// n e^T P_Z e / e^T e with e = Y - D beta_hat, referred to chi-square(L - 1).
SarganResult sargan_test(const Dataset& ds, double beta_hat);

}  // namespace sisvive
