#pragma once

// Core data types for an N-sector production network and the accounting
// identities linking expenditure shares, import ratios and the input-output
// matrix. Matrices are oriented rows = purchasing industry i, columns =
// supplying input j.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace prodnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Shares below this magnitude are treated as exact zeros.
inline constexpr double kShareZero = 1e-14;

/// Sector registry.
class Economy {
 public:
  Economy() = default;
  /// Throws DimensionError on length mismatch, DataError on duplicate codes
  /// or an empty registry. Empty `labels` / `tradeable` are filled with
  /// codes / false.
  Economy(std::vector<std::string> codes, std::vector<std::string> labels = {},
          std::vector<bool> tradeable = {});

  std::size_t n_sectors() const noexcept { return codes_.size(); }
  const std::vector<std::string>& codes() const noexcept { return codes_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<bool>& tradeable() const noexcept { return tradeable_; }

  std::optional<std::size_t> index_of(const std::string& code) const;
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  void set_tradeable(std::vector<bool> flags);

 private:
  std::vector<std::string> codes_;
  std::vector<std::string> labels_;
  std::vector<bool> tradeable_;
};

/// One year of input-output accounts expressed as shares.
struct IOSnapshot {
  int year = 0;
  Matrix omega;   ///< intermediate expenditure shares, rows sum to 1
  Matrix phi;     ///< domestic fraction of spending on composite j
  Vector gamma;   ///< labor shares
  Matrix a;       ///< domestic spend on j over revenue of i
  Vector a0;      ///< household consumption shares
  Vector lambda;  ///< sales shares
  Vector nx;      ///< export expenditures

  std::size_t size() const noexcept { return static_cast<std::size_t>(gamma.size()); }
};

struct Elasticities {
  double sigma = 0.6;  ///< labor vs. intermediate bundle
  Vector theta;        ///< per-sector intermediate input elasticity
  double xi = 1.5;     ///< Armington, domestic vs. imported variety
  double nu = 1.0;     ///< household
  double xi_export = 1.5;

  /// Throws DomainError if any entry is negative / non-finite or xi == 1.
  void validate() const;
  static Elasticities uniform(std::size_t n, double theta, double sigma, double xi,
                              double nu);
};

struct SpectralRadiusBound {
  double lower = 0.0;
  double upper = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Collatz-Wielandt bracketing of the Perron root of a nonnegative matrix,
/// iterating on (I + a) to avoid oscillation for periodic matrices.
SpectralRadiusBound spectral_radius_bound(const Matrix& a, int max_iter = 1000,
                                          double tol = 1e-12);

/// True only when the spectral radius is proven to be strictly below 1.
bool is_leontief_invertible(const Matrix& a);

/// (I - a)^{-1}. Throws InvertibilityError unless the spectral radius of `a`
/// is strictly below 1.
Matrix leontief_inverse(const Matrix& a);

/// a_ij = (1 - gamma_i) * omega_ij * phi_ij.
Matrix build_io_matrix(const Matrix& omega, const Matrix& phi, const Vector& gamma);

/// Expands a per-input import ratio vector into an N x N matrix with
/// identical rows.
Matrix broadcast_import_ratios(const Vector& phi_by_input);

struct Violation {
  std::string invariant;
  std::string detail;
  std::vector<std::size_t> indices;
};

/// Empty iff every IOSnapshot invariant holds.
std::vector<Violation> validate_snapshot(const IOSnapshot& s, double tol = 1e-10);

/// Sets |x| < kShareZero to exactly zero.
void chop_small(Matrix& m);
void chop_small(Vector& v);

}  // namespace prodnet
