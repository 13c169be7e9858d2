#include "prodnet/economy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "prodnet/errors.hpp"

namespace prodnet {

Economy::Economy(std::vector<std::string> codes, std::vector<std::string> labels,
                 std::vector<bool> tradeable)
    : codes_(std::move(codes)), labels_(std::move(labels)), tradeable_(std::move(tradeable)) {
  if (codes_.empty()) throw DataError("economy must contain at least one sector");
  if (labels_.empty()) labels_ = codes_;
  if (tradeable_.empty()) tradeable_.assign(codes_.size(), false);
  if (labels_.size() != codes_.size() || tradeable_.size() != codes_.size())
    throw DimensionError("economy: codes, labels and tradeable flags differ in length");
  std::set<std::string> seen;
  for (const auto& c : codes_)
    if (!seen.insert(c).second) throw DataError("economy: duplicate sector code '" + c + "'");
}

std::optional<std::size_t> Economy::index_of(const std::string& code) const {
  auto it = std::find(codes_.begin(), codes_.end(), code);
  if (it == codes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - codes_.begin());
}

void Economy::set_tradeable(std::vector<bool> flags) {
  if (flags.size() != codes_.size()) throw DimensionError("economy: tradeable flag count");
  tradeable_ = std::move(flags);
}

void Elasticities::validate() const {
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
  if (bad(sigma) || sigma == 0.0) throw DomainError("sigma must be finite and positive");
  if (bad(xi) || xi == 0.0) throw DomainError("xi must be finite and positive");
  if (xi == 1.0) throw DomainError("xi must differ from 1");
  if (bad(nu) || nu == 0.0) throw DomainError("nu must be finite and positive");
  if (bad(xi_export) || xi_export == 0.0) throw DomainError("xi_export must be finite and positive");
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (bad(theta[i])) throw DomainError("theta[" + std::to_string(i) + "] must be finite and >= 0");
}

Elasticities Elasticities::uniform(std::size_t n, double theta, double sigma, double xi,
                                   double nu) {
  Elasticities e;
  e.sigma = sigma;
  e.theta = Vector::Constant(static_cast<Eigen::Index>(n), theta);
  e.xi = xi;
  e.nu = nu;
  e.xi_export = xi;
  return e;
}

SpectralRadiusBound spectral_radius_bound(const Matrix& a, int max_iter, double tol) {
  if (a.rows() != a.cols()) throw DimensionError("spectral radius: matrix must be square");
  SpectralRadiusBound out;
  const Eigen::Index n = a.rows();
  if (n == 0) {
    out.converged = true;
    return out;
  }
  Vector x = Vector::Ones(n);
  for (int it = 1; it <= max_iter; ++it) {
    Vector y = a * x + x;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y[i] / x[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    out.lower = lo - 1.0;
    out.upper = hi - 1.0;
    out.iterations = it;
    if (hi - lo <= tol * std::max(1.0, hi)) {
      out.converged = true;
      return out;
    }
    x = y / y.maxCoeff();
    // Entries can underflow for reducible matrices; keep x strictly positive.
    for (Eigen::Index i = 0; i < n; ++i) x[i] = std::max(x[i], 1e-300);
  }
  return out;
}

bool is_leontief_invertible(const Matrix& a) {
  if ((a.array() < 0.0).any()) {
    Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff() < 1.0;
  }
  const auto b = spectral_radius_bound(a);
  // An unconverged bracket still proves invertibility when its upper end is below 1.
  return b.upper < 1.0;
}

Matrix leontief_inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("leontief_inverse: matrix must be square");
  if (!a.allFinite()) throw InvertibilityError("leontief_inverse: non-finite entries");
  if (!is_leontief_invertible(a))
    throw InvertibilityError("leontief_inverse: spectral radius of the input-output matrix is not below 1");
  const Eigen::Index n = a.rows();
  Matrix psi = (Matrix::Identity(n, n) - a).partialPivLu().inverse();
  if (!psi.allFinite()) throw InvertibilityError("leontief_inverse: I - A is singular");
  return psi;
}

Matrix build_io_matrix(const Matrix& omega, const Matrix& phi, const Vector& gamma) {
  const Eigen::Index n = gamma.size();
  if (omega.rows() != n || omega.cols() != n || phi.rows() != n || phi.cols() != n)
    throw DimensionError("build_io_matrix: omega, phi and gamma dimensions disagree");
  Matrix a = omega.cwiseProduct(phi);
  for (Eigen::Index i = 0; i < n; ++i) a.row(i) *= (1.0 - gamma[i]);
  chop_small(a);
  return a;
}

Matrix broadcast_import_ratios(const Vector& phi_by_input) {
  const Eigen::Index n = phi_by_input.size();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = phi_by_input.transpose();
  return out;
}

void chop_small(Matrix& m) {
  m = m.unaryExpr([](double v) { return std::abs(v) < kShareZero ? 0.0 : v; });
}

void chop_small(Vector& v) {
  v = v.unaryExpr([](double x) { return std::abs(x) < kShareZero ? 0.0 : x; });
}

std::vector<Violation> validate_snapshot(const IOSnapshot& s, double tol) {
  std::vector<Violation> out;
  const Eigen::Index n = s.gamma.size();
  auto dims_ok = [n](const Matrix& m) { return m.rows() == n && m.cols() == n; };
  if (n == 0 || !dims_ok(s.omega) || !dims_ok(s.phi) || !dims_ok(s.a) || s.a0.size() != n ||
      (s.lambda.size() != 0 && s.lambda.size() != n) || (s.nx.size() != 0 && s.nx.size() != n)) {
    out.push_back({"dimensions", "snapshot arrays do not share a common sector count", {}});
    return out;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double sum = s.omega.row(i).sum();
    if (sum > kShareZero && std::abs(sum - 1.0) > tol) {
      std::ostringstream msg;
      msg << "omega row " << i << " sums to " << sum;
      out.push_back({"omega_row_sum", msg.str(), {static_cast<std::size_t>(i)}});
    }
  }

  auto check_range = [&](const char* name, auto&& arr, bool upper) {
    for (Eigen::Index k = 0; k < arr.size(); ++k) {
      const double v = arr.data()[k];
      if (!std::isfinite(v) || v < -tol || (upper && v > 1.0 + tol)) {
        std::ostringstream msg;
        msg << name << " entry " << k << " = " << v << " outside " << (upper ? "[0,1]" : "[0,inf)");
        out.push_back({std::string(name) + "_range", msg.str(), {static_cast<std::size_t>(k)}});
      }
    }
  };
  check_range("omega", s.omega, true);
  check_range("phi", s.phi, true);
  check_range("gamma", s.gamma, true);
  check_range("a", s.a, true);
  check_range("a0", s.a0, true);

  const Matrix expected = build_io_matrix(s.omega, s.phi, s.gamma);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(expected(i, j) - s.a(i, j)) > tol) {
        std::ostringstream msg;
        msg << "a(" << i << "," << j << ") = " << s.a(i, j) << " but (1-gamma)*omega*phi = "
            << expected(i, j);
        out.push_back({"io_identity", msg.str(),
                       {static_cast<std::size_t>(i), static_cast<std::size_t>(j)}});
      }

  if (std::abs(s.a0.sum() - 1.0) > tol) {
    std::ostringstream msg;
    msg << "household shares sum to " << s.a0.sum();
    out.push_back({"a0_sum", msg.str(), {}});
  }

  if (!s.a.allFinite() || !is_leontief_invertible(s.a)) {
    const auto b = spectral_radius_bound(s.a);
    std::ostringstream msg;
    msg << "spectral radius of a not proven below 1 (bracket [" << b.lower << ", " << b.upper << "])";
    out.push_back({"leontief_invertibility", msg.str(), {}});
  }
  return out;
}

}  // namespace prodnet
