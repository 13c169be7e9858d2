#include "prodnet/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <sstream>

#include "prodnet/errors.hpp"

namespace prodnet {

namespace {

// Per-sector cross products of the residualized variables; every moment and
// its Jacobian is linear in these, so the objective costs O(N).
struct SectorSums {
  double pp = 0.0, pf = 0.0, ff = 0.0, pw = 0.0, fw = 0.0;
  std::size_t count = 0;
};

std::vector<SectorSums> sector_sums(const ResidualizedPanel& rp) {
  std::vector<SectorSums> s(rp.n_sectors);
  for (const auto& o : rp.obs) {
    auto& x = s[o.i];
    x.pp += o.dlog_p * o.dlog_p;
    x.pf += o.dlog_p * o.dlog_phi;
    x.ff += o.dlog_phi * o.dlog_phi;
    x.pw += o.dlog_p * o.dlog_omega;
    x.fw += o.dlog_phi * o.dlog_omega;
    ++x.count;
  }
  return s;
}

void require_xi(double xi) {
  if (xi == 1.0) throw SingularityError("reduced-form coefficient on the import ratio is singular at xi = 1");
}

// Mode-specific layout of parameters and moments.
struct Layout {
  EstimationMode mode;
  std::size_t n;  // sectors

  std::size_t n_params() const {
    switch (mode) {
      case EstimationMode::sector_specific: return n + 1;
      case EstimationMode::uniform: return 2;
      case EstimationMode::biased_closed: return n;
    }
    return 0;
  }
  std::size_t n_moments() const {
    switch (mode) {
      case EstimationMode::sector_specific: return 2 * n;
      case EstimationMode::uniform: return 2;
      case EstimationMode::biased_closed: return n;
    }
    return 0;
  }
  bool has_xi() const { return mode != EstimationMode::biased_closed; }
  std::size_t theta_index(std::size_t i) const { return mode == EstimationMode::uniform ? 0 : i; }
  std::size_t xi_index() const { return mode == EstimationMode::uniform ? 1 : n; }
  // Moment slots of sector i: price, import ratio (npos when absent).
  std::size_t p_slot(std::size_t i) const { return mode == EstimationMode::uniform ? 0 : i; }
  std::size_t f_slot(std::size_t i) const {
    switch (mode) {
      case EstimationMode::sector_specific: return n + i;
      case EstimationMode::uniform: return 1;
      case EstimationMode::biased_closed: return npos;
    }
    return npos;
  }
  std::string param_name(std::size_t k) const {
    if (has_xi() && k == xi_index()) return "xi";
    if (mode == EstimationMode::uniform) return "theta";
    return "theta_" + std::to_string(k);
  }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct Params {
  Vector theta;  // length n (uniform: repeated)
  double xi;
};

Params unpack(const Layout& L, const Vector& x, double xi_fixed) {
  Params p;
  p.theta.resize(static_cast<Eigen::Index>(L.n));
  for (std::size_t i = 0; i < L.n; ++i) p.theta[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(L.theta_index(i))];
  p.xi = L.has_xi() ? x[static_cast<Eigen::Index>(L.xi_index())] : xi_fixed;
  return p;
}

Vector moments_from_sums(const Layout& L, const std::vector<SectorSums>& s, const Params& p, double nobs) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(L.n_moments()));
  if (L.has_xi()) require_xi(p.xi);
  for (std::size_t i = 0; i < L.n; ++i) {
    const double th = p.theta[static_cast<Eigen::Index>(i)];
    const double b1 = 1.0 - th;
    const double b2 = L.has_xi() ? (p.xi - th) / (p.xi - 1.0) : 0.0;
    g[static_cast<Eigen::Index>(L.p_slot(i))] += (s[i].pw - b1 * s[i].pp - b2 * s[i].pf) / nobs;
    if (L.f_slot(i) != Layout::npos)
      g[static_cast<Eigen::Index>(L.f_slot(i))] += (s[i].fw - b1 * s[i].pf - b2 * s[i].ff) / nobs;
  }
  return g;
}

Matrix jacobian_from_sums(const Layout& L, const std::vector<SectorSums>& s, const Params& p, double nobs) {
  Matrix G = Matrix::Zero(static_cast<Eigen::Index>(L.n_moments()), static_cast<Eigen::Index>(L.n_params()));
  if (L.has_xi()) require_xi(p.xi);
  for (std::size_t i = 0; i < L.n; ++i) {
    const auto ps = static_cast<Eigen::Index>(L.p_slot(i));
    const auto ti = static_cast<Eigen::Index>(L.theta_index(i));
    if (!L.has_xi()) {
      G(ps, ti) += s[i].pp / nobs;
      continue;
    }
    const double th = p.theta[static_cast<Eigen::Index>(i)];
    const double inv = 1.0 / (p.xi - 1.0);
    // d eps/d theta = p + f/(xi-1); d eps/d xi = -f (theta-1)/(xi-1)^2.
    const double dxi = -(th - 1.0) * inv * inv;
    const auto fs = static_cast<Eigen::Index>(L.f_slot(i));
    const auto xk = static_cast<Eigen::Index>(L.xi_index());
    G(ps, ti) += (s[i].pp + s[i].pf * inv) / nobs;
    G(fs, ti) += (s[i].pf + s[i].ff * inv) / nobs;
    G(ps, xk) += dxi * s[i].pf / nobs;
    G(fs, xk) += dxi * s[i].ff / nobs;
  }
  return G;
}

Vector pack_theta_for(const Layout& L, const Vector& theta) {
  if (L.mode == EstimationMode::uniform) {
    if (theta.size() != 1 && theta.size() != static_cast<Eigen::Index>(L.n))
      throw DimensionError("uniform mode expects a single theta");
    return Vector::Constant(static_cast<Eigen::Index>(L.n), theta[0]);
  }
  if (theta.size() != static_cast<Eigen::Index>(L.n)) throw DimensionError("theta length does not match sectors");
  return theta;
}

}  // namespace

ResidualizedPanel residualize(const Panel& panel, std::size_t n_sectors) {
  ResidualizedPanel rp;
  rp.n_sectors = n_sectors;
  rp.obs = panel;
  rp.group.resize(panel.size());
  std::map<std::pair<std::size_t, int>, std::size_t> ids;
  for (std::size_t k = 0; k < panel.size(); ++k) {
    if (panel[k].i >= n_sectors) throw DimensionError("residualize: purchaser index out of range");
    const auto it = ids.try_emplace({panel[k].i, panel[k].t}, ids.size()).first;
    rp.group[k] = it->second;
  }
  rp.n_groups = ids.size();
  std::vector<double> mw(rp.n_groups), mp(rp.n_groups), mf(rp.n_groups);
  std::vector<std::size_t> cnt(rp.n_groups);
  for (std::size_t k = 0; k < panel.size(); ++k) {
    const auto g = rp.group[k];
    mw[g] += panel[k].dlog_omega;
    mp[g] += panel[k].dlog_p;
    mf[g] += panel[k].dlog_phi;
    ++cnt[g];
  }
  for (std::size_t g = 0; g < rp.n_groups; ++g) {
    const double c = static_cast<double>(cnt[g]);
    mw[g] /= c;
    mp[g] /= c;
    mf[g] /= c;
  }
  for (std::size_t k = 0; k < panel.size(); ++k) {
    const auto g = rp.group[k];
    rp.obs[k].dlog_omega -= mw[g];
    rp.obs[k].dlog_p -= mp[g];
    rp.obs[k].dlog_phi -= mf[g];
  }
  return rp;
}

StructuralCoefficients structural_coefficients(double theta, double xi) {
  require_xi(xi);
  return {1.0 - theta, (xi - theta) / (xi - 1.0)};
}

MomentVector moment_conditions(const Vector& theta, double xi, const ResidualizedPanel& rp) {
  if (rp.obs.empty()) throw EstimationError("moment_conditions: residualized panel is empty");
  const Layout L{EstimationMode::sector_specific, rp.n_sectors};
  const auto s = sector_sums(rp);
  MomentVector out;
  out.g = moments_from_sums(L, s, {pack_theta_for(L, theta), xi}, static_cast<double>(rp.size()));
  for (std::size_t i = 0; i < rp.n_sectors; ++i)
    if (s[i].count == 0) out.empty.push_back(i);
  return out;
}

double gmm_objective(const Vector& theta, double xi, const ResidualizedPanel& rp) {
  return moment_conditions(theta, xi, rp).g.squaredNorm();
}

std::string to_string(EstimationMode mode) {
  switch (mode) {
    case EstimationMode::sector_specific: return "sector_specific";
    case EstimationMode::uniform: return "uniform";
    case EstimationMode::biased_closed: return "biased_closed";
  }
  return "unknown";
}

EstimationMode parse_estimation_mode(const std::string& s) {
  if (s == "sector_specific") return EstimationMode::sector_specific;
  if (s == "uniform") return EstimationMode::uniform;
  if (s == "biased_closed" || s == "biased") return EstimationMode::biased_closed;
  throw DomainError("unknown estimation mode '" + s + "'");
}

SandwichResult sandwich_variance(const Vector& theta, double xi, const ResidualizedPanel& rp, EstimationMode mode) {
  if (rp.obs.empty()) throw EstimationError("sandwich_variance: residualized panel is empty");
  const Layout L{mode, rp.n_sectors};
  const Params p{pack_theta_for(L, theta), xi};
  const double nobs = static_cast<double>(rp.size());
  const auto s = sector_sums(rp);

  SandwichResult out;
  out.G = jacobian_from_sums(L, s, p, nobs);
  const auto m = static_cast<Eigen::Index>(L.n_moments());
  out.Omega = Matrix::Zero(m, m);
  for (const auto& o : rp.obs) {
    const double th = p.theta[static_cast<Eigen::Index>(o.i)];
    const double b2 = L.has_xi() ? (p.xi - th) / (p.xi - 1.0) : 0.0;
    const double eps = o.dlog_omega - (1.0 - th) * o.dlog_p - b2 * o.dlog_phi;
    const auto ps = static_cast<Eigen::Index>(L.p_slot(o.i));
    const double gp = o.dlog_p * eps;
    out.Omega(ps, ps) += gp * gp;
    if (L.f_slot(o.i) != Layout::npos) {
      const auto fs = static_cast<Eigen::Index>(L.f_slot(o.i));
      const double gf = o.dlog_phi * eps;
      out.Omega(fs, fs) += gf * gf;
      out.Omega(ps, fs) += gp * gf;
      out.Omega(fs, ps) += gp * gf;
    }
  }
  out.Omega /= nobs;

  const Matrix& G = out.G;
  const double scale = G.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < G.cols(); ++k)
    if (!(G.col(k).norm() > 1e-12 * std::max(scale, 1e-300)))
      throw RankDeficiencyError("moment Jacobian has no variation in " + L.param_name(static_cast<std::size_t>(k)),
                                L.param_name(static_cast<std::size_t>(k)));
  Eigen::ColPivHouseholderQR<Matrix> qr(G);
  qr.setThreshold(1e-12);
  if (qr.rank() < G.cols())
    throw RankDeficiencyError("moment Jacobian is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                                  std::to_string(G.cols()) + ")",
                              "joint");
  const Matrix GtG = G.transpose() * G;
  const Matrix B = GtG.ldlt().solve(Matrix::Identity(G.cols(), G.cols()));
  out.covariance = B * G.transpose() * out.Omega * G * B / nobs;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.se = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

Matrix moment_jacobian_numeric(const Vector& theta, double xi, const ResidualizedPanel& rp, EstimationMode mode,
                               double h) {
  const Layout L{mode, rp.n_sectors};
  const auto s = sector_sums(rp);
  const double nobs = static_cast<double>(rp.size());
  Vector x(static_cast<Eigen::Index>(L.n_params()));
  const Vector th = pack_theta_for(L, theta);
  for (std::size_t i = 0; i < L.n; ++i) x[static_cast<Eigen::Index>(L.theta_index(i))] = th[static_cast<Eigen::Index>(i)];
  if (L.has_xi()) x[static_cast<Eigen::Index>(L.xi_index())] = xi;
  Matrix J(static_cast<Eigen::Index>(L.n_moments()), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector up = x, dn = x;
    up[k] += h;
    dn[k] -= h;
    J.col(k) = (moments_from_sums(L, s, unpack(L, up, xi), nobs) - moments_from_sums(L, s, unpack(L, dn, xi), nobs)) /
               (2.0 * h);
  }
  return J;
}

EstimationResult estimate(const ResidualizedPanel& rp, EstimationMode mode, const EstimationOptions& options) {
  if (rp.obs.empty()) throw EstimationError("estimate: residualized panel is empty");
  const Layout L{mode, rp.n_sectors};
  const auto s = sector_sums(rp);
  if (mode != EstimationMode::uniform)
    for (std::size_t i = 0; i < L.n; ++i)
      if (s[i].count == 0)
        throw EstimationError("estimate: sector " + std::to_string(i) + " has no observations");
  const double nobs = static_cast<double>(rp.size());

  double ff_total = 0.0;
  for (const auto& x : s) ff_total += x.ff;
  const bool xi_identified = L.has_xi() && ff_total > 0.0;

  const auto np = static_cast<Eigen::Index>(L.n_params());
  const double inf = std::numeric_limits<double>::infinity();
  Vector lower = Vector::Zero(np), upper = Vector::Constant(np, inf);
  if (L.has_xi()) {
    const auto xk = static_cast<Eigen::Index>(L.xi_index());
    lower[xk] = options.xi_lower;
    upper[xk] = options.xi_upper;
  }

  const std::vector<std::pair<double, double>> start_points = {{0.3, 1.5}, {0.9, 1.5}, {0.05, 1.5}, {0.3, 3.0}, {0.9, 3.0}};
  std::vector<Vector> x0s;
  for (const auto& [th, xi] : start_points) {
    Vector x0 = Vector::Constant(np, th);
    if (L.has_xi()) x0[static_cast<Eigen::Index>(L.xi_index())] = xi;
    x0s.push_back(x0);
  }

  auto run = [&](std::size_t k) {
    Vector lo = lower, hi = upper;
    if (L.has_xi() && !xi_identified) {
      // xi does not enter the objective; pin it to keep the search well posed.
      const auto xk = static_cast<Eigen::Index>(L.xi_index());
      lo[xk] = hi[xk] = x0s[k][xk];
    }
    auto f = [&](const Vector& x) {
      return moments_from_sums(L, s, unpack(L, x, 0.0), nobs).squaredNorm();
    };
    return powell_minimize(f, x0s[k], lo, hi, options.powell);
  };

  std::vector<PowellResult> results(x0s.size());
  const std::size_t workers =
      options.workers <= 0 ? x0s.size() : std::min<std::size_t>(x0s.size(), static_cast<std::size_t>(options.workers));
  for (std::size_t begin = 0; begin < x0s.size(); begin += workers) {
    std::vector<std::future<PowellResult>> futs;
    const std::size_t end = std::min(x0s.size(), begin + workers);
    for (std::size_t k = begin; k < end; ++k) futs.push_back(std::async(std::launch::async, run, k));
    for (std::size_t k = begin; k < end; ++k) results[k] = futs[k - begin].get();
  }

  EstimationResult out;
  out.mode = mode;
  out.n_obs = rp.size();
  out.n_moments = L.n_moments();
  out.n_params = L.n_params();
  out.xi_identified = xi_identified;
  std::size_t best = 0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    out.starts.push_back({x0s[k], results[k].f, results[k].converged, results[k].evaluations});
    if (results[k].f < results[best].f) best = k;
  }
  out.best_start = best;
  const PowellResult& r = results[best];
  out.converged = r.converged;
  out.objective_value = r.f;
  const Params p = unpack(L, r.x, 0.0);
  out.theta_hat = p.theta;
  out.xi_hat = L.has_xi() ? p.xi : std::numeric_limits<double>::quiet_NaN();
  out.at_bound.resize(L.n);
  for (std::size_t i = 0; i < L.n; ++i) out.at_bound[i] = p.theta[static_cast<Eigen::Index>(i)] <= options.bound_tolerance;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.se_theta = Vector::Constant(static_cast<Eigen::Index>(L.n), nan);
  out.se_xi = nan;
  try {
    Vector theta_arg = mode == EstimationMode::uniform ? Vector::Constant(1, p.theta[0]) : p.theta;
    if (L.has_xi() && !xi_identified) {
      // Variance of theta alone; the import-ratio moments are identically zero.
      const auto v = sandwich_variance(theta_arg, p.xi, rp, EstimationMode::biased_closed);
      out.covariance = v.covariance;
      out.se_theta = mode == EstimationMode::uniform ? Vector::Constant(static_cast<Eigen::Index>(L.n), v.se[0]) : v.se;
    } else {
      const auto v = sandwich_variance(theta_arg, p.xi, rp, mode);
      out.covariance = v.covariance;
      for (std::size_t i = 0; i < L.n; ++i)
        out.se_theta[static_cast<Eigen::Index>(i)] = v.se[static_cast<Eigen::Index>(L.theta_index(i))];
      if (L.has_xi()) out.se_xi = v.se[static_cast<Eigen::Index>(L.xi_index())];
    }
  } catch (const SingularityError& e) {
    out.variance_ok = false;
    out.variance_error = e.what();
  }
  return out;
}

HouseholdEstimate estimate_household_nu(const Panel& consumption_panel, const EstimationOptions& options) {
  Panel panel = consumption_panel;
  for (auto& o : panel) {
    o.i = 0;
    o.dlog_phi = 0.0;
  }
  const ResidualizedPanel rp = residualize(panel, 1);
  HouseholdEstimate h;
  h.n_obs = rp.size();
  double max_w = 0.0, max_p = 0.0;
  for (const auto& o : rp.obs) {
    max_w = std::max(max_w, std::abs(o.dlog_omega));
    max_p = std::max(max_p, std::abs(o.dlog_p));
  }
  if (!(max_p > 0.0)) throw EstimationError("household elasticity: no relative price variation in the panel");
  h.degenerate = !(max_w > 1e-14);
  const auto r = estimate(rp, EstimationMode::biased_closed, options);
  h.nu_hat = r.theta_hat[0];
  h.se = r.se_theta[0];
  h.converged = r.converged;
  return h;
}

}  // namespace prodnet
