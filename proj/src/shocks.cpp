#include "prodnet/shocks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <thread>

#include "prodnet/errors.hpp"

namespace prodnet {

namespace {

// Runs fn(k) for k in [0, n) over `workers` threads in contiguous blocks.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  if (w <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(w);
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t k = t * chunk; k < std::min(n, (t + 1) * chunk); ++k) fn(k);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_models(const std::vector<NamedModel>& models) {
  if (models.empty()) throw DomainError("no calibrations given");
  const auto n = models.front().model.size();
  for (const auto& m : models)
    if (m.model.size() != n) throw DimensionError("calibration " + m.name + " has a different sector count");
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::foreign_price: return "foreign_price";
    case ScenarioKind::severe_tfp: return "severe_tfp";
    case ScenarioKind::business_cycle: return "business_cycle";
  }
  return "unknown";
}

void ScenarioSet::validate(std::size_t n_sectors) const {
  if (labels.size() != shocks.size() || shocked.size() != shocks.size())
    throw DimensionError("scenario labels, shocked indices and shocks differ in length");
  for (const auto& s : shocks) s.validate(n_sectors);
}

Matrix psd_factor(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw DimensionError("covariance must be square");
  if (!cov.allFinite()) throw DomainError("covariance has non-finite entries");
  const auto n = cov.rows();
  if (n == 0) return Matrix(0, 0);
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector ev = eig.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-8 * scale)
    throw DomainError("covariance is indefinite (eigenvalue " + std::to_string(ev.minCoeff()) + ")");
  Matrix repaired = eig.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
  repaired = 0.5 * (repaired + repaired.transpose());
  if (repaired.cwiseAbs().maxCoeff() == 0.0) return Matrix::Zero(n, n);

  Eigen::LDLT<Matrix> ldlt(repaired);
  if (ldlt.info() != Eigen::Success) throw DomainError("covariance factorization failed");
  const Matrix L = ldlt.matrixL();
  const Vector d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  // repaired = P' L D L' P
  return ldlt.transpositionsP().transpose() * (L * d.asDiagonal());
}

Vector mvn_draw(const Matrix& factor, std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector e(factor.cols());
  for (Eigen::Index k = 0; k < e.size(); ++k) e[k] = normal(rng);
  return factor * e;
}

Matrix mvn_sample(const Matrix& cov, std::size_t n, std::uint64_t seed) {
  const Matrix F = psd_factor(cov);
  Matrix out(static_cast<Eigen::Index>(n), cov.rows());
  for (std::size_t k = 0; k < n; ++k) out.row(static_cast<Eigen::Index>(k)) = mvn_draw(F, seed, k).transpose();
  return out;
}

ScenarioSet foreign_price_scenarios(const Economy& economy, double magnitude) {
  if (!(1.0 + magnitude > 0.0)) throw DomainError("foreign price magnitude must exceed -1");
  ScenarioSet set;
  set.kind = ScenarioKind::foreign_price;
  set.magnitude = magnitude;
  const auto n = economy.n_sectors();
  for (std::size_t j = 0; j < n; ++j) {
    if (!economy.tradeable()[j]) continue;
    Shock s = Shock::none(n);
    s.Ptilde[static_cast<Eigen::Index>(j)] = 1.0 + magnitude;
    set.shocks.push_back(s);
    set.labels.push_back(economy.codes()[j]);
    set.shocked.push_back(static_cast<int>(j));
  }
  return set;
}

ScenarioSet severe_tfp_scenarios(const Economy& economy, double magnitude) {
  if (!(1.0 + magnitude > 0.0)) throw DomainError("TFP magnitude must exceed -1");
  ScenarioSet set;
  set.kind = ScenarioKind::severe_tfp;
  set.magnitude = magnitude;
  const auto n = economy.n_sectors();
  for (std::size_t i = 0; i < n; ++i) {
    Shock s = Shock::none(n);
    s.Z[static_cast<Eigen::Index>(i)] = 1.0 + magnitude;
    set.shocks.push_back(s);
    set.labels.push_back(economy.codes()[i]);
    set.shocked.push_back(static_cast<int>(i));
  }
  return set;
}

ScenarioSet business_cycle_scenarios(const Economy& economy, const Matrix& cov, std::size_t n_draws,
                                     std::uint64_t seed) {
  const auto n = economy.n_sectors();
  if (static_cast<std::size_t>(cov.rows()) != n) throw DimensionError("covariance does not match the sector count");
  const Matrix F = psd_factor(cov);
  ScenarioSet set;
  set.kind = ScenarioKind::business_cycle;
  set.seed = seed;
  set.n_draws = n_draws;
  for (std::size_t k = 0; k < n_draws; ++k) {
    set.shocks.push_back(Shock::tfp(mvn_draw(F, seed, k).array().exp().matrix()));
    set.labels.push_back(std::to_string(k));
    set.shocked.push_back(-1);
  }
  return set;
}

DistributionStats distribution_stats(const std::vector<double>& x) {
  DistributionStats s;
  s.n = x.size();
  if (x.empty()) return s;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(s.n);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  if (s.n > 1) s.sd = std::sqrt(m2 / static_cast<double>(s.n - 1));
  m2 /= static_cast<double>(s.n);
  m3 /= static_cast<double>(s.n);
  if (m2 > 0.0) s.skewness = m3 / std::pow(m2, 1.5);
  return s;
}

std::size_t ComparisonReport::failures() const {
  std::size_t f = 0;
  for (const auto& sc : scenarios)
    for (bool ok : sc.ok) f += ok ? 0 : 1;
  return f;
}

std::size_t ComparisonReport::calibration_index(const std::string& name) const {
  for (std::size_t c = 0; c < calibrations.size(); ++c)
    if (calibrations[c] == name) return c;
  throw DomainError("unknown calibration " + name);
}

ComparisonReport run_scenarios(const std::vector<NamedModel>& models, const ScenarioSet& set,
                               const ExperimentOptions& options, bool drop_failed) {
  check_models(models);
  const auto& economy = models.front().model.economy;
  const auto n = models.front().model.size();
  set.validate(n);
  const std::size_t C = models.size();

  std::vector<EquilibriumState> bases;
  for (const auto& m : models) bases.push_back(base_equilibrium(m.model, options.solver));

  ComparisonReport rep;
  rep.kind = set.kind;
  rep.magnitude = set.magnitude;
  rep.seed = set.seed;
  rep.n_draws = set.n_draws;
  for (const auto& m : models) rep.calibrations.push_back(m.name);
  rep.sector_codes = economy.codes();
  rep.sector_labels = economy.labels();
  rep.scenarios.resize(set.shocks.size());

  parallel_for(set.shocks.size(), options.workers, [&](std::size_t k) {
    ScenarioResult& r = rep.scenarios[k];
    r.label = set.labels[k];
    r.shocked = set.shocked[k];
    r.ok.assign(C, false);
    r.dlogP.assign(C, Vector::Zero(static_cast<Eigen::Index>(n)));
    r.dlogGDP.assign(C, 0.0);
    r.residual.assign(C, 0.0);
    r.errors.assign(C, "");
    for (std::size_t c = 0; c < C; ++c) {
      try {
        const auto st = solve_equilibrium(models[c].model, set.shocks[k], options.solver);
        r.dlogP[c] = (st.P.array().log() - bases[c].P.array().log()).matrix();
        r.dlogGDP[c] = st.gdp - bases[c].gdp;
        r.residual[c] = check_equilibrium(models[c].model, st).max();
        r.ok[c] = true;
      } catch (const SolverError& e) {
        r.errors[c] = e.what();
      }
    }
  });

  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < rep.scenarios.size(); ++k) {
    const auto& ok = rep.scenarios[k].ok;
    if (std::all_of(ok.begin(), ok.end(), [](bool b) { return b; })) {
      kept.push_back(k);
    } else if (drop_failed) {
      rep.dropped_draws.push_back(k);
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> g;
    Vector p = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k : kept) {
      g.push_back(rep.scenarios[k].dlogGDP[c]);
      p += rep.scenarios[k].dlogP[c];
    }
    if (!kept.empty()) p /= static_cast<double>(kept.size());
    rep.gdp_stats.push_back(distribution_stats(g));
    rep.mean_dlogP.push_back(p);
  }
  return rep;
}

ComparisonReport foreign_price_experiment(const std::vector<NamedModel>& models, double magnitude,
                                          const ExperimentOptions& options) {
  check_models(models);
  for (const auto& m : models)
    if (!m.model.open_economy) throw DomainError("foreign price experiment needs open-economy calibration " + m.name);
  return run_scenarios(models, foreign_price_scenarios(models.front().model.economy, magnitude), options);
}

ComparisonReport severe_tfp_experiment(const std::vector<NamedModel>& models, double magnitude,
                                       const ExperimentOptions& options) {
  check_models(models);
  return run_scenarios(models, severe_tfp_scenarios(models.front().model.economy, magnitude), options);
}

ComparisonReport business_cycle_experiment(const std::vector<NamedModel>& models, const Matrix& cov,
                                           std::size_t n_draws, std::uint64_t seed,
                                           const ExperimentOptions& options) {
  check_models(models);
  return run_scenarios(models, business_cycle_scenarios(models.front().model.economy, cov, n_draws, seed), options,
                       true);
}

std::vector<std::size_t> top_responders(const ComparisonReport& report, std::size_t scenario,
                                        std::size_t calibration, std::size_t k) {
  const Vector& d = report.scenarios.at(scenario).dlogP.at(calibration);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return d[static_cast<Eigen::Index>(a)] > d[static_cast<Eigen::Index>(b)];
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

namespace {

std::vector<std::size_t> rank_scenarios(const ComparisonReport& report, std::size_t a, std::size_t b,
                                        const std::function<double(const ScenarioResult&)>& gap) {
  std::vector<std::size_t> idx(report.scenarios.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [&](std::size_t k) {
    const auto& s = report.scenarios[k];
    return (s.ok.at(a) && s.ok.at(b)) ? gap(s) : -1.0;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return key(x) > key(y); });
  return idx;
}

}  // namespace

std::vector<std::size_t> rank_by_difference(const ComparisonReport& report, std::size_t a, std::size_t b) {
  return rank_scenarios(report, a, b, [&](const ScenarioResult& s) { return std::abs(s.dlogGDP[a] - s.dlogGDP[b]); });
}

std::vector<std::size_t> rank_by_price_difference(const ComparisonReport& report, std::size_t a,
                                                  std::size_t b) {
  return rank_scenarios(report, a, b, [&](const ScenarioResult& s) {
    return s.dlogP[a].size() ? (s.dlogP[a] - s.dlogP[b]).cwiseAbs().maxCoeff() : 0.0;
  });
}

Histogram gdp_histogram(const ComparisonReport& report, std::size_t bins) {
  if (bins == 0) throw DomainError("histogram needs at least one bin");
  const std::size_t C = report.calibrations.size();
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < report.scenarios.size(); ++k) {
    const auto& ok = report.scenarios[k].ok;
    if (std::all_of(ok.begin(), ok.end(), [](bool b) { return b; })) kept.push_back(k);
  }
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::size_t k : kept)
    for (double g : report.scenarios[k].dlogGDP) {
      lo = first ? g : std::min(lo, g);
      hi = first ? g : std::max(hi, g);
      first = false;
    }
  if (hi <= lo) {
    lo -= 0.5e-3;
    hi += 0.5e-3;
  }
  Histogram h;
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
  h.counts.assign(C, std::vector<std::size_t>(bins, 0));
  for (std::size_t k : kept)
    for (std::size_t c = 0; c < C; ++c) {
      const double g = report.scenarios[k].dlogGDP[c];
      auto b = static_cast<std::size_t>((g - lo) / (hi - lo) * static_cast<double>(bins));
      h.counts[c][std::min(b, bins - 1)] += 1;
    }
  return h;
}

}  // namespace prodnet
