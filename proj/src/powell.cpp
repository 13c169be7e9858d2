#include "prodnet/powell.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <cstdint>
#include <limits>

#include "prodnet/errors.hpp"

namespace prodnet {

namespace {

struct BudgetExhausted {};

class Objective {
 public:
  Objective(const std::function<double(const Vector&)>& f, int budget) : f_(f), budget_(budget) {}

  double operator()(const Vector& x) {
    if (evaluations_ >= budget_) throw BudgetExhausted{};
    ++evaluations_;
    const double v = f_(x);
    if (std::isfinite(v) && v < best_f_) {
      best_f_ = v;
      best_x_ = x;
    }
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  int evaluations() const { return evaluations_; }
  const Vector& best_x() const { return best_x_; }
  double best_f() const { return best_f_; }

 private:
  const std::function<double(const Vector&)>& f_;
  int budget_;
  int evaluations_ = 0;
  Vector best_x_;
  double best_f_ = std::numeric_limits<double>::infinity();
};

// Feasible step interval [tmin, tmax] for x + t d inside the box.
std::pair<double, double> feasible_interval(const Vector& x, const Vector& d, const Vector& lo, const Vector& hi) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (d[k] > 0.0) {
      tmax = std::min(tmax, (hi[k] - x[k]) / d[k]);
      tmin = std::max(tmin, (lo[k] - x[k]) / d[k]);
    } else if (d[k] < 0.0) {
      tmax = std::min(tmax, (lo[k] - x[k]) / d[k]);
      tmin = std::max(tmin, (hi[k] - x[k]) / d[k]);
    }
  }
  return {std::min(tmin, 0.0), std::max(tmax, 0.0)};
}

Vector clamp(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

// Minimizes along d from x; the bracket grows while the minimizer sits on an
// interior edge. Updates x and fx in place.
void line_minimize(Objective& f, Vector& x, double& fx, const Vector& d, const Vector& lo, const Vector& hi,
                   double step) {
  const auto [tmin, tmax] = feasible_interval(x, d, lo, hi);
  if (tmax - tmin <= 0.0) return;
  double a = std::max(tmin, -step);
  double b = std::min(tmax, step);
  auto g = [&](double t) { return f(clamp(x + t * d, lo, hi)); };
  double t_best = 0.0, f_best = fx;
  for (int grow = 0; grow < 40; ++grow) {
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::brent_find_minima(g, a, b, std::numeric_limits<double>::digits / 2, iters);
    if (r.second < f_best) {
      t_best = r.first;
      f_best = r.second;
    }
    const double width = b - a;
    const bool low_edge = t_best - a < 1e-3 * width && a > tmin;
    const bool high_edge = b - t_best < 1e-3 * width && b < tmax;
    if (!low_edge && !high_edge) break;
    if (low_edge) a = std::max(tmin, a - 4.0 * width);
    if (high_edge) b = std::min(tmax, b + 4.0 * width);
  }
  if (f_best < fx) {
    x = clamp(x + t_best * d, lo, hi);
    fx = f_best;
  }
}

}  // namespace

PowellResult powell_minimize(const std::function<double(const Vector&)>& fn, const Vector& x0,
                             const Vector& lower, const Vector& upper, const PowellOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw DimensionError("powell_minimize: bound dimensions");
  if ((lower.array() > upper.array()).any()) throw DomainError("powell_minimize: lower bound above upper bound");

  Objective f(fn, options.max_evaluations);
  PowellResult out;
  Vector x = clamp(x0, lower, upper);
  double fx;
  try {
    fx = f(x);
  } catch (const BudgetExhausted&) {
    out.x = x;
    out.f = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  if (!std::isfinite(fx)) throw DomainError("powell_minimize: objective is not finite at the starting point");

  Matrix dirs = Matrix::Identity(n, n);
  try {
    for (;;) {
      ++out.sweeps;
      const Vector x_start = x;
      const double f_start = fx;
      double biggest = 0.0;
      Eigen::Index ibig = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double before = fx;
        line_minimize(f, x, fx, dirs.col(i), lower, upper, options.initial_step);
        if (before - fx > biggest) {
          biggest = before - fx;
          ibig = i;
        }
      }
      if (f_start - fx <= options.rel_tolerance * 0.5 * (std::abs(f_start) + std::abs(fx)) + options.abs_tolerance) {
        out.converged = true;
        break;
      }
      // Powell's test for replacing the direction of largest decrease with
      // the sweep's net displacement.
      Vector d_new = x - x_start;
      const double len = d_new.norm();
      if (len > 0.0) {
        const double fe = f(clamp(2.0 * x - x_start, lower, upper));
        if (fe < f_start) {
          const double t1 = f_start - fx - biggest;
          const double t2 = f_start - fe;
          if (2.0 * (f_start - 2.0 * fx + fe) * t1 * t1 < biggest * t2 * t2) {
            d_new /= len;
            line_minimize(f, x, fx, d_new, lower, upper, std::max(len, options.initial_step));
            dirs.col(ibig) = dirs.col(n - 1);
            dirs.col(n - 1) = d_new;
          }
        }
      }
    }
  } catch (const BudgetExhausted&) {
    out.converged = false;
  }
  if (f.best_f() < fx) {
    x = f.best_x();
    fx = f.best_f();
  }
  out.x = x;
  out.f = fx;
  out.evaluations = f.evaluations();
  return out;
}

}  // namespace prodnet
