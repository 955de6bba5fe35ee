#include "geomark/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "geomark/errors.hpp"

namespace geomark {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
};

struct Trial {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative along d
  std::vector<double> x;
  std::vector<double> g;
};

class LineProblem {
 public:
  LineProblem(const SmoothObjective& fun, std::span<const double> x, std::span<const double> d,
              std::span<const double> lower, std::span<const double> upper, int& evaluations)
      : fun_(fun), x_(x), d_(d), lower_(lower), upper_(upper), evaluations_(evaluations) {}

  Trial eval(double alpha) const {
    Trial t;
    t.alpha = alpha;
    t.x.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) {
      t.x[i] = std::clamp(x_[i] + alpha * d_[i], lower_[i], upper_[i]);
    }
    t.g.assign(x_.size(), 0.0);
    t.f = fun_(t.x, t.g);
    ++evaluations_;
    if (!std::isfinite(t.f)) {
      throw NumericalError("objective is not finite at line-search step " + std::to_string(alpha));
    }
    t.slope = dot(t.g, d_);
    return t;
  }

 private:
  const SmoothObjective& fun_;
  std::span<const double> x_;
  std::span<const double> d_;
  std::span<const double> lower_;
  std::span<const double> upper_;
  int& evaluations_;
};

double cubic_minimizer(const Trial& a, const Trial& b) {
  // Minimizer of the cubic interpolating (f, slope) at both ends, safeguarded
  // to the interior of [a, b].
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double c = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    if (std::isfinite(c)) t = c;
  }
  const double margin = 0.1 * (hi - lo);
  return std::clamp(t, lo + margin, hi - margin);
}

// Strong-Wolfe search in [0, alpha_max]. Returns false when no point with
// sufficient decrease was found.
bool line_search(const LineProblem& line, double f0, double slope0, double alpha0, double alpha_max,
                 const BoundedLbfgsOptions& opt, Trial& accepted) {
  const auto armijo_ok = [&](const Trial& t) { return t.f <= f0 + opt.armijo * t.alpha * slope0; };
  const auto curvature_ok = [&](const Trial& t) {
    return std::abs(t.slope) <= -opt.curvature * slope0;
  };

  Trial prev;
  prev.alpha = 0.0;
  prev.f = f0;
  prev.slope = slope0;
  Trial best_armijo;
  bool have_best = false;
  auto remember = [&](const Trial& t) {
    if (armijo_ok(t) && t.f < f0 && (!have_best || t.f < best_armijo.f)) {
      best_armijo = t;
      have_best = true;
    }
  };

  Trial lo, hi;
  bool bracketed = false;
  double alpha = std::min(alpha0, alpha_max);
  int evals = 0;
  while (evals < opt.max_line_search_evaluations) {
    Trial t = line.eval(alpha);
    ++evals;
    remember(t);
    if (!armijo_ok(t) || (evals > 1 && t.f >= prev.f)) {
      lo = prev;
      hi = t;
      bracketed = true;
      break;
    }
    if (curvature_ok(t)) {
      accepted = std::move(t);
      return true;
    }
    if (t.slope >= 0.0) {
      lo = t;
      hi = prev;
      bracketed = true;
      break;
    }
    if (alpha >= alpha_max) {
      // The feasible segment ends here and the objective still decreases.
      accepted = std::move(t);
      return true;
    }
    prev = std::move(t);
    alpha = std::min(4.0 * alpha, alpha_max);
  }

  while (bracketed && evals < opt.max_line_search_evaluations) {
    const double a = cubic_minimizer(lo, hi);
    Trial t = line.eval(a);
    ++evals;
    remember(t);
    if (!armijo_ok(t) || t.f >= lo.f) {
      hi = std::move(t);
    } else {
      if (curvature_ok(t)) {
        accepted = std::move(t);
        return true;
      }
      if (t.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(t);
    }
    if (std::abs(hi.alpha - lo.alpha) <= 1e-14 * std::max(1.0, lo.alpha)) break;
  }
  if (have_best) {
    accepted = std::move(best_armijo);
    return true;
  }
  return false;
}

}  // namespace

BoundedLbfgsResult minimize_bounded(const SmoothObjective& fun, std::vector<double> x0,
                                    std::span<const double> lower, std::span<const double> upper,
                                    const BoundedLbfgsOptions& opt,
                                    const IterationObserver& observer) {
  if (opt.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (opt.memory < 1) throw ConfigError("quasi-Newton memory must be >= 1");
  const std::size_t n = x0.size();
  if (lower.size() != n || upper.size() != n) throw ConfigError("bounds do not match variable count");
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] > upper[i]) throw ConfigError("lower bound exceeds upper bound");
    x0[i] = std::clamp(x0[i], lower[i], upper[i]);
  }

  BoundedLbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n, 0.0);
  res.value = fun(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) throw NumericalError("objective is not finite at the start point");
  res.trace.push_back(res.value);

  std::deque<Pair> history;
  std::vector<char> free_var(n);
  std::vector<double> d(n), q(n);
  bool fresh = true;

  for (;;) {
    double pg_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pinned_low = res.x[i] <= lower[i] && g[i] > 0.0;
      const bool pinned_high = res.x[i] >= upper[i] && g[i] < 0.0;
      free_var[i] = !(pinned_low || pinned_high);
      if (free_var[i]) pg_norm = std::max(pg_norm, std::abs(g[i]));
    }
    if (pg_norm <= opt.gradient_tolerance) {
      res.stop_reason = "gradient_tolerance";
      return res;
    }
    if (res.iterations >= opt.max_iterations) {
      res.stop_reason = "iteration_cap";
      return res;
    }

    // Two-loop recursion on the free subspace.
    for (std::size_t i = 0; i < n; ++i) q[i] = free_var[i] ? g[i] : 0.0;
    const auto restricted_dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) s += a[i] * b[i];
      }
      return s;
    };
    std::vector<double> alphas(history.size(), 0.0), rhos(history.size(), 0.0);
    for (std::size_t k = history.size(); k-- > 0;) {
      const double sy = restricted_dot(history[k].s, history[k].y);
      const double scale = std::sqrt(restricted_dot(history[k].s, history[k].s) *
                                     restricted_dot(history[k].y, history[k].y));
      // Pairs that lose positive curvature on the free subspace are skipped.
      if (!(sy > 1e-10 * scale)) continue;
      rhos[k] = 1.0 / sy;
      alphas[k] = rhos[k] * restricted_dot(history[k].s, q);
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) q[i] -= alphas[k] * history[k].y[i];
      }
    }
    double gamma = 1.0;
    if (!history.empty()) {
      const Pair& last = history.back();
      gamma = dot(last.s, last.y) / dot(last.y, last.y);
    }
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t k = 0; k < history.size(); ++k) {
      if (rhos[k] == 0.0) continue;
      const double beta = rhos[k] * restricted_dot(history[k].y, q);
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) q[i] += (alphas[k] - beta) * history[k].s[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = free_var[i] ? -q[i] : 0.0;
      if ((res.x[i] <= lower[i] && d[i] < 0.0) || (res.x[i] >= upper[i] && d[i] > 0.0)) d[i] = 0.0;
    }

    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      history.clear();
      fresh = true;
      for (std::size_t i = 0; i < n; ++i) d[i] = free_var[i] ? -g[i] : 0.0;
      slope = dot(g, d);
    }

    double alpha_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] < 0.0 && std::isfinite(lower[i])) {
        alpha_max = std::min(alpha_max, (res.x[i] - lower[i]) / -d[i]);
      } else if (d[i] > 0.0 && std::isfinite(upper[i])) {
        alpha_max = std::min(alpha_max, (upper[i] - res.x[i]) / d[i]);
      }
    }
    double alpha0 = 1.0;
    if (fresh) alpha0 = 1.0 / std::sqrt(dot(d, d));
    if (alpha_max <= 0.0) {
      res.stop_reason = "line_search";
      return res;
    }

    const LineProblem line(fun, res.x, d, lower, upper, res.evaluations);
    Trial step;
    if (!line_search(line, res.value, slope, alpha0, alpha_max, opt, step)) {
      res.stop_reason = "line_search";
      return res;
    }

    Pair pair{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = step.x[i] - res.x[i];
      pair.y[i] = step.g[i] - g[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 2.2e-16 * dot(pair.y, pair.y)) {
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > opt.memory) history.pop_front();
      fresh = false;
    }
    res.x = std::move(step.x);
    g = std::move(step.g);
    res.value = step.f;
    ++res.iterations;
    res.trace.push_back(res.value);
    if (observer) observer(res.iterations, res.x, res.value);
  }
}

}  // namespace geomark
