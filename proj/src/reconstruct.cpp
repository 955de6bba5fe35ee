#include "geomark/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geomark/errors.hpp"
#include "geomark/lbfgsb.hpp"
#include "geomark/parallel.hpp"

namespace geomark {

void ReconstructionConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(lower_bound <= upper_bound)) throw ConfigError("lower bound exceeds upper bound");
  if (memory < 1) throw ConfigError("memory must be >= 1");
  if (!std::isfinite(init_value)) throw ConfigError("init_value must be finite");
}

ReconstructionObjective::ReconstructionObjective(const FilterBank& bank, std::vector<Pixel> pixels,
                                                 std::vector<double> target, double eps)
    : evaluator_(bank, std::move(pixels)), target_(std::move(target)), eps_(eps) {
  if (target_.size() != bank.first_order_size()) {
    throw DomainError("target has " + std::to_string(target_.size()) + " entries, expected " +
                      std::to_string(bank.first_order_size()));
  }
  if (!(eps_ > 0.0)) throw ConfigError("eps must be positive");
}

double ReconstructionObjective::operator()(std::span<const double> marks, std::span<double> grad) {
  const std::vector<double>& s = evaluator_.forward(marks);
  std::vector<double> weights(s.size());
  double value = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    const double r = s[p] - target_[p];
    value += r * r;
    weights[p] = 2.0 * r;
  }
  const std::vector<double> g = evaluator_.pullback(weights, eps_);
  std::copy(g.begin(), g.end(), grad.begin());
  return value;
}

ObjectiveValue objective(std::span<const double> marks, std::span<const Pixel> pixels,
                         const FilterBank& bank, std::span<const double> target, double eps) {
  ReconstructionObjective obj(bank, std::vector<Pixel>(pixels.begin(), pixels.end()),
                              std::vector<double>(target.begin(), target.end()), eps);
  ObjectiveValue out;
  out.gradient.assign(marks.size(), 0.0);
  out.value = obj(marks, out.gradient);
  return out;
}

ReconstructionResult reconstruct_marks(const PointPattern& p, std::span<const double> target,
                                       const FilterBank& bank, const ReconstructionConfig& cfg,
                                       std::span<const int> snapshot_caps,
                                       std::optional<std::vector<double>> start) {
  cfg.validate();
  const std::size_t n = p.size();
  ReconstructionObjective obj(bank, pixel_indices(p, bank.n()),
                              std::vector<double>(target.begin(), target.end()), cfg.eps);

  std::vector<double> x0 = start ? std::move(*start) : std::vector<double>(n, cfg.init_value);
  if (x0.size() != n) throw DomainError("start vector does not match point count");
  const std::vector<double> lower(n, cfg.lower_bound);
  const std::vector<double> upper(n, cfg.upper_bound);

  ReconstructionResult res;
  if (n == 0) {
    res.stop_reason = "empty";
    res.snapshots.assign(snapshot_caps.size(), {});
    return res;
  }

  BoundedLbfgsOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.memory = cfg.memory;
  opt.gradient_tolerance = cfg.gradient_tolerance;

  res.snapshots.assign(snapshot_caps.size(), {});
  std::vector<double> initial(x0);
  for (auto& clampee : initial) clampee = std::clamp(clampee, cfg.lower_bound, cfg.upper_bound);
  const auto observer = [&](int iteration, std::span<const double> x, double) {
    for (std::size_t k = 0; k < snapshot_caps.size(); ++k) {
      if (snapshot_caps[k] == iteration) res.snapshots[k].assign(x.begin(), x.end());
    }
  };
  const SmoothObjective fun = [&](std::span<const double> x, std::span<double> g) {
    return obj(x, g);
  };
  BoundedLbfgsResult r = minimize_bounded(fun, std::move(x0), lower, upper, opt, observer);

  for (std::size_t k = 0; k < snapshot_caps.size(); ++k) {
    if (!res.snapshots[k].empty()) continue;
    // Cap 0 is the start point; caps past an early stop see the final iterate.
    res.snapshots[k] = snapshot_caps[k] <= 0 ? initial : r.x;
  }
  res.marks = std::move(r.x);
  res.objective = r.value;
  res.iterations = r.iterations;
  res.stop_reason = std::move(r.stop_reason);
  res.trace = std::move(r.trace);
  return res;
}

CapTuning tune_iteration_cap(std::span<const ValidationCase> validation, const FilterBank& bank,
                             const ReconstructionConfig& cfg, std::vector<int> caps) {
  if (validation.empty()) throw ConfigError("cap tuning needs a nonempty validation set");
  if (caps.empty()) throw ConfigError("cap tuning needs at least one candidate");
  std::sort(caps.begin(), caps.end());
  caps.erase(std::unique(caps.begin(), caps.end()), caps.end());
  if (caps.front() < 1) throw ConfigError("iteration caps must be >= 1");

  ReconstructionConfig run = cfg;
  run.max_iterations = caps.back();
  std::vector<std::vector<double>> sq_err(validation.size(), std::vector<double>(caps.size(), 0.0));
  std::vector<std::size_t> counts(validation.size(), 0);
  parallel_for(validation.size(), [&](std::size_t v) {
    const ValidationCase& vc = validation[v];
    const ReconstructionResult r = reconstruct_marks(vc.pattern, vc.target, bank, run, caps);
    for (std::size_t k = 0; k < caps.size(); ++k) {
      for (std::size_t i = 0; i < vc.true_marks.size(); ++i) {
        const double e = r.snapshots[k][i] - vc.true_marks[i];
        sq_err[v][k] += e * e;
      }
    }
    counts[v] = vc.true_marks.size();
  });

  CapTuning out;
  out.caps = caps;
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  for (std::size_t k = 0; k < caps.size(); ++k) {
    double s = 0.0;
    for (const auto& row : sq_err) s += row[k];
    out.rmse.push_back(total ? std::sqrt(s / static_cast<double>(total)) : 0.0);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < caps.size(); ++k) {
    if (out.rmse[k] < out.rmse[best]) best = k;
  }
  out.best_cap = caps[best];
  return out;
}

}  // namespace geomark
