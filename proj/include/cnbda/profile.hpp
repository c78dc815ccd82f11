#ifndef CNBDA_PROFILE_HPP
#define CNBDA_PROFILE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnbda/fit.hpp"
#include "cnbda/oada.hpp"
#include "cnbda/optimize.hpp"

namespace cnbda {

/// Half the 95% quantile of chi-squared with one degree of freedom.
inline constexpr double kDefaultCutoff = 1.92;

struct ProfileOptions {
  double cutoff = kDefaultCutoff;
  double rel_tol = 1e-4;          // bisection stopping width, relative
  double ceiling_factor = 1e6;    // search stops at mle +/- factor * max(1, |mle|)
  double expansion = 2.0;         // bracket growth per step
  double initial_fraction = 0.1;  // first step, relative to |mle|
  double initial_floor = 1e-3;    // first step, absolute minimum
  int dip_probes = 2;             // extra expansions checked past a crossing
  NelderMeadOptions inner{};
};

struct ProfilePoint {
  double value;
  double nll;
};

/// Profile-likelihood interval for one parameter.
///
/// An open endpoint means no crossing was found before the search ceiling; its
/// value is the ceiling. An endpoint truncated at a finite box bound is closed
/// and sets the matching contains_*_bound flag.
struct ProfileCI {
  std::size_t param_index = 0;
  std::string name;
  double mle_value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool lower_open = false;
  bool upper_open = false;
  bool contains_lower_bound = false;
  bool contains_upper_bound = false;
  double cutoff = kDefaultCutoff;
  std::vector<ProfilePoint> profile_points;
  std::vector<std::string> diagnostics;

  bool contains(double v) const noexcept
  {
    return (lower_open || v >= lower) && (upper_open || v <= upper);
  }
};

/// Profiled objective: f minimized over every coordinate except `index`,
/// which is pinned. Remembers the last inner optimum as a warm start.
template <class F>
class Profiler {
public:
  Profiler(F f, Box box, std::vector<double> mle, std::size_t index, NelderMeadOptions inner = {})
      : f_(std::move(f)), box_(std::move(box)), mle_(std::move(mle)), index_(index),
        inner_(inner)
  {
    if (index_ >= box_.size() || mle_.size() != box_.size())
      throw std::invalid_argument("profile parameter index out of range");
    for (std::size_t i = 0; i < box_.size(); ++i) {
      if (i == index_)
        continue;
      sub_.lower.push_back(box_.lower[i]);
      sub_.upper.push_back(box_.upper[i]);
      mle_rest_.push_back(mle_[i]);
    }
    warm_ = mle_rest_;
  }

  std::span<const double> warm() const noexcept { return warm_; }
  void set_warm(std::vector<double> w) { warm_ = std::move(w); }
  long evals() const noexcept { return evals_; }
  bool last_converged() const noexcept { return last_converged_; }

  double operator()(double value)
  {
    std::vector<double> full(box_.size());
    auto g = [&](std::span<const double> rest) {
      for (std::size_t i = 0, r = 0; i < full.size(); ++i)
        full[i] = i == index_ ? value : rest[r++];
      return f_(std::span<const double>(full));
    };
    if (sub_.size() == 0) {
      ++evals_;
      last_converged_ = true;
      return g(std::span<const double>{});
    }
    auto best = minimize_in_box(g, sub_, warm_, inner_);
    evals_ += best.evals;
    if (warm_ != mle_rest_) {
      auto alt = minimize_in_box(g, sub_, mle_rest_, inner_);
      evals_ += alt.evals;
      if (alt.value < best.value)
        best = std::move(alt);
    }
    last_converged_ = best.converged;
    warm_ = best.x;
    return best.value;
  }

private:
  F f_;
  Box box_;
  Box sub_;
  std::vector<double> mle_;
  std::vector<double> mle_rest_;
  std::vector<double> warm_;
  std::size_t index_;
  NelderMeadOptions inner_;
  long evals_ = 0;
  bool last_converged_ = true;
};

/// Profile CI of coordinate `index` around a minimum (mle, min_value).
///
/// Each side expands geometrically from the MLE until the profile exceeds
/// min_value + cutoff, checks a few further steps for dips back below, and
/// bisects the final bracket.
template <class F>
ProfileCI profile_interval(F f, const Box& box, std::span<const double> mle, double min_value,
                           std::size_t index, const ProfileOptions& opt = {})
{
  if (!(opt.cutoff > 0.0))
    throw std::invalid_argument("profile cutoff must be > 0");
  if (!box.contains(mle))
    throw std::invalid_argument("profile centre lies outside the bounds");

  ProfileCI ci;
  ci.param_index = index;
  ci.cutoff = opt.cutoff;
  ci.mle_value = mle[index];
  ci.profile_points.push_back({mle[index], min_value});
  const double target = min_value + opt.cutoff;
  const double centre = mle[index];
  const std::vector<double> mle_vec(mle.begin(), mle.end());

  for (const int dir : {-1, +1}) {
    Profiler<F> prof(f, box, mle_vec, index, opt.inner);
    auto P = [&](double x) {
      const double v = prof(x);
      ci.profile_points.push_back({x, v});
      if (v < min_value - 1e-6) {
        ci.diagnostics.push_back("profile at " + std::to_string(x) +
                                 " is below the fitted minimum");
      }
      return v;
    };

    const double bound = dir < 0 ? box.lower[index] : box.upper[index];
    const double ceiling = centre + dir * opt.ceiling_factor * std::max(1.0, std::abs(centre));
    const bool bound_first = std::isfinite(bound) && (dir < 0 ? bound >= ceiling : bound <= ceiling);
    const double limit = bound_first ? bound : ceiling;

    double& endpoint = dir < 0 ? ci.lower : ci.upper;
    bool& open = dir < 0 ? ci.lower_open : ci.upper_open;
    bool& has_bound = dir < 0 ? ci.contains_lower_bound : ci.contains_upper_bound;

    auto reached_limit = [&] {
      endpoint = limit;
      open = !bound_first;
      has_bound = bound_first;
    };

    if (centre == limit) {
      reached_limit();
      continue;
    }

    auto past = [&](double x) { return dir < 0 ? x <= limit : x >= limit; };
    double step = std::max(opt.initial_fraction * std::abs(centre), opt.initial_floor);
    double inside = centre;
    std::vector<double> inside_warm(prof.warm().begin(), prof.warm().end());
    double outside = centre;
    bool crossed = false;
    bool at_limit = false;

    while (!crossed && !at_limit) {
      double x = centre + dir * step;
      if (past(x)) {
        x = limit;
        at_limit = true;
      }
      const double v = P(x);
      if (v > target) {
        outside = x;
        crossed = true;
        // Look a little further for the profile dipping back under the target.
        double probe_step = step;
        auto probe_warm = std::vector<double>(prof.warm().begin(), prof.warm().end());
        for (int d = 0; d < opt.dip_probes && !past(x); ++d) {
          probe_step *= opt.expansion;
          double y = centre + dir * probe_step;
          if (past(y))
            y = limit;
          if (P(y) <= target) {
            ci.diagnostics.push_back("non-monotone profile: dip below cutoff at " +
                                     std::to_string(y));
            inside = y;
            inside_warm.assign(prof.warm().begin(), prof.warm().end());
            step = probe_step;
            crossed = false;
            at_limit = y == limit;
            break;
          }
          if (y == limit)
            break;
        }
        if (crossed)
          prof.set_warm(probe_warm);
      } else {
        inside = x;
        inside_warm.assign(prof.warm().begin(), prof.warm().end());
      }
      step *= opt.expansion;
    }

    if (!crossed) {
      reached_limit();
      continue;
    }

    prof.set_warm(inside_warm);
    for (int it = 0; it < 200; ++it) {
      const double width = std::abs(outside - inside);
      if (width <= opt.rel_tol * std::max(std::abs(inside), std::abs(outside)) || width < 1e-12)
        break;
      const double mid = 0.5 * (inside + outside);
      if (P(mid) > target) {
        outside = mid;
      } else {
        inside = mid;
        inside_warm.assign(prof.warm().begin(), prof.warm().end());
      }
      prof.set_warm(inside_warm);
    }
    endpoint = 0.5 * (inside + outside);
    open = false;
  }

  std::sort(ci.profile_points.begin(), ci.profile_points.end(),
            [](const ProfilePoint& a, const ProfilePoint& b) { return a.value < b.value; });
  return ci;
}

/// OADA profile NLL: minimum over the other parameters with one pinned.
inline double profile_nll(const EventTable& table, const RuleSpec& rule, std::size_t index,
                          double value, const Box& box, std::span<const double> centre,
                          const NelderMeadOptions& inner = {})
{
  if (index >= rule.arity())
    throw std::out_of_range("parameter index out of range for rule '" + rule.name + "'");
  if (!(value >= box.lower[index] && value <= box.upper[index]))
    throw std::out_of_range("profiled value is outside the parameter's bounds");
  auto f = [&](std::span<const double> p) { return detail::nll(rule, p, table); };
  std::vector<double> c(centre.begin(), centre.end());
  c[index] = value;
  return Profiler(f, box, std::move(c), index, inner)(value);
}

/// Profile NLL starting the inner search from the rule's default start.
inline double profile_nll(const EventTable& table, const RuleSpec& rule, std::size_t index,
                          double value)
{
  const Box box{rule.lower, rule.upper};
  return profile_nll(table, rule, index, value, box,
                     interior_start(box, rule.default_start));
}

/// Profile CI for parameter `index` of a fitted OADA model.
inline ProfileCI profile_ci(const EventTable& table, const FitResult& fit, std::size_t index,
                            const ProfileOptions& opt = {})
{
  if (index >= fit.k())
    throw std::out_of_range("parameter index out of range for rule '" + fit.rule.name + "'");
  if (fit.data_fingerprint != table.data().fingerprint())
    throw std::invalid_argument("fit was made on different data");
  auto f = [&](std::span<const double> p) { return detail::nll(fit.rule, p, table); };
  auto ci = profile_interval(f, fit.box, fit.mle, fit.nll, index, opt);
  ci.name = fit.rule.param_names[index];
  if (!fit.converged)
    ci.diagnostics.push_back("fit did not converge");
  return ci;
}

} // namespace cnbda

#endif // CNBDA_PROFILE_HPP
