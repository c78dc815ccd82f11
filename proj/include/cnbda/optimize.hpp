#ifndef CNBDA_OPTIMIZE_HPP
#define CNBDA_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnbda/random.hpp"
#include "cnbda/rules.hpp"

namespace cnbda {

/// Axis-aligned parameter box. Infinite entries mean unbounded.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const noexcept { return lower.size(); }

  void check() const
  {
    if (lower.size() != upper.size())
      throw std::invalid_argument("lower and upper bounds differ in length");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (std::isnan(lower[i]) || std::isnan(upper[i]) || !(lower[i] < upper[i]))
        throw std::invalid_argument("bound " + std::to_string(i + 1) + ": need lower < upper");
  }

  bool contains(std::span<const double> x) const
  {
    if (x.size() != size())
      return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] >= lower[i] && x[i] <= upper[i]))
        return false;
    return true;
  }
};

/// Smooth bijection between a box and R^k.
///
///   [l, inf)  : x = l + exp(u)
///   (-inf, h] : x = h - exp(u)
///   [l, h]    : x = l + (h - l) / (1 + exp(-u))
///   (-inf,inf): x = u
///
/// Internal coordinates are clamped to [-kFloor, kCeiling]; a clamp at the top
/// of a log-mapped coordinate is the "internal ceiling" (x - l <= 1e10).
class BoxTransform {
public:
  static constexpr double kFloor = 40.0;
  static constexpr double kCeiling = 23.025850929940457;  // log(1e10)

  explicit BoxTransform(Box box) : box_(std::move(box)) { box_.check(); }

  const Box& box() const noexcept { return box_; }
  std::size_t size() const noexcept { return box_.size(); }

  std::vector<double> to_internal(std::span<const double> x) const
  {
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double l = box_.lower[i], h = box_.upper[i];
      double v;
      if (std::isfinite(l) && std::isfinite(h)) {
        const double t = (x[i] - l) / (h - l);
        v = std::log(t) - std::log1p(-t);
      } else if (std::isfinite(l)) {
        v = std::log(x[i] - l);
      } else if (std::isfinite(h)) {
        v = std::log(h - x[i]);
      } else {
        v = x[i];
      }
      u[i] = clamp(i, v);
    }
    return u;
  }

  std::vector<double> to_external(std::span<const double> u) const
  {
    std::vector<double> x(u.size());
    to_external(u, x);
    return x;
  }

  void to_external(std::span<const double> u, std::span<double> x) const
  {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double l = box_.lower[i], h = box_.upper[i];
      const double v = clamp(i, u[i]);
      if (std::isfinite(l) && std::isfinite(h))
        x[i] = l + (h - l) / (1.0 + std::exp(-v));
      else if (std::isfinite(l))
        x[i] = l + std::exp(v);
      else if (std::isfinite(h))
        x[i] = h - std::exp(v);
      else
        x[i] = v;
    }
  }

  bool at_ceiling(std::size_t i, double u) const noexcept
  {
    return mapped(i) && !(std::isfinite(box_.lower[i]) && std::isfinite(box_.upper[i])) &&
           u >= kCeiling;
  }

private:
  bool mapped(std::size_t i) const noexcept
  {
    return std::isfinite(box_.lower[i]) || std::isfinite(box_.upper[i]);
  }

  double clamp(std::size_t i, double v) const noexcept
  {
    if (!mapped(i))
      return v;
    if (std::isnan(v))
      return -kFloor;
    return std::clamp(v, -kFloor, kCeiling);
  }

  Box box_;
};

struct NelderMeadOptions {
  double tolerance = 1e-8;    // absolute spread of simplex values
  long max_evals = 20000;
  double initial_step = 1.0;  // in internal coordinates
  int max_restarts = 3;       // fresh simplex restarts from the best vertex
};

struct OptimizeResult {
  std::vector<double> x;
  double value = kInf;
  long evals = 0;
  bool converged = false;
};

/// Unconstrained Nelder-Mead (standard coefficients 1, 2, 0.5, 0.5).
/// Non-finite objective values are treated as +inf. After convergence the
/// simplex is rebuilt around the best vertex until a restart stops improving.
template <class F>
OptimizeResult nelder_mead(F&& f, std::vector<double> x0, const NelderMeadOptions& opt = {})
{
  const std::size_t k = x0.size();
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(std::span<const double>(x));
    return std::isfinite(v) ? v : kInf;
  };

  OptimizeResult best;
  best.x = x0;
  best.value = eval(x0);
  best.evals = 1;
  if (k == 0) {
    best.converged = true;
    return best;
  }

  for (int round = 0; round <= opt.max_restarts; ++round) {
    std::vector<std::vector<double>> pts(k + 1, best.x);
    std::vector<double> vals(k + 1, best.value);
    for (std::size_t i = 0; i < k; ++i) {
      const double step = opt.initial_step * (round == 0 ? 1.0 : 0.5);
      pts[i + 1][i] += step;
      vals[i + 1] = eval(pts[i + 1]);
      ++best.evals;
    }

    std::vector<std::size_t> idx(k + 1);
    std::vector<double> centroid(k), trial(k), trial2(k);
    bool converged = false;
    while (best.evals < opt.max_evals) {
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
      const std::size_t lo = idx.front(), hi = idx.back(), nh = idx[k - 1];
      if (std::isfinite(vals[hi]) && vals[hi] - vals[lo] <= opt.tolerance) {
        converged = true;
        break;
      }
      double diameter = 0.0;
      for (std::size_t v = 0; v <= k; ++v)
        for (std::size_t d = 0; d < k; ++d)
          diameter = std::max(diameter, std::abs(pts[v][d] - pts[lo][d]));
      if (diameter < 1e-12) {
        converged = std::isfinite(vals[lo]);
        break;
      }

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t v = 0; v <= k; ++v)
        if (v != hi)
          for (std::size_t d = 0; d < k; ++d)
            centroid[d] += pts[v][d] / static_cast<double>(k);

      for (std::size_t d = 0; d < k; ++d)
        trial[d] = centroid[d] + (centroid[d] - pts[hi][d]);
      const double fr = eval(trial);
      ++best.evals;

      if (fr < vals[lo]) {
        for (std::size_t d = 0; d < k; ++d)
          trial2[d] = centroid[d] + 2.0 * (centroid[d] - pts[hi][d]);
        const double fe = eval(trial2);
        ++best.evals;
        if (fe < fr) {
          pts[hi] = trial2;
          vals[hi] = fe;
        } else {
          pts[hi] = trial;
          vals[hi] = fr;
        }
        continue;
      }
      if (fr < vals[nh]) {
        pts[hi] = trial;
        vals[hi] = fr;
        continue;
      }
      const bool outside = fr < vals[hi];
      for (std::size_t d = 0; d < k; ++d)
        trial2[d] = outside ? centroid[d] + 0.5 * (trial[d] - centroid[d])
                            : centroid[d] + 0.5 * (pts[hi][d] - centroid[d]);
      const double fc = eval(trial2);
      ++best.evals;
      if (fc < (outside ? fr : vals[hi])) {
        pts[hi] = trial2;
        vals[hi] = fc;
        continue;
      }
      for (std::size_t v = 0; v <= k; ++v) {
        if (v == lo)
          continue;
        for (std::size_t d = 0; d < k; ++d)
          pts[v][d] = pts[lo][d] + 0.5 * (pts[v][d] - pts[lo][d]);
        vals[v] = eval(pts[v]);
        ++best.evals;
      }
    }

    const auto it = std::min_element(vals.begin(), vals.end());
    const double improvement = best.value - *it;
    if (*it < best.value) {
      best.value = *it;
      best.x = pts[static_cast<std::size_t>(it - vals.begin())];
    }
    best.converged = converged;
    if (!converged || (round > 0 && improvement <= opt.tolerance))
      break;
  }
  return best;
}

struct BoxedResult {
  std::vector<double> x;
  double value = kInf;
  long evals = 0;
  bool converged = false;
  std::vector<bool> at_bound;    // snapped onto a finite bound
  std::vector<bool> at_ceiling;  // pinned at the internal ceiling
};

/// Moves a start strictly inside the box so the transform is defined.
inline std::vector<double> interior_start(const Box& box, std::span<const double> start)
{
  std::vector<double> x(start.begin(), start.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double l = box.lower[i], h = box.upper[i];
    const double width = std::isfinite(l) && std::isfinite(h) ? h - l : kInf;
    const double nudge = std::min(1e-3 * std::max(1.0, std::abs(x[i])), width / 4.0);
    if (x[i] <= l)
      x[i] = l + nudge;
    if (x[i] >= h)
      x[i] = h - nudge;
  }
  return x;
}

/// Minimizes f over a box via Nelder-Mead in transformed coordinates.
///
/// Coordinates that end within 1e-6 of a finite bound are snapped onto it when
/// that does not raise the objective by more than the tolerance.
template <class F>
BoxedResult minimize_in_box(F&& f, const Box& box, std::span<const double> start,
                            const NelderMeadOptions& opt = {})
{
  if (start.size() != box.size())
    throw std::invalid_argument("start vector length does not match bounds");
  const BoxTransform tr(box);
  std::vector<double> ext(box.size());
  auto internal = [&](std::span<const double> u) {
    tr.to_external(u, ext);
    return f(std::span<const double>(ext));
  };
  auto nm = nelder_mead(internal, tr.to_internal(interior_start(box, start)), opt);

  BoxedResult out;
  out.x = tr.to_external(nm.x);
  out.value = nm.value;
  out.evals = nm.evals;
  out.converged = nm.converged;
  out.at_bound.assign(box.size(), false);
  out.at_ceiling.assign(box.size(), false);
  for (std::size_t i = 0; i < box.size(); ++i)
    out.at_ceiling[i] = tr.at_ceiling(i, nm.x[i]);

  for (std::size_t i = 0; i < box.size(); ++i) {
    for (const double bound : {box.lower[i], box.upper[i]}) {
      if (!std::isfinite(bound) || std::abs(out.x[i] - bound) > 1e-6 * std::max(1.0, std::abs(bound)))
        continue;
      auto snapped = out.x;
      snapped[i] = bound;
      const double v = f(std::span<const double>(snapped));
      ++out.evals;
      if (std::isfinite(v) && v <= out.value + opt.tolerance) {
        out.x = std::move(snapped);
        out.value = std::min(v, out.value);
        out.at_bound[i] = true;
        break;
      }
    }
  }
  return out;
}

/// Deterministic jitter of a start point. One-sided bounded coordinates are
/// scaled away from their bound by a U[0.25, 4] factor; two-sided ones are
/// redrawn uniformly in the box; free ones get an additive U[-1, 1] * max(1, |x|).
inline std::vector<double> jitter_start(const Box& box, std::span<const double> start, Rng& rng)
{
  auto x = interior_start(box, start);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double l = box.lower[i], h = box.upper[i];
    const double m = std::exp(rng.uniform(std::log(0.25), std::log(4.0)));
    if (std::isfinite(l) && std::isfinite(h))
      x[i] = rng.uniform(l, h);
    else if (std::isfinite(l))
      x[i] = l + (x[i] - l) * m;
    else if (std::isfinite(h))
      x[i] = h - (h - x[i]) * m;
    else
      x[i] += rng.uniform(-1.0, 1.0) * std::max(1.0, std::abs(x[i]));
  }
  return interior_start(box, x);
}

struct MultiStartResult {
  BoxedResult best;
  std::size_t best_start = 0;
  long total_evals = 0;
  std::vector<double> start_values;  // objective at each start point
  std::vector<double> end_values;    // objective after each local search
};

/// User start plus `restarts` jittered starts; the best result wins, ties going
/// to the earlier start.
template <class F>
MultiStartResult minimize_multistart(F&& f, const Box& box, std::span<const double> start,
                                     std::size_t restarts, std::uint64_t seed,
                                     const NelderMeadOptions& opt = {})
{
  MultiStartResult out;
  Rng rng(derive_seed(seed, {0x6a17}));
  const std::vector<double> user(start.begin(), start.end());
  for (std::size_t r = 0; r <= restarts; ++r) {
    const auto x0 = r == 0 ? interior_start(box, user) : jitter_start(box, user, rng);
    const double v0 = f(std::span<const double>(x0));
    out.start_values.push_back(std::isfinite(v0) ? v0 : kInf);
    auto res = minimize_in_box(f, box, x0, opt);
    out.total_evals += res.evals + 1;
    out.end_values.push_back(res.value);
    if (r == 0 || res.value < out.best.value) {
      out.best = std::move(res);
      out.best_start = r;
    }
  }
  out.best.evals = out.total_evals;
  return out;
}

} // namespace cnbda

#endif // CNBDA_OPTIMIZE_HPP
