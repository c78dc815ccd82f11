#ifndef CNBDA_FIT_HPP
#define CNBDA_FIT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cnbda/oada.hpp"
#include "cnbda/optimize.hpp"
#include "cnbda/rules.hpp"

namespace cnbda {

/// Optimizer settings for one fit. Empty vectors fall back to the rule's
/// defaults.
struct FitConfig {
  std::vector<double> start;
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t restarts = 8;
  double tolerance = 1e-8;
  long max_evals = 20000;  // per start
  std::uint64_t jitter_seed = 0;
};

struct FitResult {
  RuleSpec rule;
  std::vector<double> mle;
  double nll = kInf;
  std::optional<std::vector<double>> se;
  double aicc = kInf;
  bool converged = false;
  long evals = 0;
  std::vector<bool> boundary_flags;
  std::vector<bool> ceiling_flags;
  Box box;                 // bounds the fit was run under
  std::size_t events = 0;  // D, the AICc sample size
  std::uint64_t data_fingerprint = 0;  // identifies the fitted data for comparisons
  std::vector<std::string> diagnostics;

  std::size_t k() const noexcept { return mle.size(); }
};

/// Resolves a config against a rule's defaults and validates it.
inline std::pair<Box, std::vector<double>> resolve_config(const RuleSpec& rule,
                                                          const FitConfig& cfg)
{
  Box box{cfg.lower.empty() ? rule.lower : cfg.lower, cfg.upper.empty() ? rule.upper : cfg.upper};
  auto start = cfg.start.empty() ? rule.default_start : cfg.start;
  const std::size_t k = rule.arity();
  if (box.lower.size() != k || box.upper.size() != k || start.size() != k)
    throw std::invalid_argument("rule '" + rule.name + "' takes " + std::to_string(k) +
                                " parameter(s); start/lower/upper must match");
  box.check();
  for (std::size_t i = 0; i < k; ++i) {
    if (box.lower[i] < rule.lower[i] || box.upper[i] > rule.upper[i])
      throw std::invalid_argument("bounds for " + rule.param_names[i] +
                                  " exceed the rule's admissible range");
    if (!(start[i] >= box.lower[i] && start[i] <= box.upper[i]))
      throw std::invalid_argument("start value for " + rule.param_names[i] +
                                  " is outside its bounds");
  }
  if (!(cfg.tolerance > 0.0))
    throw std::invalid_argument("tolerance must be > 0");
  if (cfg.max_evals < 1)
    throw std::invalid_argument("max_evals must be >= 1");
  return {std::move(box), std::move(start)};
}

/// Central finite-difference Hessian of `f` at x. Step per coordinate is
/// max(1e-4 |x_i|, 1e-6), shrunk to stay inside the box.
template <class F>
std::optional<Eigen::MatrixXd> fd_hessian(F&& f, std::span<const double> x, const Box& box)
{
  const std::size_t k = x.size();
  std::vector<double> h(k);
  for (std::size_t i = 0; i < k; ++i) {
    h[i] = std::max(1e-4 * std::abs(x[i]), 1e-6);
    const double room = std::min(x[i] - box.lower[i], box.upper[i] - x[i]);
    if (!(room > 0.0))
      return std::nullopt;
    h[i] = std::min(h[i], room / 2.0);
  }
  std::vector<double> p(x.begin(), x.end());
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    p.assign(x.begin(), x.end());
    p[i] += di;
    p[j] += dj;
    return f(std::span<const double>(p));
  };
  const double f0 = f(x);
  Eigen::MatrixXd H(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    H(i, i) = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) +
                        at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      H(i, j) = H(j, i) = v;
    }
  }
  if (!H.allFinite())
    return std::nullopt;
  return H;
}

/// sqrt(diag(H^-1)) from a finite-difference Hessian; absent when H is not
/// positive definite.
template <class F>
std::optional<std::vector<double>> hessian_standard_errors(F&& f, std::span<const double> x,
                                                           const Box& box)
{
  if (x.empty())
    return std::vector<double>{};
  const auto H = fd_hessian(f, x, box);
  if (!H)
    return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(*H);
  if (llt.info() != Eigen::Success)
    return std::nullopt;
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(H->rows(), H->cols()));
  std::vector<double> se(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(cov(i, i) > 0.0) || !std::isfinite(cov(i, i)))
      return std::nullopt;
    se[i] = std::sqrt(cov(i, i));
  }
  return se;
}

/// Standard errors at an OADA MLE; absent at a bound or for a singular Hessian.
inline std::optional<std::vector<double>> standard_errors(const EventTable& table,
                                                          const RuleSpec& rule,
                                                          std::span<const double> mle,
                                                          const Box& box)
{
  for (std::size_t i = 0; i < mle.size(); ++i)
    if (mle[i] <= box.lower[i] || mle[i] >= box.upper[i])
      return std::nullopt;
  auto f = [&](std::span<const double> p) { return detail::nll(rule, p, table); };
  return hessian_standard_errors(f, mle, box);
}

inline std::optional<std::vector<double>> standard_errors(const EventTable& table,
                                                          const RuleSpec& rule,
                                                          std::span<const double> mle)
{
  return standard_errors(table, rule, mle, Box{rule.lower, rule.upper});
}

/// Maximum-likelihood OADA fit: the lowest NLL across the user start and the
/// jittered restarts.
inline FitResult fit_oada(const EventTable& table, const RuleSpec& rule, const FitConfig& cfg = {})
{
  auto [box, start] = resolve_config(rule, cfg);
  FitResult out;
  out.rule = rule;
  out.box = box;
  out.events = table.event_count();
  out.data_fingerprint = table.data().fingerprint();

  if (rule.arity() == 0) {
    out.nll = detail::nll(rule, {}, table);
    out.se = std::vector<double>{};
    out.converged = std::isfinite(out.nll);
    out.evals = 1;
    out.aicc = aicc(out.nll, 0, out.events);
    return out;
  }

  NelderMeadOptions nm;
  nm.tolerance = cfg.tolerance;
  nm.max_evals = cfg.max_evals;
  auto f = [&](std::span<const double> p) { return detail::nll(rule, p, table); };
  auto ms = minimize_multistart(f, box, start, cfg.restarts, cfg.jitter_seed, nm);

  out.mle = ms.best.x;
  out.nll = ms.best.value;
  out.converged = ms.best.converged && std::isfinite(out.nll);
  out.evals = ms.total_evals;
  out.boundary_flags = ms.best.at_bound;
  out.ceiling_flags = ms.best.at_ceiling;
  out.aicc = aicc(out.nll, rule.arity(), out.events);
  if (!std::isfinite(out.aicc))
    out.diagnostics.push_back("AICc undefined: " + std::to_string(out.events) +
                              " events for " + std::to_string(rule.arity()) + " parameters");
  if (!out.converged)
    out.diagnostics.push_back("optimizer budget exhausted before tolerance was met");
  for (std::size_t i = 0; i < out.ceiling_flags.size(); ++i)
    if (out.ceiling_flags[i])
      out.diagnostics.push_back(rule.param_names[i] + " reached the internal ceiling");

  const bool on_bound = std::any_of(out.boundary_flags.begin(), out.boundary_flags.end(),
                                    [](bool b) { return b; });
  if (!on_bound && out.converged)
    out.se = standard_errors(table, rule, out.mle, box);
  if (!out.se)
    out.diagnostics.push_back("standard errors unavailable");
  return out;
}

/// One row of a model comparison table.
struct ComparisonRow {
  std::string model;
  std::size_t k = 0;
  double nll = kInf;
  double aicc = kInf;
  double delta_aicc = kInf;
  bool favored = false;
  bool failed = false;
  std::size_t input_index = 0;
};

/// Ranks fits by AICc. Ties go to fewer parameters, then to input order.
/// Failed fits (non-finite AICc) sort last and are never favored.
inline std::vector<ComparisonRow> compare_models(std::span<const FitResult> fits)
{
  if (fits.empty())
    throw std::invalid_argument("no fits to compare");
  for (const auto& f : fits)
    if (f.data_fingerprint != fits.front().data_fingerprint || f.events != fits.front().events)
      throw std::invalid_argument("fits were made on different data");

  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    ComparisonRow r;
    r.model = fits[i].rule.name;
    r.k = fits[i].k();
    r.nll = fits[i].nll;
    r.aicc = fits[i].aicc;
    r.failed = !std::isfinite(fits[i].aicc);
    r.input_index = i;
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.failed != b.failed)
      return !a.failed;
    if (a.aicc != b.aicc)
      return a.aicc < b.aicc;
    if (a.k != b.k)
      return a.k < b.k;
    return a.input_index < b.input_index;
  });
  if (!rows.front().failed) {
    rows.front().favored = true;
    for (auto& r : rows)
      r.delta_aicc = r.failed ? kInf : r.aicc - rows.front().aicc;
  }
  return rows;
}

} // namespace cnbda

#endif // CNBDA_FIT_HPP
