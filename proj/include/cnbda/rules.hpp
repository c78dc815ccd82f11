#ifndef CNBDA_RULES_HPP
#define CNBDA_RULES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cnbda {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-individual view handed to a transmission function.
///
/// `informed` and `uninformed` are the connection sums to informed and naive
/// others. `weights` and `status` are the full vectors; they are empty when
/// the rule declared it only needs the sums.
struct RateContext {
  double informed = 0.0;
  double uninformed = 0.0;
  std::span<const double> weights{};
  std::span<const std::uint8_t> status{};

  double total() const noexcept { return informed + uninformed; }
};

using CustomRate = std::function<double(std::span<const double> params, const RateContext&)>;

enum class RuleKind { asocial, simple, proportional, frequency_dependent, threshold, custom };

/// A transmission rule: identity, free parameters with box bounds, and fixed
/// constants. Built-in rules come from the factories in `rule::`.
struct RuleSpec {
  RuleKind kind = RuleKind::asocial;
  std::string name;
  std::vector<std::string> param_names;
  std::vector<double> lower;
  std::vector<double> upper;
  std::map<std::string, double> fixed_constants;
  std::vector<double> default_start;
  /// Index of the parameter whose zero value switches social transmission off.
  std::optional<std::size_t> strength_index;
  CustomRate custom;
  /// True when the rate depends on the connection sums alone.
  bool sums_only = true;

  std::size_t arity() const noexcept { return param_names.size(); }

  std::optional<std::size_t> index_of(std::string_view param) const
  {
    for (std::size_t i = 0; i < param_names.size(); ++i)
      if (param_names[i] == param)
        return i;
    return std::nullopt;
  }
};

namespace detail {

inline double sum_product(std::span<const double> a, std::span<const std::uint8_t> z)
{
  if (a.size() != z.size())
    throw std::invalid_argument("connection and status vectors differ in length (" +
                                std::to_string(a.size()) + " vs " + std::to_string(z.size()) +
                                ")");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (z[j])
      s += a[j];
  return s;
}

inline RateContext context_of(std::span<const double> a, std::span<const std::uint8_t> z)
{
  if (a.size() != z.size())
    throw std::invalid_argument("connection and status vectors differ in length (" +
                                std::to_string(a.size()) + " vs " + std::to_string(z.size()) +
                                ")");
  RateContext ctx{0.0, 0.0, a, z};
  for (std::size_t j = 0; j < a.size(); ++j)
    (z[j] ? ctx.informed : ctx.uninformed) += a[j];
  return ctx;
}

inline double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace detail

// Rate formulas on connection sums. These are the hot-path forms used by the
// likelihood engine and the simulator.

inline double simple_rate(double s, double informed) noexcept { return s * informed; }

inline double proportional_rate(double s, double informed, double total) noexcept
{
  return total == 0.0 ? 0.0 : s * informed / total;
}

/// s * W_I^f / (W_I^f + W_U^f), evaluated as s / (1 + (W_U/W_I)^f).
inline double frequency_dependent_rate(double s, double f, double informed,
                                       double uninformed) noexcept
{
  if (informed <= 0.0)
    return 0.0;
  if (uninformed <= 0.0)
    return s;
  return s / (1.0 + std::exp(f * std::log(uninformed / informed)));
}

/// Logistic threshold shifted so the rate is exactly 0 at W_I = 0 and tends to c.
inline double threshold_rate(double a, double c, double b, double informed) noexcept
{
  const double eps = detail::logistic(b * (0.0 - a));
  const double rise = detail::logistic(b * (informed - a));
  return c / (1.0 - eps) * (rise - eps);
}

// Vector forms.

inline double rate_simple(double s, std::span<const double> a_i, std::span<const std::uint8_t> z)
{
  return simple_rate(s, detail::sum_product(a_i, z));
}

inline double rate_proportional(double s, std::span<const double> a_i,
                                std::span<const std::uint8_t> z)
{
  const auto ctx = detail::context_of(a_i, z);
  return proportional_rate(s, ctx.informed, ctx.total());
}

inline double rate_frequency_dependent(double s, double f, std::span<const double> a_i,
                                       std::span<const std::uint8_t> z)
{
  const auto ctx = detail::context_of(a_i, z);
  return frequency_dependent_rate(s, f, ctx.informed, ctx.uninformed);
}

inline double rate_threshold(double a, double c, double b, std::span<const double> a_i,
                             std::span<const std::uint8_t> z)
{
  return threshold_rate(a, c, b, detail::sum_product(a_i, z));
}

namespace rule {

inline RuleSpec asocial()
{
  RuleSpec r;
  r.kind = RuleKind::asocial;
  r.name = "asocial";
  return r;
}

/// Standard NBDA: rate s per unit connection to informed individuals.
inline RuleSpec simple()
{
  RuleSpec r;
  r.kind = RuleKind::simple;
  r.name = "simple";
  r.param_names = {"s"};
  r.lower = {0.0};
  r.upper = {kInf};
  r.default_start = {1.0};
  r.strength_index = 0;
  return r;
}

inline RuleSpec proportional()
{
  RuleSpec r;
  r.kind = RuleKind::proportional;
  r.name = "proportional";
  r.param_names = {"s"};
  r.lower = {0.0};
  r.upper = {kInf};
  r.default_start = {1.0};
  r.strength_index = 0;
  return r;
}

inline RuleSpec frequency_dependent()
{
  RuleSpec r;
  r.kind = RuleKind::frequency_dependent;
  r.name = "freqdep";
  r.param_names = {"s", "f"};
  r.lower = {0.0, 0.2};
  r.upper = {kInf, kInf};
  r.default_start = {5.0, 5.0};
  r.strength_index = 0;
  return r;
}

/// Threshold rule with parameters [a, c] and fixed sharpness b, or [a, c, b]
/// when the sharpness is estimated.
inline RuleSpec threshold(double sharpness = 3.0, bool estimate_sharpness = false)
{
  if (!(sharpness > 0.0) || !std::isfinite(sharpness))
    throw std::invalid_argument("threshold sharpness b must be finite and > 0");
  RuleSpec r;
  r.kind = RuleKind::threshold;
  r.name = "threshold";
  r.param_names = {"a", "c"};
  r.lower = {0.0, 0.0};
  r.upper = {kInf, kInf};
  r.default_start = {1.0, 1.0};
  r.strength_index = 1;
  if (estimate_sharpness) {
    r.param_names.push_back("b");
    r.lower.push_back(0.0);
    r.upper.push_back(kInf);
    r.default_start.push_back(sharpness);
  } else {
    r.fixed_constants["b"] = sharpness;
  }
  return r;
}

/// User-defined rule. `sums_only` lets the engine skip building full vectors.
inline RuleSpec custom(std::string name, std::vector<std::string> param_names,
                       std::vector<double> lower, std::vector<double> upper,
                       std::vector<double> default_start, CustomRate fn, bool sums_only)
{
  if (!fn)
    throw std::invalid_argument("custom rule needs a rate function");
  if (lower.size() != param_names.size() || upper.size() != param_names.size() ||
      default_start.size() != param_names.size())
    throw std::invalid_argument("custom rule: names, bounds and start must have equal length");
  RuleSpec r;
  r.kind = RuleKind::custom;
  r.name = std::move(name);
  r.param_names = std::move(param_names);
  r.lower = std::move(lower);
  r.upper = std::move(upper);
  r.default_start = std::move(default_start);
  r.custom = std::move(fn);
  r.sums_only = sums_only;
  return r;
}

/// CLI names: asocial | simple (alias standard) | proportional | freqdep | threshold.
inline RuleSpec by_name(std::string_view name, const std::map<std::string, double>& fixed = {},
                        bool estimate_sharpness = false)
{
  for (const auto& [k, v] : fixed)
    if (!(name == "threshold" && k == "b"))
      throw std::invalid_argument("rule '" + std::string(name) + "' has no fixable constant '" +
                                  k + "'");
  if (name == "asocial")
    return asocial();
  if (name == "simple" || name == "standard")
    return simple();
  if (name == "proportional")
    return proportional();
  if (name == "freqdep" || name == "frequency_dependent")
    return frequency_dependent();
  if (name == "threshold") {
    const auto it = fixed.find("b");
    return threshold(it == fixed.end() ? 3.0 : it->second, estimate_sharpness);
  }
  throw std::invalid_argument("unknown rule '" + std::string(name) +
                              "' (expected asocial|simple|proportional|freqdep|threshold)");
}

} // namespace rule

/// Throws when params have the wrong arity or leave the rule's box.
inline void check_params(const RuleSpec& r, std::span<const double> params)
{
  if (params.size() != r.arity())
    throw std::invalid_argument("rule '" + r.name + "' takes " + std::to_string(r.arity()) +
                                " parameter(s), got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (std::isnan(params[i]) || params[i] < r.lower[i] || params[i] > r.upper[i])
      throw std::out_of_range("parameter " + r.param_names[i] + " = " +
                              std::to_string(params[i]) + " is outside [" +
                              std::to_string(r.lower[i]) + ", " + std::to_string(r.upper[i]) +
                              "]");
  }
}

/// Unchecked dispatch on a prepared context.
inline double rate(const RuleSpec& r, std::span<const double> p, const RateContext& ctx)
{
  switch (r.kind) {
  case RuleKind::asocial: return 0.0;
  case RuleKind::simple: return simple_rate(p[0], ctx.informed);
  case RuleKind::proportional: return proportional_rate(p[0], ctx.informed, ctx.total());
  case RuleKind::frequency_dependent:
    return frequency_dependent_rate(p[0], p[1], ctx.informed, ctx.uninformed);
  case RuleKind::threshold: {
    const double b = p.size() > 2 ? p[2] : r.fixed_constants.at("b");
    return threshold_rate(p[0], p[1], b, ctx.informed);
  }
  case RuleKind::custom: return r.custom(p, ctx);
  }
  return 0.0;
}

/// T(a_i, z): checked evaluation of any rule on full vectors.
inline double eval_rate(const RuleSpec& r, std::span<const double> params,
                        std::span<const double> a_i, std::span<const std::uint8_t> z)
{
  check_params(r, params);
  return rate(r, params, detail::context_of(a_i, z));
}

} // namespace cnbda

#endif // CNBDA_RULES_HPP
