#ifndef CNBDA_IO_HPP
#define CNBDA_IO_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnbda/experiments.hpp"
#include "cnbda/fit.hpp"
#include "cnbda/network.hpp"
#include "cnbda/profile.hpp"
#include "cnbda/rules.hpp"

namespace cnbda {

using json = nlohmann::json;

/// A JSON document field failed validation; `field()` is its dotted path.
class SpecError : public std::invalid_argument {
public:
  SpecError(std::string field, const std::string& what)
      : std::invalid_argument("field '" + field + "': " + what), field_(std::move(field))
  {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

namespace detail {

/// Infinite bounds serialise as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path)
{
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SpecError(path + key, e.what());
  }
}

inline std::vector<double> bound_list(const json& j, const std::string& path, double missing)
{
  if (!j.is_array())
    throw SpecError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null())
      out.push_back(missing);
    else if (j[i].is_number())
      out.push_back(j[i].get<double>());
    else
      throw SpecError(path + "[" + std::to_string(i) + "]", "expected a number or null");
  }
  return out;
}

} // namespace detail

inline json to_json(const ProfileCI& ci)
{
  return json{{"mle", ci.mle_value},
              {"lower", ci.lower},
              {"upper", ci.upper},
              {"lower_open", ci.lower_open},
              {"upper_open", ci.upper_open},
              {"contains_lower_bound", ci.contains_lower_bound},
              {"contains_upper_bound", ci.contains_upper_bound},
              {"cutoff", ci.cutoff},
              {"diagnostics", ci.diagnostics}};
}

/// Fit report: rule, named mle, se or null, nll, aicc, converged,
/// boundary_flags, evals, plus optional per-parameter CIs.
inline json fit_report(const FitResult& fit, std::span<const ProfileCI> cis = {})
{
  json mle = json::object(), flags = json::object(), ceiling = json::object();
  for (std::size_t i = 0; i < fit.k(); ++i) {
    mle[fit.rule.param_names[i]] = fit.mle[i];
    flags[fit.rule.param_names[i]] = static_cast<bool>(fit.boundary_flags[i]);
    ceiling[fit.rule.param_names[i]] = static_cast<bool>(fit.ceiling_flags[i]);
  }
  json se = nullptr;
  if (fit.se) {
    se = json::object();
    for (std::size_t i = 0; i < fit.k(); ++i)
      se[fit.rule.param_names[i]] = (*fit.se)[i];
  }
  json j{{"rule", fit.rule.name},
         {"k", fit.k()},
         {"events", fit.events},
         {"mle", mle},
         {"se", se},
         {"nll", fit.nll},
         {"aicc", detail::number_or_null(fit.aicc)},
         {"converged", fit.converged},
         {"boundary_flags", flags},
         {"ceiling_flags", ceiling},
         {"evals", fit.evals},
         {"diagnostics", fit.diagnostics}};
  if (!fit.rule.fixed_constants.empty())
    j["fixed"] = fit.rule.fixed_constants;
  if (!cis.empty()) {
    json ci = json::object();
    for (const auto& c : cis)
      ci[c.name] = to_json(c);
    j["ci"] = ci;
    j["ci_settings"] = {{"cutoff", cis.front().cutoff}};
  }
  return j;
}

/// model,k,nll,aicc,delta_aicc,favored (failed rows carry empty numbers).
inline void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows)
{
  const auto old = out.precision(12);
  out << "model,k,nll,aicc,delta_aicc,favored\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.k << ',';
    if (r.failed)
      out << ",,,failed\n";
    else
      out << r.nll << ',' << r.aicc << ',' << r.delta_aicc << ',' << (r.favored ? "true" : "false")
          << '\n';
  }
  out.precision(old);
}

/// value,profile_nll trace of a profile search.
inline void write_profile_trace_csv(std::ostream& out, const ProfileCI& ci)
{
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "parameter,value,profile_nll\n";
  for (const auto& p : ci.profile_points)
    out << ci.name << ',' << p.value << ',' << p.nll << '\n';
  out.precision(old);
}

inline GeneratorConfig generator_from_json(const json& j, const std::string& path = "")
{
  if (!j.is_object())
    throw SpecError(path.empty() ? "generator" : path, "expected an object");
  GeneratorConfig g;
  const std::string p = path.empty() ? "" : path + ".";
  for (const auto& [key, value] : j.items()) {
    if (key == "n")
      g.n = detail::get_field<std::size_t>(j, key, p);
    else if (key == "sparsity_threshold")
      g.sparsity_threshold = detail::get_field<double>(j, key, p);
    else if (key == "multiplier_max")
      g.multiplier_max = detail::get_field<double>(j, key, p);
    else if (key == "seed")
      g.seed = detail::get_field<std::uint64_t>(j, key, p);
    else
      throw SpecError(p + key, "unknown generator field");
  }
  try {
    g.check();
  } catch (const std::invalid_argument& e) {
    throw SpecError(path.empty() ? "generator" : path, e.what());
  }
  return g;
}

inline FitConfig fit_config_from_json(const json& j, const std::string& path)
{
  if (!j.is_object())
    throw SpecError(path, "expected an object");
  FitConfig f;
  const std::string p = path + ".";
  for (const auto& [key, value] : j.items()) {
    if (key == "start")
      f.start = detail::bound_list(value, p + key, 0.0);
    else if (key == "lower")
      f.lower = detail::bound_list(value, p + key, -kInf);
    else if (key == "upper")
      f.upper = detail::bound_list(value, p + key, kInf);
    else if (key == "restarts")
      f.restarts = detail::get_field<std::size_t>(j, key, p);
    else if (key == "tolerance")
      f.tolerance = detail::get_field<double>(j, key, p);
    else if (key == "max_evals")
      f.max_evals = detail::get_field<long>(j, key, p);
    else
      throw SpecError(p + key, "unknown fit field");
  }
  return f;
}

/// Experiment document. Errors name the offending field.
struct ExperimentSpec {
  ExperimentConfig config;
  std::string kind = "selection";
  std::size_t full_reps = 0;  // used instead of reps under --full
};

inline ExperimentSpec experiment_from_json(const json& j)
{
  if (!j.is_object())
    throw SpecError("(root)", "expected an object");
  ExperimentSpec spec;
  auto& cfg = spec.config;

  std::map<std::string, double> fixed;
  bool estimate_b = false;
  if (j.contains("fixed")) {
    try {
      fixed = j.at("fixed").get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
      throw SpecError("fixed", e.what());
    }
  }
  if (j.contains("estimate_b"))
    estimate_b = detail::get_field<bool>(j, "estimate_b", "");

  auto make_rule = [&](const std::string& name, const std::string& field) {
    try {
      return rule::by_name(name, name == "threshold" ? fixed : std::map<std::string, double>{},
                           estimate_b);
    } catch (const std::invalid_argument& e) {
      throw SpecError(field, e.what());
    }
  };

  for (const auto& [key, value] : j.items()) {
    if (key == "name")
      cfg.name = detail::get_field<std::string>(j, key, "");
    else if (key == "kind")
      spec.kind = detail::get_field<std::string>(j, key, "");
    else if (key == "generator")
      cfg.generator = generator_from_json(value, "generator");
    else if (key == "true_rule")
      cfg.true_rule = make_rule(detail::get_field<std::string>(j, key, ""), key);
    else if (key == "candidates") {
      const auto names = detail::get_field<std::vector<std::string>>(j, key, "");
      for (std::size_t i = 0; i < names.size(); ++i) {
        auto r = make_rule(names[i], "candidates[" + std::to_string(i) + "]");
        for (const auto& c : cfg.candidates)
          if (c.name == r.name)
            throw SpecError("candidates", "duplicate rule '" + r.name + "'");
        cfg.candidates.push_back(std::move(r));
      }
    } else if (key == "reps")
      cfg.reps = detail::get_field<std::size_t>(j, key, "");
    else if (key == "full_reps")
      spec.full_reps = detail::get_field<std::size_t>(j, key, "");
    else if (key == "seed")
      cfg.seed = detail::get_field<std::uint64_t>(j, key, "");
    else if (key == "collapse_null")
      cfg.collapse_null = detail::get_field<bool>(j, key, "");
    else if (key == "coverage_params")
      cfg.coverage_params = detail::get_field<std::vector<std::string>>(j, key, "");
    else if (key == "calibrate_param")
      cfg.calibrate_param = detail::get_field<std::string>(j, key, "");
    else if (key == "bootstrap_reps")
      cfg.bootstrap_reps = detail::get_field<std::size_t>(j, key, "");
    else if (key == "profile") {
      if (!value.is_object())
        throw SpecError("profile", "expected an object");
      for (const auto& [pk, pv] : value.items()) {
        if (pk == "cutoff")
          cfg.profile.cutoff = detail::get_field<double>(value, pk, "profile.");
        else if (pk == "ceiling_factor")
          cfg.profile.ceiling_factor = detail::get_field<double>(value, pk, "profile.");
        else
          throw SpecError("profile." + pk, "unknown profile field");
      }
      if (!(cfg.profile.cutoff > 0.0))
        throw SpecError("profile.cutoff", "must be > 0");
    } else if (key == "fit") {
      if (!value.is_object())
        throw SpecError("fit", "expected an object keyed by rule name");
      for (const auto& [rk, rv] : value.items()) {
        const auto r = make_rule(rk, "fit." + rk);
        cfg.fit[r.name] = fit_config_from_json(rv, "fit." + rk);
      }
    } else if (key != "grid" && key != "fixed" && key != "estimate_b" && key != "description") {
      throw SpecError(key, "unknown field");
    }
  }

  if (!j.contains("true_rule"))
    throw SpecError("true_rule", "missing");
  if (!j.contains("generator"))
    throw SpecError("generator", "missing");
  if (cfg.reps < 1)
    throw SpecError("reps", "must be >= 1");
  if (spec.kind != "selection" && spec.kind != "coverage" && spec.kind != "calibrate")
    throw SpecError("kind", "expected selection|coverage|calibrate");

  const auto& tr = cfg.true_rule;
  cfg.grid.assign(tr.arity(), {});
  if (tr.arity() > 0) {
    if (!j.contains("grid") || !j.at("grid").is_object())
      throw SpecError("grid", "expected an object with one value list per parameter");
    const auto& g = j.at("grid");
    for (const auto& [pk, pv] : g.items()) {
      const auto idx = tr.index_of(pk);
      if (!idx)
        throw SpecError("grid." + pk, "not a parameter of '" + tr.name + "'");
      cfg.grid[*idx] = detail::bound_list(pv, "grid." + pk, 0.0);
    }
    for (std::size_t i = 0; i < tr.arity(); ++i) {
      if (cfg.grid[i].empty())
        throw SpecError("grid." + tr.param_names[i], "missing or empty");
      for (double v : cfg.grid[i])
        if (!(v >= tr.lower[i] && v <= tr.upper[i]))
          throw SpecError("grid." + tr.param_names[i], "value " + std::to_string(v) +
                                                           " is out of bounds");
    }
  }
  for (std::size_t i = 0; i < cfg.coverage_params.size(); ++i)
    if (!tr.index_of(cfg.coverage_params[i]))
      throw SpecError("coverage_params[" + std::to_string(i) + "]",
                      "not a parameter of '" + tr.name + "'");
  if (!cfg.calibrate_param.empty() && !tr.index_of(cfg.calibrate_param))
    throw SpecError("calibrate_param", "not a parameter of '" + tr.name + "'");
  if (spec.kind == "selection" && cfg.candidates.empty())
    throw SpecError("candidates", "selection experiments need at least one candidate");
  if (spec.kind == "calibrate") {
    if (cfg.calibrate_param.empty())
      throw SpecError("calibrate_param", "required for calibration experiments");
    if (cfg.bootstrap_reps < 100)
      throw SpecError("bootstrap_reps", "must be >= 100");
  }
  for (const auto& [name, fc] : cfg.fit) {
    RuleSpec r = name == tr.name ? tr : make_rule(name, "fit." + name);
    try {
      resolve_config(r, fc);
    } catch (const std::invalid_argument& e) {
      throw SpecError("fit." + name, e.what());
    }
  }
  return spec;
}

namespace detail {

inline void write_cell_params(std::ostream& out, const std::vector<double>& params)
{
  for (double v : params)
    out << v << ',';
}

inline void write_param_header(std::ostream& out, const RuleSpec& r)
{
  out << "cell,";
  for (const auto& n : r.param_names)
    out << "true_" << n << ',';
}

} // namespace detail

inline void write_selection_csv(std::ostream& out, const SelectionResult& res, const RuleSpec& truth)
{
  const auto old = out.precision(10);
  detail::write_param_header(out, truth);
  out << "model,favored,valid,proportion,ci_half_width,failures,nonconverged\n";
  for (const auto& r : res.rows) {
    out << r.cell + 1 << ',';
    detail::write_cell_params(out, r.params);
    out << r.model << ',' << r.favored << ',' << r.valid << ',' << r.proportion << ','
        << r.half_width << ',' << r.failures << ',' << r.nonconverged << '\n';
  }
  out.precision(old);
}

inline void write_coverage_csv(std::ostream& out, const CoverageResult& res, const RuleSpec& truth)
{
  const auto old = out.precision(10);
  detail::write_param_header(out, truth);
  out << "parameter,covered,valid,coverage,ci_half_width,failures\n";
  for (const auto& r : res.rows) {
    out << r.cell + 1 << ',';
    detail::write_cell_params(out, r.params);
    out << r.parameter << ',' << r.covered << ',' << r.valid << ',' << r.coverage << ','
        << r.half_width << ',' << r.failures << '\n';
  }
  out.precision(old);
}

inline void write_calibration_csv(std::ostream& out, const CalibrationResult& res,
                                  const RuleSpec& truth)
{
  const auto old = out.precision(10);
  detail::write_param_header(out, truth);
  out << "parameter,valid,coverage_adjusted,coverage_unadjusted,ci_half_width,never_narrower,"
         "mean_adjusted_cutoff,failures\n";
  for (const auto& r : res.rows) {
    out << r.cell + 1 << ',';
    detail::write_cell_params(out, r.params);
    out << r.parameter << ',' << r.valid << ',' << r.coverage_adjusted << ','
        << r.coverage_unadjusted << ',' << r.half_width << ',' << r.never_narrower << ','
        << r.mean_adjusted_cutoff << ',' << r.failures << '\n';
  }
  out.precision(old);
}

} // namespace cnbda

#endif // CNBDA_IO_HPP
