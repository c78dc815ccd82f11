#ifndef CNBDA_EXPERIMENTS_HPP
#define CNBDA_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnbda/fit.hpp"
#include "cnbda/network.hpp"
#include "cnbda/oada.hpp"
#include "cnbda/parallel.hpp"
#include "cnbda/profile.hpp"
#include "cnbda/random.hpp"
#include "cnbda/rules.hpp"
#include "cnbda/simulate.hpp"

namespace cnbda {

/// Calibration refused, e.g. too many bootstrap refits failed.
class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Type-7 sample quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> xs, double q)
{
  if (xs.empty())
    throw std::invalid_argument("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// 1.96 * sqrt(p (1 - p) / n).
inline double binomial_half_width(std::size_t successes, std::size_t n)
{
  if (n == 0)
    return 0.0;
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

struct CalibrationOptions {
  std::size_t reps = 200;
  std::uint64_t seed = 0;
  FitConfig fit{{}, {}, {}, 2};  // bootstrap refits start at the generating value
  ProfileOptions profile{};
  double max_failure_fraction = 0.2;
  double quantile = 0.95;
  std::size_t threads = 1;
};

struct CalibratedCI {
  ProfileCI adjusted;
  ProfileCI unadjusted;
  double adjusted_cutoff = kDefaultCutoff;
  std::vector<double> statistics;  // bootstrap likelihood-ratio statistics
  std::size_t failures = 0;
};

/// Parametric-bootstrap recalibration of a profile CI.
///
/// Simulates `reps` diffusions on the same network at the fitted MLE, refits
/// each, and records 2 (profile_nll(generating value) - nll) for the profiled
/// parameter. The adjusted cutoff is half the 95th percentile of those
/// statistics, never below the base cutoff; the adjusted interval is the
/// profile CI at that cutoff joined with the unadjusted one.
inline CalibratedCI calibrate_ci(const EventTable& table, const FitResult& fit,
                                 std::size_t index, const CalibrationOptions& opt)
{
  if (opt.reps < 100)
    throw std::invalid_argument("calibration needs at least 100 bootstrap replicates");
  if (index >= fit.k())
    throw std::out_of_range("parameter index out of range for rule '" + fit.rule.name + "'");
  if (!std::isfinite(fit.nll))
    throw std::invalid_argument("calibration needs a finite fit");

  CalibratedCI out;
  out.unadjusted = profile_ci(table, fit, index, opt.profile);

  const double generating = fit.mle[index];
  std::vector<std::optional<double>> stats(opt.reps);
  parallel_for(opt.reps, opt.threads, [&](std::size_t r) {
    try {
      const auto sim = simulate_diffusion(table.network(), fit.rule, fit.mle,
                                          derive_seed(opt.seed, {r, 0}),
                                          {table.event_count(), {}, false});
      const EventTable rep(sim.data);
      FitConfig cfg = opt.fit;
      cfg.lower = fit.box.lower;
      cfg.upper = fit.box.upper;
      if (cfg.start.empty())
        cfg.start = fit.mle;
      cfg.jitter_seed = derive_seed(opt.seed, {r, 1});
      const auto refit = fit_oada(rep, fit.rule, cfg);
      if (!std::isfinite(refit.nll))
        return;
      const double pinned = profile_nll(rep, fit.rule, index, generating, refit.box, refit.mle,
                                        opt.profile.inner);
      if (!std::isfinite(pinned))
        return;
      stats[r] = std::max(0.0, 2.0 * (pinned - refit.nll));
    } catch (const std::exception&) {
    }
  });

  for (const auto& s : stats) {
    if (s)
      out.statistics.push_back(*s);
    else
      ++out.failures;
  }
  if (static_cast<double>(out.failures) >
      opt.max_failure_fraction * static_cast<double>(opt.reps))
    throw CalibrationError(std::to_string(out.failures) + " of " + std::to_string(opt.reps) +
                           " bootstrap refits failed");

  out.adjusted_cutoff =
      std::max(opt.profile.cutoff, quantile(out.statistics, opt.quantile) / 2.0);
  ProfileOptions wide = opt.profile;
  wide.cutoff = out.adjusted_cutoff;
  out.adjusted = profile_ci(table, fit, index, wide);

  auto& a = out.adjusted;
  const auto& u = out.unadjusted;
  if (u.lower_open || u.lower < a.lower) {
    a.lower = std::min(a.lower, u.lower);
    a.lower_open = a.lower_open || u.lower_open;
    a.contains_lower_bound = a.contains_lower_bound || u.contains_lower_bound;
  }
  if (u.upper_open || u.upper > a.upper) {
    a.upper = std::max(a.upper, u.upper);
    a.upper_open = a.upper_open || u.upper_open;
    a.contains_upper_bound = a.contains_upper_bound || u.contains_upper_bound;
  }
  a.diagnostics.push_back("cutoff recalibrated by parametric bootstrap of the likelihood-ratio "
                          "statistic (" + std::to_string(out.statistics.size()) + " replicates)");
  return out;
}

/// Monte-Carlo experiment: a true rule over a parameter grid, replicated on
/// freshly generated networks.
struct ExperimentConfig {
  std::string name;
  GeneratorConfig generator{};
  RuleSpec true_rule = rule::asocial();
  /// One value list per parameter of true_rule, in parameter order.
  std::vector<std::vector<double>> grid;
  /// Cells whose strength parameter is 0 collapse to a single cell.
  bool collapse_null = true;
  std::vector<RuleSpec> candidates;
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  std::map<std::string, FitConfig> fit;  // per rule name
  ProfileOptions profile{};
  std::vector<std::string> coverage_params;  // empty: every parameter
  std::string calibrate_param;
  std::size_t bootstrap_reps = 100;
  std::size_t threads = 1;

  FitConfig fit_for(const RuleSpec& r) const
  {
    const auto it = fit.find(r.name);
    return it == fit.end() ? FitConfig{} : it->second;
  }

  void check() const
  {
    generator.check();
    if (reps < 1)
      throw std::invalid_argument("reps must be >= 1");
    if (grid.size() != true_rule.arity())
      throw std::invalid_argument("grid needs one value list per parameter of '" +
                                  true_rule.name + "'");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i].empty())
        throw std::invalid_argument("grid for " + true_rule.param_names[i] + " is empty");
      for (double v : grid[i])
        if (!(v >= true_rule.lower[i] && v <= true_rule.upper[i]))
          throw std::invalid_argument("grid value " + std::to_string(v) + " for " +
                                      true_rule.param_names[i] + " is out of bounds");
    }
    for (const auto& p : coverage_params)
      if (!true_rule.index_of(p))
        throw std::invalid_argument("coverage parameter '" + p + "' is not a parameter of '" +
                                    true_rule.name + "'");
  }
};

struct ExperimentCell {
  std::vector<double> params;
  std::vector<bool> identified;
};

/// Cartesian product of the grid, last parameter varying fastest. With
/// collapse_null, cells whose strength parameter is 0 are merged into one.
inline std::vector<ExperimentCell> build_cells(const ExperimentConfig& cfg)
{
  std::vector<ExperimentCell> cells;
  const std::size_t k = cfg.grid.size();
  std::size_t total = 1;
  for (const auto& g : cfg.grid)
    total *= g.size();
  const auto strength = cfg.true_rule.strength_index;
  bool null_seen = false;
  for (std::size_t flat = 0; flat < total; ++flat) {
    ExperimentCell c;
    c.params.assign(k, 0.0);
    for (std::size_t i = k, rest = flat; i-- > 0;) {
      c.params[i] = cfg.grid[i][rest % cfg.grid[i].size()];
      rest /= cfg.grid[i].size();
    }
    c.identified.assign(k, true);
    const bool null = strength && c.params[*strength] == 0.0;
    if (null)
      for (std::size_t i = 0; i < k; ++i)
        c.identified[i] = i == *strength;
    if (null && cfg.collapse_null && null_seen)
      continue;
    null_seen = null_seen || null;
    cells.push_back(std::move(c));
  }
  return cells;
}

/// Generates the network and diffusion for one replicate.
inline EventTable replicate_data(const ExperimentConfig& cfg, const ExperimentCell& cell,
                                 std::size_t cell_index, std::size_t rep)
{
  GeneratorConfig g = cfg.generator;
  g.seed = derive_seed(cfg.seed, {cell_index, rep, 0});
  const auto net = generate_network(g);
  auto sim = simulate_diffusion(net, cfg.true_rule, cell.params,
                                derive_seed(cfg.seed, {cell_index, rep, 1}), {std::nullopt, {}, false});
  return EventTable(std::move(sim.data));
}

struct SelectionRow {
  std::size_t cell = 0;
  std::vector<double> params;
  std::string model;
  std::size_t favored = 0;
  std::size_t valid = 0;
  std::size_t failures = 0;
  std::size_t nonconverged = 0;
  double proportion = 0.0;
  double half_width = 0.0;
};

struct SelectionResult {
  std::vector<ExperimentCell> cells;
  std::vector<SelectionRow> rows;

  const SelectionRow& row(std::size_t cell, const std::string& model) const
  {
    for (const auto& r : rows)
      if (r.cell == cell && r.model == model)
        return r;
    throw std::out_of_range("no selection row for model '" + model + "'");
  }
};

/// Per cell and candidate, the share of replicates in which that candidate
/// has the (tie-broken) lowest AICc.
inline SelectionResult run_selection_experiment(const ExperimentConfig& cfg)
{
  cfg.check();
  if (cfg.candidates.empty())
    throw std::invalid_argument("selection experiment needs candidate rules");
  SelectionResult out;
  out.cells = build_cells(cfg);
  const std::size_t m = cfg.candidates.size();
  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    struct Outcome {
      std::optional<std::size_t> favored;
      bool nonconverged = false;
    };
    std::vector<Outcome> outcomes(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t rep) {
      try {
        const auto table = replicate_data(cfg, out.cells[c], c, rep);
        std::vector<FitResult> fits;
        for (std::size_t j = 0; j < m; ++j) {
          auto fc = cfg.fit_for(cfg.candidates[j]);
          fc.jitter_seed = derive_seed(cfg.seed, {c, rep, 2, j});
          fits.push_back(fit_oada(table, cfg.candidates[j], fc));
          outcomes[rep].nonconverged = outcomes[rep].nonconverged || !fits.back().converged;
        }
        const auto ranking = compare_models(fits);
        for (const auto& r : ranking)
          if (r.failed)
            return;
        outcomes[rep].favored = ranking.front().input_index;
      } catch (const std::exception&) {
      }
    });
    std::vector<std::size_t> counts(m, 0);
    std::size_t valid = 0, nonconv = 0;
    for (const auto& o : outcomes) {
      if (o.favored) {
        ++counts[*o.favored];
        ++valid;
      }
      nonconv += o.nonconverged;
    }
    for (std::size_t j = 0; j < m; ++j) {
      SelectionRow row;
      row.cell = c;
      row.params = out.cells[c].params;
      row.model = cfg.candidates[j].name;
      row.favored = counts[j];
      row.valid = valid;
      row.failures = cfg.reps - valid;
      row.nonconverged = nonconv;
      row.proportion = valid ? static_cast<double>(counts[j]) / static_cast<double>(valid) : 0.0;
      row.half_width = binomial_half_width(counts[j], valid);
      out.rows.push_back(row);
    }
  }
  return out;
}

struct CoverageRow {
  std::size_t cell = 0;
  std::vector<double> params;
  std::string parameter;
  std::size_t covered = 0;
  std::size_t valid = 0;
  std::size_t failures = 0;
  double coverage = 0.0;
  double half_width = 0.0;
};

struct NonIdentified {
  std::size_t cell;
  std::string parameter;
};

struct CoverageResult {
  std::vector<ExperimentCell> cells;
  std::vector<CoverageRow> rows;
  std::vector<NonIdentified> flagged;

  const CoverageRow& row(std::size_t cell, const std::string& parameter) const
  {
    for (const auto& r : rows)
      if (r.cell == cell && r.parameter == parameter)
        return r;
    throw std::out_of_range("no coverage row for parameter '" + parameter + "'");
  }
};

inline std::vector<std::size_t> coverage_indices(const ExperimentConfig& cfg)
{
  std::vector<std::size_t> idx;
  if (cfg.coverage_params.empty()) {
    for (std::size_t i = 0; i < cfg.true_rule.arity(); ++i)
      idx.push_back(i);
  } else {
    for (const auto& p : cfg.coverage_params)
      idx.push_back(*cfg.true_rule.index_of(p));
  }
  return idx;
}

/// Per cell and identified parameter, the share of replicates whose profile
/// CI under the true rule contains the generating value.
inline CoverageResult run_coverage_experiment(const ExperimentConfig& cfg)
{
  cfg.check();
  if (cfg.true_rule.arity() == 0)
    throw std::invalid_argument("coverage needs a rule with parameters");
  CoverageResult out;
  out.cells = build_cells(cfg);
  const auto indices = coverage_indices(cfg);
  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    const auto& cell = out.cells[c];
    std::vector<std::size_t> active;
    for (auto i : indices) {
      if (cell.identified[i])
        active.push_back(i);
      else
        out.flagged.push_back({c, cfg.true_rule.param_names[i]});
    }
    if (active.empty())
      continue;
    std::vector<std::optional<std::vector<bool>>> outcomes(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t rep) {
      try {
        const auto table = replicate_data(cfg, cell, c, rep);
        auto fc = cfg.fit_for(cfg.true_rule);
        fc.jitter_seed = derive_seed(cfg.seed, {c, rep, 2});
        const auto fit = fit_oada(table, cfg.true_rule, fc);
        if (!std::isfinite(fit.nll))
          return;
        std::vector<bool> hit;
        for (auto i : active)
          hit.push_back(profile_ci(table, fit, i, cfg.profile).contains(cell.params[i]));
        outcomes[rep] = std::move(hit);
      } catch (const std::exception&) {
      }
    });
    for (std::size_t a = 0; a < active.size(); ++a) {
      CoverageRow row;
      row.cell = c;
      row.params = cell.params;
      row.parameter = cfg.true_rule.param_names[active[a]];
      for (const auto& o : outcomes) {
        if (!o)
          continue;
        ++row.valid;
        row.covered += (*o)[a];
      }
      row.failures = cfg.reps - row.valid;
      row.coverage = row.valid ? static_cast<double>(row.covered) / static_cast<double>(row.valid)
                               : 0.0;
      row.half_width = binomial_half_width(row.covered, row.valid);
      out.rows.push_back(row);
    }
  }
  return out;
}

struct CalibrationRow {
  std::size_t cell = 0;
  std::vector<double> params;
  std::string parameter;
  std::size_t valid = 0;
  std::size_t failures = 0;  // includes refused calibrations
  std::size_t covered_adjusted = 0;
  std::size_t covered_unadjusted = 0;
  std::size_t never_narrower = 0;  // adjusted interval contains the unadjusted one
  double coverage_adjusted = 0.0;
  double coverage_unadjusted = 0.0;
  double mean_adjusted_cutoff = 0.0;
  double half_width = 0.0;
};

struct CalibrationResult {
  std::vector<ExperimentCell> cells;
  std::vector<CalibrationRow> rows;
};

/// Self-coverage of calibrated CIs: each meta-replicate simulates data under
/// the true parameters, fits, calibrates the CI of `calibrate_param`, and
/// checks whether the truth falls inside.
inline CalibrationResult run_calibration_experiment(const ExperimentConfig& cfg)
{
  cfg.check();
  const auto idx = cfg.true_rule.index_of(cfg.calibrate_param);
  if (!idx)
    throw std::invalid_argument("calibrate_param '" + cfg.calibrate_param +
                                "' is not a parameter of '" + cfg.true_rule.name + "'");
  CalibrationResult out;
  out.cells = build_cells(cfg);
  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    const auto& cell = out.cells[c];
    struct Outcome {
      bool adjusted;
      bool unadjusted;
      bool nested;
      double cutoff;
    };
    std::vector<std::optional<Outcome>> outcomes(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t rep) {
      try {
        const auto table = replicate_data(cfg, cell, c, rep);
        auto fc = cfg.fit_for(cfg.true_rule);
        fc.jitter_seed = derive_seed(cfg.seed, {c, rep, 2});
        const auto fit = fit_oada(table, cfg.true_rule, fc);
        CalibrationOptions co;
        co.reps = cfg.bootstrap_reps;
        co.seed = derive_seed(cfg.seed, {c, rep, 3});
        co.profile = cfg.profile;
        co.fit.tolerance = fc.tolerance;
        co.fit.max_evals = fc.max_evals;
        const auto cal = calibrate_ci(table, fit, *idx, co);
        const double truth = cell.params[*idx];
        const auto& a = cal.adjusted;
        const auto& u = cal.unadjusted;
        const bool nested = (a.lower_open || (!u.lower_open && a.lower <= u.lower)) &&
                            (a.upper_open || (!u.upper_open && a.upper >= u.upper));
        outcomes[rep] = Outcome{a.contains(truth), u.contains(truth), nested, cal.adjusted_cutoff};
      } catch (const std::exception&) {
      }
    });
    CalibrationRow row;
    row.cell = c;
    row.params = cell.params;
    row.parameter = cfg.calibrate_param;
    double cutoff_sum = 0.0;
    for (const auto& o : outcomes) {
      if (!o)
        continue;
      ++row.valid;
      row.covered_adjusted += o->adjusted;
      row.covered_unadjusted += o->unadjusted;
      row.never_narrower += o->nested;
      cutoff_sum += o->cutoff;
    }
    row.failures = cfg.reps - row.valid;
    if (row.valid) {
      const double v = static_cast<double>(row.valid);
      row.coverage_adjusted = static_cast<double>(row.covered_adjusted) / v;
      row.coverage_unadjusted = static_cast<double>(row.covered_unadjusted) / v;
      row.mean_adjusted_cutoff = cutoff_sum / v;
    }
    row.half_width = binomial_half_width(row.covered_adjusted, row.valid);
    out.rows.push_back(row);
  }
  return out;
}

} // namespace cnbda

#endif // CNBDA_EXPERIMENTS_HPP
