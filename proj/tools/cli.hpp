#ifndef CNBDA_TOOLS_CLI_HPP
#define CNBDA_TOOLS_CLI_HPP

// Command-line front end. Exit codes: 0 success, 1 input error, 2 numerical
// non-convergence.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cnbda/cnbda.hpp"

namespace cnbda::cli {

inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kNotConverged = 2;

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const std::string& flag)
{
  std::vector<double> out;
  for (auto field : cnbda::detail::split(text, ',')) {
    const std::string tok(cnbda::detail::trim(field));
    if (tok == "inf" || tok == "Inf" || tok == "+inf") {
      out.push_back(kInf);
      continue;
    }
    if (tok == "-inf" || tok == "-Inf") {
      out.push_back(-kInf);
      continue;
    }
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size())
        throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument(flag + ": not a number: '" + tok + "'");
    }
  }
  return out;
}

/// "k=v,k=v" pairs, also accepted across repeated flags.
inline std::map<std::string, std::string> parse_pairs(const std::vector<std::string>& items,
                                                      const std::string& flag)
{
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    for (auto field : cnbda::detail::split(item, ',')) {
      const auto kv = cnbda::detail::trim(field);
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw std::invalid_argument(flag + ": expected key=value, got '" + std::string(kv) + "'");
      out[std::string(cnbda::detail::trim(kv.substr(0, eq)))] =
          std::string(cnbda::detail::trim(kv.substr(eq + 1)));
    }
  }
  return out;
}

inline std::map<std::string, double> parse_fixed(const std::vector<std::string>& items)
{
  std::map<std::string, double> out;
  for (const auto& [k, v] : parse_pairs(items, "--fix"))
    out[k] = parse_list(v, "--fix " + k).at(0);
  return out;
}

/// --generate n=100,threshold=0.7,mult=3,seed=5 (long field names also accepted).
inline GeneratorConfig parse_generator(const std::string& text)
{
  GeneratorConfig g;
  for (const auto& [k, v] : parse_pairs({text}, "--generate")) {
    if (k == "n")
      g.n = static_cast<std::size_t>(std::stoull(v));
    else if (k == "threshold" || k == "sparsity_threshold")
      g.sparsity_threshold = std::stod(v);
    else if (k == "mult" || k == "multiplier_max")
      g.multiplier_max = std::stod(v);
    else if (k == "seed")
      g.seed = std::stoull(v);
    else
      throw std::invalid_argument("--generate: unknown field '" + k + "'");
  }
  g.check();
  return g;
}

/// A path to an order file, or an inline 1-based list such as 4,5,2,3,1.
inline std::vector<std::size_t> read_order_arg(const std::string& arg)
{
  if (std::filesystem::exists(arg))
    return load_order(arg);
  if (!arg.empty() && arg.find_first_not_of("0123456789, ") == std::string::npos) {
    std::istringstream in(arg);
    return read_order(in);
  }
  throw ParseError(0, "cannot open order file '" + arg + "'");
}

inline std::ofstream open_out(const std::string& path)
{
  std::ofstream f(path);
  if (!f)
    throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

struct RuleFlags {
  std::string name;
  std::vector<std::string> fix;
  bool estimate_b = false;

  RuleSpec make() const { return rule::by_name(name, parse_fixed(fix), estimate_b); }
};

struct FitFlags {
  std::string start, lower, upper;
  std::size_t restarts = 8;
  double tolerance = 1e-8;
  long max_evals = 20000;
  std::uint64_t seed = 0;

  FitConfig make() const
  {
    FitConfig c;
    if (!start.empty())
      c.start = parse_list(start, "--start");
    if (!lower.empty())
      c.lower = parse_list(lower, "--lower");
    if (!upper.empty())
      c.upper = parse_list(upper, "--upper");
    c.restarts = restarts;
    c.tolerance = tolerance;
    c.max_evals = max_evals;
    c.jitter_seed = seed;
    return c;
  }
};

inline void add_fit_flags(CLI::App* cmd, FitFlags& f)
{
  cmd->add_option("--start", f.start, "Start values, comma-separated");
  cmd->add_option("--lower", f.lower, "Lower bounds, comma-separated");
  cmd->add_option("--upper", f.upper, "Upper bounds, comma-separated ('inf' allowed)");
  cmd->add_option("--restarts", f.restarts, "Jittered restarts after the user start")
      ->capture_default_str();
  cmd->add_option("--tol", f.tolerance, "Convergence tolerance on the NLL")->capture_default_str();
  cmd->add_option("--max-evals", f.max_evals, "Evaluation budget per start")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Jitter seed")->capture_default_str();
}

inline void add_rule_flags(CLI::App* cmd, RuleFlags& r, bool required)
{
  auto* o = cmd->add_option("--rule", r.name, "asocial|simple|proportional|freqdep|threshold");
  if (required)
    o->required();
  cmd->add_option("--fix", r.fix, "Fixed constants, e.g. b=3");
  cmd->add_flag("--estimate-b", r.estimate_b, "Estimate the threshold sharpness b");
}

std::string join_doubles(const std::vector<double>& v)
{
  std::ostringstream s;
  s.precision(10);
  for (std::size_t i = 0; i < v.size(); ++i)
    s << (i ? "," : "") << v[i];
  return s.str();
}

} // namespace detail

inline int run_fit(const std::string& network_path, bool header, const std::string& order_arg,
                   const detail::RuleFlags& rf, const detail::FitFlags& ff, bool with_ci,
                   double cutoff, const std::string& trace_path, const std::string& out_path,
                   bool json_stdout, std::ostream& out)
{
  const auto rule = rf.make();
  const auto cfg = ff.make();
  DiffusionData data(load_network_csv(network_path, header), detail::read_order_arg(order_arg),
                     order_arg);
  const EventTable table(data);
  const auto fit = fit_oada(table, rule, cfg);

  std::vector<ProfileCI> cis;
  if (with_ci) {
    ProfileOptions po;
    po.cutoff = cutoff;
    for (std::size_t i = 0; i < fit.k(); ++i)
      cis.push_back(profile_ci(table, fit, i, po));
  }
  if (!trace_path.empty()) {
    auto f = detail::open_out(trace_path);
    f << "parameter,value,profile_nll\n";
    for (const auto& ci : cis) {
      std::ostringstream part;
      write_profile_trace_csv(part, ci);
      const auto body = part.str();
      f << body.substr(body.find('\n') + 1);
    }
  }

  const auto report = fit_report(fit, cis);
  if (!out_path.empty())
    detail::open_out(out_path) << report.dump(2) << '\n';
  if (json_stdout) {
    out << report.dump(2) << '\n';
  } else if (out_path.empty()) {
    out.precision(8);
    out << "rule " << fit.rule.name << "  events " << fit.events << "  k " << fit.k() << '\n';
    out << "nll " << fit.nll << "  aicc " << fit.aicc << "  converged "
        << (fit.converged ? "yes" : "no") << '\n';
    for (std::size_t i = 0; i < fit.k(); ++i) {
      out << "  " << fit.rule.param_names[i] << " = " << fit.mle[i];
      if (fit.se)
        out << "  se " << (*fit.se)[i];
      if (fit.boundary_flags[i])
        out << "  [at bound]";
      if (i < cis.size())
        out << "  ci " << cis[i].lower << (cis[i].lower_open ? " (open)" : "") << " - "
            << cis[i].upper << (cis[i].upper_open ? " (open)" : "");
      out << '\n';
    }
  }
  return fit.converged ? kOk : kNotConverged;
}

inline int run_simulate(const std::string& network_path, bool header, const std::string& generate,
                        const std::string& generator_json, const detail::RuleFlags& rf,
                        const std::string& params_text, std::uint64_t seed,
                        std::optional<std::size_t> stop_after, const std::string& start_nodes,
                        const std::string& out_path, const std::string& trace_path,
                        const std::string& network_out, std::ostream& out)
{
  const int sources = !network_path.empty() + !generate.empty() + !generator_json.empty();
  if (sources != 1)
    throw std::invalid_argument("give exactly one of --network, --generate, --generator-json");
  std::optional<Network> net;
  if (!network_path.empty()) {
    net = load_network_csv(network_path, header);
  } else if (!generate.empty()) {
    net = generate_network(detail::parse_generator(generate));
  } else {
    std::ifstream f(generator_json);
    if (!f)
      throw ParseError(0, "cannot open generator file '" + generator_json + "'");
    net = generate_network(generator_from_json(json::parse(f)));
  }
  if (const auto v = validate(*net); !v.empty())
    throw std::invalid_argument("network has " + std::to_string(v.size()) + " invalid weight(s)");

  const auto rule = rf.make();
  const auto params = params_text.empty() ? std::vector<double>{}
                                          : detail::parse_list(params_text, "--params");
  if (params.size() != rule.arity())
    throw std::invalid_argument("rule '" + rule.name + "' needs " + std::to_string(rule.arity()) +
                                " value(s) in --params");
  SimulationOptions opt;
  opt.stop_after = stop_after;
  opt.record_trace = !trace_path.empty();
  if (!start_nodes.empty()) {
    std::istringstream in(start_nodes);
    opt.initially_informed = read_order(in);
  }
  const auto sim = simulate_diffusion(*net, rule, params, seed, opt);

  if (!network_out.empty()) {
    auto f = detail::open_out(network_out);
    write_network_csv(f, *net);
  }
  if (!trace_path.empty()) {
    auto f = detail::open_out(trace_path);
    write_trace_csv(f, sim.trace, net->size());
  }
  if (!out_path.empty()) {
    auto f = detail::open_out(out_path);
    write_order(f, sim.data.order());
  } else {
    write_order(out, sim.data.order());
  }
  return kOk;
}

inline int run_compare(const std::string& network_path, bool header, const std::string& order_arg,
                       const std::string& rules_text, const std::vector<std::string>& fix,
                       bool estimate_b, const detail::FitFlags& ff, const std::string& out_path,
                       std::ostream& out, std::ostream& err)
{
  std::vector<RuleSpec> rules;
  const auto fixed = detail::parse_fixed(fix);
  for (auto field : cnbda::detail::split(rules_text, ',')) {
    const std::string name(cnbda::detail::trim(field));
    auto r = rule::by_name(name, name == "threshold" ? fixed : std::map<std::string, double>{},
                           estimate_b);
    for (const auto& existing : rules)
      if (existing.name == r.name)
        throw std::invalid_argument("duplicate rule '" + name + "' in --rules");
    rules.push_back(std::move(r));
  }
  if (rules.size() < 2)
    throw std::invalid_argument("--rules needs at least two rules");

  DiffusionData data(load_network_csv(network_path, header), detail::read_order_arg(order_arg),
                     order_arg);
  const EventTable table(data);
  std::vector<FitResult> fits;
  bool any_failed = false;
  for (const auto& r : rules) {
    auto cfg = ff.make();
    cfg.start.clear();
    cfg.lower.clear();
    cfg.upper.clear();
    try {
      fits.push_back(fit_oada(table, r, cfg));
    } catch (const std::exception& e) {
      err << "fit of '" << r.name << "' failed: " << e.what() << '\n';
      FitResult failed;
      failed.rule = r;
      failed.mle.assign(r.arity(), 0.0);
      failed.events = table.event_count();
      failed.data_fingerprint = data.fingerprint();
      fits.push_back(std::move(failed));
    }
    if (!fits.back().converged || !std::isfinite(fits.back().aicc))
      any_failed = true;
  }
  const auto rows = compare_models(fits);
  if (!out_path.empty()) {
    auto f = detail::open_out(out_path);
    write_comparison_csv(f, rows);
  } else {
    write_comparison_csv(out, rows);
  }
  return any_failed ? kNotConverged : kOk;
}

inline int run_experiment(const std::string& spec_path, const std::string& out_dir,
                          const std::string& kind_flag, std::size_t threads, bool deterministic,
                          bool full, std::ostream& out)
{
  std::ifstream f(spec_path);
  if (!f)
    throw ParseError(0, "cannot open experiment spec '" + spec_path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("experiment spec is not valid JSON: ") + e.what());
  }
  if (!kind_flag.empty())
    doc["kind"] = kind_flag;
  auto spec = experiment_from_json(doc);
  auto& cfg = spec.config;
  if (full && spec.full_reps > 0)
    cfg.reps = spec.full_reps;
  cfg.threads = threads;

  std::filesystem::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  json manifest{{"name", cfg.name},
                {"kind", spec.kind},
                {"spec_file", std::filesystem::path(spec_path).filename().string()},
                {"version", kVersion},
                {"true_rule", cfg.true_rule.name},
                {"reps", cfg.reps},
                {"seed", cfg.seed},
                {"seed_rule",
                 "child = derive_seed(seed, {cell, replicate, role}); roles: 0 network, "
                 "1 diffusion, 2 fit jitter, 3 calibration"},
                {"generator",
                 {{"n", cfg.generator.n},
                  {"sparsity_threshold", cfg.generator.sparsity_threshold},
                  {"multiplier_max", cfg.generator.multiplier_max}}},
                {"profile",
                 {{"cutoff", cfg.profile.cutoff},
                  {"bisection_rel_tol", cfg.profile.rel_tol},
                  {"ceiling_factor", cfg.profile.ceiling_factor},
                  {"bracket_expansion", cfg.profile.expansion}}}};
  json cells = json::array();
  for (const auto& c : build_cells(cfg))
    cells.push_back(c.params);
  manifest["cells"] = cells;

  std::string table_name;
  if (spec.kind == "selection") {
    const auto res = run_selection_experiment(cfg);
    table_name = "selection.csv";
    auto t = detail::open_out((std::filesystem::path(out_dir) / table_name).string());
    write_selection_csv(t, res, cfg.true_rule);
    json cands = json::array();
    for (const auto& c : cfg.candidates)
      cands.push_back(c.name);
    manifest["candidates"] = cands;
  } else if (spec.kind == "coverage") {
    const auto res = run_coverage_experiment(cfg);
    table_name = "coverage.csv";
    auto t = detail::open_out((std::filesystem::path(out_dir) / table_name).string());
    write_coverage_csv(t, res, cfg.true_rule);
    json flagged = json::array();
    for (const auto& fl : res.flagged)
      flagged.push_back({{"cell", fl.cell + 1}, {"parameter", fl.parameter}});
    manifest["non_identified"] = flagged;
  } else {
    const auto res = run_calibration_experiment(cfg);
    table_name = "calibration.csv";
    auto t = detail::open_out((std::filesystem::path(out_dir) / table_name).string());
    write_calibration_csv(t, res, cfg.true_rule);
    manifest["calibration"] = {
        {"parameter", cfg.calibrate_param},
        {"bootstrap_reps", cfg.bootstrap_reps},
        {"method", "parametric bootstrap of the profile likelihood-ratio statistic at the MLE; "
                   "cutoff = max(base cutoff, 95th percentile / 2)"}};
  }
  manifest["table"] = table_name;
  if (!deterministic) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["timings"] = {{"total_seconds", secs}};
    manifest["threads"] = threads;
    manifest["timestamp"] = static_cast<long long>(std::time(nullptr));
  }
  detail::open_out((std::filesystem::path(out_dir) / "manifest.json").string())
      << manifest.dump(2) << '\n';
  out << "wrote " << (std::filesystem::path(out_dir) / table_name).string() << '\n';
  return kOk;
}

/// Runs the CLI on argv-style arguments (args[0] is the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr)
{
  CLI::App app{"Complex-contagion network diffusion analysis (OADA)", "cnbda"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  bool header = false;
  std::string network, order, out_path, trace;
  detail::RuleFlags rf;
  detail::FitFlags ff;

  auto* fit = app.add_subcommand("fit", "Fit a rule by maximum likelihood");
  fit->add_option("--network", network, "Network CSV")->required();
  fit->add_flag("--header", header, "Network CSV has a header row");
  fit->add_option("--order", order, "Order file or inline list, 1-based")->required();
  detail::add_rule_flags(fit, rf, true);
  detail::add_fit_flags(fit, ff);
  bool with_ci = false, json_stdout = false;
  double cutoff = kDefaultCutoff;
  fit->add_flag("--ci", with_ci, "Append profile-likelihood CIs");
  fit->add_option("--cutoff", cutoff, "Profile cutoff on the NLL scale")->capture_default_str();
  fit->add_option("--trace", trace, "Write the profile trace CSV here");
  fit->add_option("--out", out_path, "Write the JSON report here");
  fit->add_flag("--json", json_stdout, "Print the JSON report to stdout");

  std::string generate, generator_json, params, start_nodes, network_out;
  std::uint64_t sim_seed = 1;
  std::optional<std::size_t> stop_after;
  auto* sim = app.add_subcommand("simulate", "Simulate an order of acquisition");
  sim->add_option("--network", network, "Network CSV");
  sim->add_flag("--header", header, "Network CSV has a header row");
  sim->add_option("--generate", generate, "Generator, e.g. n=100,threshold=0.7,mult=3,seed=5");
  sim->add_option("--generator-json", generator_json, "Generator config as JSON");
  detail::add_rule_flags(sim, rf, true);
  sim->add_option("--params", params, "Rule parameters, comma-separated");
  sim->add_option("--seed", sim_seed, "Simulation seed")->capture_default_str();
  sim->add_option("--stop-after", stop_after, "Stop after this many acquisitions");
  sim->add_option("--start-node", start_nodes, "Initially informed individuals, 1-based");
  sim->add_option("--out", out_path, "Order file (stdout when absent)");
  sim->add_option("--trace", trace, "Per-event selection probabilities CSV");
  sim->add_option("--network-out", network_out, "Also write the network CSV");

  std::string rules_text;
  auto* cmp = app.add_subcommand("compare", "Fit several rules and rank them by AICc");
  cmp->add_option("--network", network, "Network CSV")->required();
  cmp->add_flag("--header", header, "Network CSV has a header row");
  cmp->add_option("--order", order, "Order file or inline list, 1-based")->required();
  cmp->add_option("--rules", rules_text, "Comma-separated rule names")->required();
  cmp->add_option("--fix", rf.fix, "Fixed constants, e.g. b=3");
  cmp->add_flag("--estimate-b", rf.estimate_b, "Estimate the threshold sharpness b");
  cmp->add_option("--restarts", ff.restarts, "Jittered restarts")->capture_default_str();
  cmp->add_option("--seed", ff.seed, "Jitter seed")->capture_default_str();
  cmp->add_option("--out", out_path, "Comparison CSV (stdout when absent)");

  std::string spec_path, out_dir, kind;
  std::size_t threads = default_thread_count();
  bool deterministic = false, full = false;
  auto* exp = app.add_subcommand("experiment", "Run a Monte-Carlo experiment spec");
  exp->add_option("spec", spec_path, "Experiment spec JSON")->required();
  exp->add_option("--out", out_dir, "Output directory")->required();
  exp->add_option("--kind", kind, "selection|coverage|calibrate (overrides the spec)")
      ->check(CLI::IsMember({"selection", "coverage", "calibrate"}));
  exp->add_option("--threads", threads, "Worker threads (default: $CNBDA_THREADS or 1)");
  exp->add_flag("--deterministic", deterministic, "Omit timings and timestamp from the manifest");
  exp->add_flag("--full", full, "Use the spec's full_reps instead of reps");

  auto* gen = app.add_subcommand("generate", "Write a random network CSV");
  gen->add_option("--generate", generate, "Generator, e.g. n=100,threshold=0.7,mult=3,seed=5");
  gen->add_option("--generator-json", generator_json, "Generator config as JSON");
  gen->add_option("--out", out_path, "Network CSV (stdout when absent)");

  auto* val = app.add_subcommand("validate", "Check a network CSV");
  val->add_option("--network", network, "Network CSV")->required();
  val->add_flag("--header", header, "Network CSV has a header row");

  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*fit)
      return run_fit(network, header, order, rf, ff, with_ci, cutoff, trace, out_path,
                     json_stdout, out);
    if (*sim)
      return run_simulate(network, header, generate, generator_json, rf, params, sim_seed,
                          stop_after, start_nodes, out_path, trace, network_out, out);
    if (*cmp)
      return run_compare(network, header, order, rules_text, rf.fix, rf.estimate_b, ff, out_path,
                         out, err);
    if (*exp) {
      if (threads < 1)
        throw std::invalid_argument("--threads must be >= 1");
      return run_experiment(spec_path, out_dir, kind, threads, deterministic, full, out);
    }
    if (*gen) {
      if (generate.empty() == generator_json.empty())
        throw std::invalid_argument("give exactly one of --generate, --generator-json");
      GeneratorConfig g;
      if (!generate.empty()) {
        g = detail::parse_generator(generate);
      } else {
        std::ifstream f(generator_json);
        if (!f)
          throw ParseError(0, "cannot open generator file '" + generator_json + "'");
        g = generator_from_json(json::parse(f));
      }
      const auto net = generate_network(g);
      if (out_path.empty()) {
        write_network_csv(out, net);
      } else {
        auto f = detail::open_out(out_path);
        write_network_csv(f, net);
      }
      return kOk;
    }
    if (*val) {
      const auto net = load_network_csv(network, header);
      const auto v = validate(net);
      for (const auto& w : v)
        out << to_string(w.kind) << " at (" << w.row + 1 << ", " << w.col + 1 << "): " << w.value
            << '\n';
      if (v.empty())
        out << "ok: " << net.size() << " individuals\n";
      return v.empty() ? kOk : kInputError;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

} // namespace cnbda::cli

#endif // CNBDA_TOOLS_CLI_HPP
