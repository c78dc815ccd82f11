#ifndef CNBDA_SIMULATE_HPP
#define CNBDA_SIMULATE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "cnbda/network.hpp"
#include "cnbda/oada.hpp"
#include "cnbda/random.hpp"
#include "cnbda/rules.hpp"

namespace cnbda {

struct SimulationOptions {
  /// Stop after this many acquisitions (including any initially informed).
  std::optional<std::size_t> stop_after;
  /// Individuals informed before the first draw. They head the returned order.
  std::vector<std::size_t> initially_informed;
  bool record_trace = true;
};

/// Selection law at one drawn event: probability of each individual being the
/// next acquirer, NaN for those already informed.
struct TraceRow {
  std::size_t event;  // 0-based index into the returned order
  std::size_t acquirer;
  std::vector<double> probability;
};

struct SimulationResult {
  DiffusionData data;
  std::vector<TraceRow> trace;
};

/// Order-of-acquisition simulation. At each event every naive individual has
/// weight R_i = T(a_i, z) + 1 and is drawn with probability R_i / sum R.
inline SimulationResult simulate_diffusion(const Network& net, const RuleSpec& rule,
                                           std::span<const double> params, std::uint64_t seed,
                                           const SimulationOptions& opt = {})
{
  check_params(rule, params);
  const std::size_t n = net.size();
  const std::size_t stop = std::min(opt.stop_after.value_or(n), n);
  if (opt.stop_after && *opt.stop_after == 0)
    throw std::invalid_argument("stop_after must be >= 1");
  if (opt.initially_informed.size() > stop)
    throw std::invalid_argument("more initially informed individuals than stop_after allows");

  Rng rng(seed);
  std::vector<std::uint8_t> z(n, 0);
  std::vector<double> informed(n, 0.0);
  std::vector<double> uninformed(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (double w : net.row(i))
      uninformed[i] += w;

  std::vector<std::size_t> order;
  order.reserve(stop);
  auto inform = [&](std::size_t j) {
    if (j >= n)
      throw std::out_of_range("initially informed individual out of range");
    if (z[j])
      throw std::invalid_argument("initially informed individual listed twice");
    z[j] = 1;
    order.push_back(j);
    for (std::size_t i = 0; i < n; ++i) {
      informed[i] += net(i, j);
      uninformed[i] -= net(i, j);
    }
  };
  for (auto j : opt.initially_informed)
    inform(j);

  std::vector<TraceRow> trace;
  std::vector<double> r(n, 0.0);
  while (order.size() < stop) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (z[i]) {
        r[i] = 0.0;
        continue;
      }
      RateContext ctx{informed[i], uninformed[i] > 0.0 ? uninformed[i] : 0.0, {}, {}};
      if (!rule.sums_only) {
        ctx.weights = net.row(i);
        ctx.status = z;
      }
      const double t = rate(rule, params, ctx);
      if (!std::isfinite(t) || t < 0.0)
        throw std::domain_error("rule '" + rule.name + "' produced an invalid rate");
      r[i] = t + 1.0;
      total += r[i];
    }

    const double u = rng.uniform() * total;
    std::size_t pick = n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (z[i])
        continue;
      acc += r[i];
      pick = i;
      if (u < acc)
        break;
    }

    if (opt.record_trace) {
      TraceRow row{order.size(), pick, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN())};
      for (std::size_t i = 0; i < n; ++i)
        if (!z[i])
          row.probability[i] = r[i] / total;
      trace.push_back(std::move(row));
    }
    inform(pick);
  }

  return {DiffusionData(net, std::move(order), "simulated"), std::move(trace)};
}

/// Trace CSV: event, acquirer (1-based), then one probability column per
/// individual, blank for those already informed.
inline void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace, std::size_t n)
{
  out << "event,acquirer";
  for (std::size_t i = 0; i < n; ++i)
    out << ",p" << i + 1;
  out << '\n';
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& row : trace) {
    out << row.event + 1 << ',' << row.acquirer + 1;
    for (double p : row.probability) {
      out << ',';
      if (!std::isnan(p))
        out << p;
    }
    out << '\n';
  }
  out.precision(old);
}

} // namespace cnbda

#endif // CNBDA_SIMULATE_HPP
