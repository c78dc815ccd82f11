#ifndef CNBDA_OADA_HPP
#define CNBDA_OADA_HPP

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cnbda/network.hpp"
#include "cnbda/rules.hpp"

namespace cnbda {

/// A network together with the order in which individuals acquired the
/// behaviour (0-based indices, first acquirer first).
class DiffusionData {
public:
  DiffusionData(Network network, std::vector<std::size_t> order, std::string label = {})
      : network_(std::move(network)), order_(std::move(order)), label_(std::move(label))
  {
    if (const auto v = validate(network_); !v.empty()) {
      const auto& w = v.front();
      throw std::invalid_argument("network invalid: " + std::string(to_string(w.kind)) + " at (" +
                                  std::to_string(w.row + 1) + ", " + std::to_string(w.col + 1) +
                                  ")" + (v.size() > 1 ? " and " + std::to_string(v.size() - 1) +
                                                            " more"
                                                      : ""));
    }
    if (order_.empty())
      throw std::invalid_argument("acquisition order is empty");
    std::vector<std::uint8_t> seen(network_.size(), 0);
    for (std::size_t k = 0; k < order_.size(); ++k) {
      const auto id = order_[k];
      if (id >= network_.size())
        throw std::out_of_range("acquisition " + std::to_string(k + 1) + ": individual " +
                                std::to_string(id + 1) + " is not in a network of " +
                                std::to_string(network_.size()));
      if (seen[id])
        throw std::invalid_argument("acquisition " + std::to_string(k + 1) + ": individual " +
                                    std::to_string(id + 1) + " appears more than once");
      seen[id] = 1;
    }
    std::uint64_t h = splitmix64(network_.size());
    for (double w : network_.weights())
      h = splitmix64(h ^ std::bit_cast<std::uint64_t>(w));
    for (auto id : order_)
      h = splitmix64(h ^ static_cast<std::uint64_t>(id));
    fingerprint_ = h;
  }

  const Network& network() const noexcept { return network_; }
  std::span<const std::size_t> order() const noexcept { return order_; }
  std::size_t events() const noexcept { return order_.size(); }
  const std::string& label() const noexcept { return label_; }
  /// Hash of the network weights and order.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
  Network network_;
  std::vector<std::size_t> order_;
  std::string label_;
  std::uint64_t fingerprint_ = 0;
};

/// Per-event state derived from a DiffusionData.
///
/// Event k (0-based) has the first k acquirers informed. For every naive
/// individual at that event the table caches the connection sums to informed
/// and naive others plus log(W_U / W_I), which is all the built-in rules need.
/// Entries are laid out event by event in `naive()` order.
class EventTable {
public:
  struct Event {
    std::size_t acquirer;
    std::size_t first;          // offset of this event's entries
    std::size_t count;          // naive individuals at this event
    std::size_t acquirer_slot;  // acquirer position among them
  };

  explicit EventTable(DiffusionData data) : data_(std::move(data))
  {
    const auto& net = data_.network();
    const std::size_t n = net.size();
    const std::size_t d = data_.events();

    std::vector<double> informed(n, 0.0);
    std::vector<double> uninformed(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (double w : net.row(i))
        uninformed[i] += w;

    std::vector<std::uint8_t> is_informed(n, 0);
    std::size_t total = 0;
    for (std::size_t k = 0; k < d; ++k)
      total += n - k;
    naive_.reserve(total);
    informed_.reserve(total);
    uninformed_.reserve(total);
    log_ratio_.reserve(total);

    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t acq = data_.order()[k];
      Event ev{acq, naive_.size(), 0, 0};
      for (std::size_t i = 0; i < n; ++i) {
        if (is_informed[i])
          continue;
        if (i == acq)
          ev.acquirer_slot = ev.count;
        ++ev.count;
        naive_.push_back(i);
        const double wi = informed[i];
        const double wu = uninformed[i] > 0.0 ? uninformed[i] : 0.0;
        informed_.push_back(wi);
        uninformed_.push_back(wu);
        // +inf drives the frequency-dependent rate to 0, -inf to s.
        log_ratio_.push_back(wi > 0.0 ? (wu > 0.0 ? std::log(wu / wi) : -kInf) : kInf);
      }
      events_.push_back(ev);
      is_informed[acq] = 1;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = net(i, acq);
        informed[i] += w;
        uninformed[i] -= w;
      }
    }
  }

  const DiffusionData& data() const noexcept { return data_; }
  const Network& network() const noexcept { return data_.network(); }
  std::size_t population() const noexcept { return data_.network().size(); }
  std::size_t event_count() const noexcept { return events_.size(); }

  std::span<const Event> events() const noexcept { return events_; }
  std::span<const std::size_t> naive() const noexcept { return naive_; }
  std::span<const double> informed_weight() const noexcept { return informed_; }
  std::span<const double> uninformed_weight() const noexcept { return uninformed_; }
  std::span<const double> log_uninformed_ratio() const noexcept { return log_ratio_; }

  std::span<const std::size_t> naive_at(std::size_t k) const
  {
    const auto& e = events_.at(k);
    return std::span<const std::size_t>(naive_).subspan(e.first, e.count);
  }

  /// Status vector z before event k.
  std::vector<std::uint8_t> status_before(std::size_t k) const
  {
    if (k >= events_.size())
      throw std::out_of_range("event index out of range");
    std::vector<std::uint8_t> z(population(), 0);
    for (std::size_t j = 0; j < k; ++j)
      z[data_.order()[j]] = 1;
    return z;
  }

private:
  DiffusionData data_;
  std::vector<Event> events_;
  std::vector<std::size_t> naive_;
  std::vector<double> informed_;
  std::vector<double> uninformed_;
  std::vector<double> log_ratio_;
};

namespace detail {

/// -sum_k log(R_acq / sum_naive R), R = social(entry) + 1.
template <class SocialRate>
double accumulate_nll(const EventTable& t, SocialRate&& social)
{
  double nll = 0.0;
  for (const auto& ev : t.events()) {
    double sum = 0.0;
    double r_acq = 1.0;
    for (std::size_t p = ev.first, end = ev.first + ev.count; p < end; ++p) {
      const double r = social(p) + 1.0;
      sum += r;
      if (p == ev.first + ev.acquirer_slot)
        r_acq = r;
    }
    nll += std::log(sum) - std::log(r_acq);
  }
  return nll;
}

inline double asocial_nll(const EventTable& t)
{
  double nll = 0.0;
  for (const auto& ev : t.events())
    nll += std::log(static_cast<double>(ev.count));
  return nll;
}

/// Unchecked NLL. Returns +inf when a rate is not finite.
inline double nll(const RuleSpec& r, std::span<const double> p, const EventTable& t)
{
  const auto wi = t.informed_weight();
  const auto wu = t.uninformed_weight();
  double v = 0.0;
  switch (r.kind) {
  case RuleKind::asocial: return asocial_nll(t);
  case RuleKind::simple: {
    const double s = p[0];
    v = accumulate_nll(t, [&](std::size_t e) { return s * wi[e]; });
    break;
  }
  case RuleKind::proportional: {
    const double s = p[0];
    v = accumulate_nll(t, [&](std::size_t e) { return proportional_rate(s, wi[e], wi[e] + wu[e]); });
    break;
  }
  case RuleKind::frequency_dependent: {
    const double s = p[0];
    const double f = p[1];
    const auto lr = t.log_uninformed_ratio();
    v = accumulate_nll(t, [&](std::size_t e) { return s / (1.0 + std::exp(f * lr[e])); });
    break;
  }
  case RuleKind::threshold: {
    const double a = p[0];
    const double c = p[1];
    const double b = p.size() > 2 ? p[2] : r.fixed_constants.at("b");
    const double eps = logistic(b * (0.0 - a));
    const double scale = c / (1.0 - eps);
    v = accumulate_nll(t, [&](std::size_t e) {
      return scale * (logistic(b * (wi[e] - a)) - eps);
    });
    break;
  }
  case RuleKind::custom: {
    if (r.sums_only) {
      v = accumulate_nll(t, [&](std::size_t e) {
        return r.custom(p, RateContext{wi[e], wu[e], {}, {}});
      });
    } else {
      // Walk events in order, maintaining z.
      const auto& net = t.network();
      const auto naive = t.naive();
      std::vector<std::uint8_t> z(t.population(), 0);
      std::size_t current = 0;
      const auto events = t.events();
      v = accumulate_nll(t, [&](std::size_t e) {
        while (current + 1 < events.size() && e >= events[current + 1].first) {
          z[events[current].acquirer] = 1;
          ++current;
        }
        const std::size_t i = naive[e];
        return r.custom(p, RateContext{wi[e], wu[e], net.row(i), z});
      });
    }
    break;
  }
  }
  return std::isfinite(v) ? v : kInf;
}

} // namespace detail

/// OADA negative log-likelihood of the observed order under a rule.
/// Partial diffusions condition on the observed events only.
inline double negative_log_likelihood(const RuleSpec& r, std::span<const double> params,
                                      const EventTable& t)
{
  check_params(r, params);
  const double v = detail::nll(r, params, t);
  if (!std::isfinite(v))
    throw std::domain_error("rule '" + r.name + "' produced a non-finite rate");
  return v;
}

/// AICc with sample size equal to the number of acquisition events.
/// Undefined (returns +inf) when k > 0 and n <= k + 1.
inline double aicc(double nll, std::size_t k, std::size_t n)
{
  const double kk = static_cast<double>(k);
  if (k == 0)
    return 2.0 * nll;
  if (n <= k + 1)
    return kInf;
  return 2.0 * kk + 2.0 * nll + 2.0 * kk * (kk + 1.0) / (static_cast<double>(n) - kk - 1.0);
}

/// Parses 1-based indices, one per line or comma-separated; blank lines are
/// ignored. Returns 0-based indices.
inline std::vector<std::size_t> read_order(std::istream& in)
{
  std::vector<std::size_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty())
      continue;
    for (auto field : detail::split(body, ',')) {
      const std::string tok(detail::trim(field));
      if (tok.empty())
        continue;
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception&) {
        throw ParseError(line_no, "not an integer: '" + tok + "'");
      }
      if (used != tok.size())
        throw ParseError(line_no, "not an integer: '" + tok + "'");
      if (v < 1)
        throw ParseError(line_no, "individual indices are 1-based, got " + tok);
      out.push_back(static_cast<std::size_t>(v - 1));
    }
  }
  return out;
}

inline std::vector<std::size_t> load_order(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError(0, "cannot open order file '" + path + "'");
  return read_order(in);
}

/// One 1-based index per line.
inline void write_order(std::ostream& out, std::span<const std::size_t> order)
{
  for (auto id : order)
    out << id + 1 << '\n';
}

} // namespace cnbda

#endif // CNBDA_OADA_HPP
