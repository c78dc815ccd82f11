#ifndef CNBDA_TESTS_HELPERS_HPP
#define CNBDA_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cnbda/cnbda.hpp"

namespace testing {

inline cnbda::Network socnet1()
{
  return cnbda::Network::from_rows({{0, .5, .5, 0, 0},
                                    {.5, 0, .5, 0, 0},
                                    {.5, .5, 0, 0, 0},
                                    {0, 0, 0, 0, .8},
                                    {0, 0, 0, .8, 0}},
                                   "socnet1");
}

/// 0-based form of the 1-based order 4,5,2,3,1.
inline std::vector<std::size_t> socnet1_order() { return {3, 4, 1, 2, 0}; }

inline cnbda::EventTable socnet1_table()
{
  return cnbda::EventTable(cnbda::DiffusionData(socnet1(), socnet1_order()));
}

/// All n! orders of 0..n-1 in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_orders(std::size_t n)
{
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do
    out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Reference NLL straight from the definition: at every event, evaluate the
/// rule on full vectors for each naive individual.
inline double brute_nll(const cnbda::RuleSpec& r, const std::vector<double>& p,
                        const cnbda::Network& net, const std::vector<std::size_t>& order)
{
  const std::size_t n = net.size();
  std::vector<std::uint8_t> z(n, 0);
  double nll = 0.0;
  for (auto acq : order) {
    double total = 0.0, mine = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (z[i])
        continue;
      const double R = cnbda::eval_rate(r, p, net.row(i), z) + 1.0;
      total += R;
      if (i == acq)
        mine = R;
    }
    nll -= std::log(mine / total);
    z[acq] = 1;
  }
  return nll;
}

inline double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

} // namespace testing

#endif // CNBDA_TESTS_HELPERS_HPP
