#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace cnbda;
using Catch::Approx;

namespace {

struct Quadratic {
  double a, b, c;  // Hessian [[a, b], [b, c]]
  double m0, m1;

  double operator()(std::span<const double> x) const
  {
    const double d0 = x[0] - m0, d1 = x[1] - m1;
    return 0.5 * (a * d0 * d0 + 2 * b * d0 * d1 + c * d1 * d1);
  }
  double profile0(double v) const { return 0.5 * (a - b * b / c) * (v - m0) * (v - m0); }
};

} // namespace

TEST_CASE("profile: one-parameter quadratic interval", "[profile]")
{
  for (double h : {0.3, 2.0, 50.0}) {
    auto f = [h](std::span<const double> x) { return 0.5 * h * (x[0] - 4.0) * (x[0] - 4.0); };
    const Box box{{-kInf}, {kInf}};
    const auto ci = profile_interval(f, box, std::vector<double>{4.0}, 0.0, 0);
    const double half = std::sqrt(2 * 1.92 / h);
    CHECK(ci.lower == Approx(4.0 - half).margin(1e-3));
    CHECK(ci.upper == Approx(4.0 + half).margin(1e-3));
    CHECK_FALSE(ci.lower_open);
    CHECK_FALSE(ci.upper_open);
    CHECK(ci.contains(4.0));
  }
}

TEST_CASE("profile: two-parameter quadratic profile", "[profile]")
{
  const Quadratic q{3.0, 1.2, 2.0, 1.5, -0.5};
  const Box box{{-kInf, -kInf}, {kInf, kInf}};
  NelderMeadOptions inner;
  inner.tolerance = 1e-14;
  for (double v : {-2.0, 0.0, 1.5, 2.2, 6.0}) {
    Profiler p(q, box, std::vector<double>{v, 0.0}, 0, inner);
    CHECK(p(v) == Approx(q.profile0(v)).margin(1e-6));
  }
  const auto ci = profile_interval(q, box, std::vector<double>{1.5, -0.5}, 0.0, 0);
  const double half = std::sqrt(2 * 1.92 / (q.a - q.b * q.b / q.c));
  CHECK(ci.lower == Approx(1.5 - half).margin(1e-3));
  CHECK(ci.upper == Approx(1.5 + half).margin(1e-3));
}

TEST_CASE("profile: bounds and open ends", "[profile]")
{
  SECTION("bound inside the interval")
  {
    auto f = [](std::span<const double> x) { return 0.5 * (x[0] - 0.5) * (x[0] - 0.5); };
    const Box box{{0.0}, {kInf}};
    const auto ci = profile_interval(f, box, std::vector<double>{0.5}, 0.0, 0);
    CHECK(ci.lower == 0.0);
    CHECK(ci.contains_lower_bound);
    CHECK_FALSE(ci.lower_open);
    CHECK(ci.upper == Approx(0.5 + std::sqrt(3.84)).margin(1e-3));
  }
  SECTION("flat side never crosses")
  {
    auto f = [](std::span<const double> x) { return 5.0 / (1.0 + x[0]); };
    const Box box{{0.0}, {kInf}};
    const auto ci = profile_interval(f, box, std::vector<double>{1e6}, 5.0 / (1.0 + 1e6), 0);
    CHECK(ci.upper_open);
    CHECK(ci.contains(1e12));
  }
}

TEST_CASE("profile: OADA properties", "[profile]")
{
  GeneratorConfig g;
  g.multiplier_max = 3;
  g.seed = 31;
  const auto net = generate_network(g);
  const std::vector<double> truth{30.0, 4.0};
  const EventTable t(simulate_diffusion(net, rule::frequency_dependent(), truth, 77).data);
  const auto fit = fit_oada(t, rule::frequency_dependent());
  REQUIRE(fit.converged);

  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(profile_nll(t, fit.rule, i, fit.mle[i], fit.box, fit.mle) ==
          Approx(fit.nll).margin(1e-6));
    const auto ci = profile_ci(t, fit, i);
    CHECK(ci.contains(fit.mle[i]));
    if (!ci.lower_open && !ci.contains_lower_bound)
      CHECK(profile_nll(t, fit.rule, i, ci.lower, fit.box, fit.mle) ==
            Approx(fit.nll + 1.92).margin(1e-3));
    if (!ci.upper_open)
      CHECK(profile_nll(t, fit.rule, i, ci.upper, fit.box, fit.mle) ==
            Approx(fit.nll + 1.92).margin(1e-3));

    ProfileOptions wide;
    wide.cutoff = 3.0;
    const auto w = profile_ci(t, fit, i, wide);
    CHECK((w.lower_open || w.lower <= ci.lower + 1e-9));
    CHECK((w.upper_open || (!ci.upper_open && w.upper >= ci.upper - 1e-9)));
  }

  const auto p = rule::proportional();
  const auto pfit = fit_oada(t, p);
  for (double s : {1.0, 10.0, 100.0})
    CHECK(profile_nll(t, p, 0, s) == negative_log_likelihood(p, std::vector<double>{s}, t));
}

TEST_CASE("profile: argument checks", "[profile]")
{
  const auto t = testing::socnet1_table();
  const auto fit = fit_oada(t, rule::proportional());
  CHECK_THROWS_AS(profile_ci(t, fit, 1), std::out_of_range);
  const EventTable other(DiffusionData(testing::socnet1(), {0, 1, 2, 3, 4}));
  CHECK_THROWS_AS(profile_ci(other, fit, 0), std::invalid_argument);
  ProfileOptions bad;
  bad.cutoff = 0;
  CHECK_THROWS(profile_ci(t, fit, 0, bad));
}
