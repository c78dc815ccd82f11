#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace cnbda;
using Catch::Approx;

namespace {

using Status = std::vector<std::uint8_t>;

struct RandomInput {
  std::vector<double> a;
  Status z;
};

RandomInput random_input(Rng& rng, std::size_t n)
{
  RandomInput in{std::vector<double>(n), Status(n)};
  for (std::size_t j = 0; j < n; ++j) {
    in.a[j] = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 3.0);
    in.z[j] = rng.uniform() < 0.5;
  }
  return in;
}

std::vector<double> random_params(const RuleSpec& r, Rng& rng)
{
  std::vector<double> p;
  for (std::size_t i = 0; i < r.arity(); ++i)
    p.push_back(r.lower[i] + rng.uniform(0.0, 20.0));
  return p;
}

} // namespace

TEST_CASE("rules: worked rate values", "[rules]")
{
  const auto net = testing::socnet1();
  const Status z{0, 0, 1, 0, 0};
  CHECK(rate_simple(2.0, net.row(0), z) == Approx(1.0));
  CHECK(rate_simple(2.0, net.row(0), Status(5, 0)) == 0.0);
  CHECK(rate_simple(0.0, net.row(0), z) == 0.0);

  const std::vector<double> a{1, 1, 2};
  CHECK(rate_proportional(2.0, a, Status{1, 0, 1}) == Approx(1.5));
  CHECK(rate_proportional(5.0, std::vector<double>(3, 0.0), Status{1, 1, 0}) == 0.0);
  CHECK(rate_proportional(7.0, a, Status{1, 1, 1}) == Approx(7.0));

  // W_I = 3, W_U = 1.
  CHECK(frequency_dependent_rate(10.0, 2.0, 3.0, 1.0) == Approx(9.0));
  CHECK(rate_frequency_dependent(10.0, 2.0, std::vector<double>{3, 1}, Status{1, 0}) ==
        Approx(9.0));
  for (double f : {0.2, 1.0, 4.0, 17.0})
    CHECK(frequency_dependent_rate(6.0, f, 2.5, 2.5) == Approx(3.0));
}

TEST_CASE("rules: threshold closed forms", "[rules]")
{
  const double a = 10, c = 10, b = 3;
  const double eps = 1.0 / (1.0 + std::exp(b * a));
  CHECK(eps == Approx(9.36e-14).epsilon(0.01));
  CHECK(threshold_rate(a, c, b, 0.0) == 0.0);
  CHECK(std::abs(threshold_rate(a, c, b, a) - c / (1 - eps) * (0.5 - eps)) < 1e-9);
  CHECK(threshold_rate(a, c, b, a) == Approx(5.0));
  for (double w = a + 30 / b; w < 200; w += 7.3)
    CHECK(std::abs(threshold_rate(a, c, b, w) - c) < 1e-9);
  // Strictly increasing and continuous below the saturation point.
  double prev = threshold_rate(a, c, b, 0.0);
  for (double w = 0.01; w < a + 30 / b; w += 0.01) {
    const double r = threshold_rate(a, c, b, w);
    CHECK(r > prev);
    CHECK(r - prev < 0.2);
    prev = r;
  }
}

TEST_CASE("rules: eval_rate dispatch", "[rules]")
{
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto in = random_input(rng, 6);
    const double s = rng.uniform(0, 30), f = rng.uniform(0.2, 6);
    const std::vector<double> one{s}, two{s, f};
    CHECK(eval_rate(rule::asocial(), {}, in.a, in.z) == 0.0);
    CHECK(eval_rate(rule::simple(), one, in.a, in.z) == rate_simple(s, in.a, in.z));
    CHECK(eval_rate(rule::proportional(), one, in.a, in.z) == rate_proportional(s, in.a, in.z));
    CHECK(eval_rate(rule::frequency_dependent(), two, in.a, in.z) ==
          rate_frequency_dependent(s, f, in.a, in.z));
    const std::vector<double> ac{5.0, 10.0};
    CHECK(eval_rate(rule::threshold(), ac, in.a, in.z) == rate_threshold(5, 10, 3, in.a, in.z));
    const std::vector<double> acb{5.0, 10.0, 1.5};
    CHECK(eval_rate(rule::threshold(3.0, true), acb, in.a, in.z) ==
          rate_threshold(5, 10, 1.5, in.a, in.z));
  }
}

TEST_CASE("rules: argument checking", "[rules]")
{
  const std::vector<double> a{1, 2};
  const Status z{1, 0};
  CHECK_THROWS_AS(eval_rate(rule::simple(), std::vector<double>{}, a, z), std::invalid_argument);
  CHECK_THROWS_AS(eval_rate(rule::simple(), std::vector<double>{-1.0}, a, z), std::out_of_range);
  CHECK_THROWS_AS(eval_rate(rule::frequency_dependent(), std::vector<double>{1.0, 0.1}, a, z),
                  std::out_of_range);
  CHECK_THROWS(rate_simple(1.0, a, Status{1}));
}

TEST_CASE("rules: by_name", "[rules]")
{
  CHECK(rule::by_name("standard").name == "simple");
  CHECK(rule::by_name("simple").kind == RuleKind::simple);
  CHECK(rule::by_name("frequency_dependent").name == "freqdep");
  const auto t = rule::by_name("threshold", {{"b", 2.0}});
  CHECK(t.fixed_constants.at("b") == 2.0);
  CHECK(t.arity() == 2);
  CHECK(rule::by_name("threshold", {}, true).arity() == 3);
  CHECK_THROWS(rule::by_name("simple", {{"b", 2.0}}));
  CHECK_THROWS(rule::by_name("contagion"));
  const auto fd = rule::frequency_dependent();
  CHECK(fd.lower == std::vector<double>{0.0, 0.2});
  CHECK(fd.default_start == std::vector<double>{5.0, 5.0});
}

TEST_CASE("rules: properties on random inputs", "[rules]")
{
  Rng rng(11);
  const std::vector<RuleSpec> rules{rule::simple(), rule::proportional(),
                                    rule::frequency_dependent(), rule::threshold()};
  for (int t = 0; t < 300; ++t) {
    const auto in = random_input(rng, 8);
    for (const auto& r : rules) {
      const auto p = random_params(r, rng);
      const double v = eval_rate(r, p, in.a, in.z);
      CHECK(v >= 0.0);

      // Moving weight from the naive to the informed side, total fixed.
      const auto ctx = detail::context_of(in.a, in.z);
      if (ctx.uninformed > 0) {
        RateContext more = ctx;
        const double shift = ctx.uninformed * rng.uniform();
        more.informed += shift;
        more.uninformed -= shift;
        CHECK(rate(r, p, more) >= rate(r, p, ctx) - 1e-12);
      }
    }
    const double s = rng.uniform(0, 50);
    CHECK(std::abs(rate_frequency_dependent(s, 1.0, in.a, in.z) -
                   rate_proportional(s, in.a, in.z)) < 1e-12);

    std::vector<double> scaled = in.a;
    const double k = rng.uniform(0.1, 10);
    for (double& w : scaled)
      w *= k;
    const double f = rng.uniform(0.2, 5);
    CHECK(rate_proportional(s, scaled, in.z) == Approx(rate_proportional(s, in.a, in.z)));
    CHECK(rate_frequency_dependent(s, f, scaled, in.z) ==
          Approx(rate_frequency_dependent(s, f, in.a, in.z)));
    CHECK(rate_simple(s, scaled, in.z) == Approx(k * rate_simple(s, in.a, in.z)));
  }
}
