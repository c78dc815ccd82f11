#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace cnbda;
using Catch::Approx;

TEST_CASE("optimize: Nelder-Mead on Rosenbrock", "[optimize]")
{
  auto rosen = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  NelderMeadOptions opt;
  opt.tolerance = 1e-14;
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, opt);
  CHECK(r.converged);
  CHECK(r.x[0] == Approx(1.0).margin(1e-4));
  CHECK(r.x[1] == Approx(1.0).margin(1e-4));
}

TEST_CASE("optimize: box transform round trip", "[optimize]")
{
  const Box box{{0.0, 0.2, -kInf, -1.0, -kInf}, {kInf, kInf, 5.0, 1.0, kInf}};
  const BoxTransform t(box);
  const std::vector<double> x{3.5, 0.9, -2.0, 0.3, -7.0};
  const auto back = t.to_external(t.to_internal(x));
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(back[i] == Approx(x[i]).epsilon(1e-12));
  CHECK_THROWS(Box{{1.0}, {0.0}}.check());
  CHECK(box.contains(x));
  CHECK_FALSE(box.contains(std::vector<double>{-1.0, 0.9, -2.0, 0.3, -7.0}));
}

TEST_CASE("optimize: solutions respect bounds and snap onto them", "[optimize]")
{
  const Box box{{0.0}, {kInf}};
  auto f = [](std::span<const double> x) { return (x[0] + 2.0) * (x[0] + 2.0); };
  const auto r = minimize_in_box(f, box, std::vector<double>{3.0});
  CHECK(r.x[0] == 0.0);
  CHECK(r.at_bound[0]);
  CHECK_FALSE(r.at_ceiling[0]);

  auto g = [](std::span<const double> x) { return 1.0 / (1.0 + x[0]); };
  const auto c = minimize_in_box(g, box, std::vector<double>{1.0});
  CHECK(c.at_ceiling[0]);
  CHECK(c.x[0] <= 1e10 * 1.0000001);
}

TEST_CASE("optimize: multistart never ends worse than a start", "[optimize]")
{
  // Two basins in a, the deeper one far from the user start.
  auto f = [](std::span<const double> x) {
    const double a = x[0], c = x[1];
    return std::min(std::pow(a - 1, 2) + 0.5, std::pow(a - 3, 2)) + std::pow(c - 2, 2);
  };
  const Box box{{0.0, 0.0}, {kInf, kInf}};
  const auto r = minimize_multistart(f, box, std::vector<double>{1.0, 1.0}, 8, 4);
  REQUIRE(r.start_values.size() == 9);
  for (std::size_t i = 0; i < r.start_values.size(); ++i)
    CHECK(r.end_values[i] <= r.start_values[i]);
  CHECK(r.best.value == Approx(0.0).margin(1e-6));
  CHECK(r.best.x[0] == Approx(3.0).margin(1e-3));

  const auto again = minimize_multistart(f, box, std::vector<double>{1.0, 1.0}, 8, 4);
  CHECK(again.best.x == r.best.x);
}

TEST_CASE("optimize: jitter stays in the box", "[optimize]")
{
  const Box box{{0.0, 0.2, 0.0}, {kInf, kInf, 1.0}};
  Rng rng(1);
  const std::vector<double> start{5.0, 5.0, 0.5};
  for (int i = 0; i < 200; ++i) {
    const auto j = jitter_start(box, start, rng);
    CHECK(box.contains(j));
    CHECK(j[0] >= 5.0 * 0.25 - 1e-12);
    CHECK(j[0] <= 5.0 * 4.0 + 1e-12);
  }
}
