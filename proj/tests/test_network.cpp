#include <catch_amalgamated.hpp>

#include <sstream>

#include "helpers.hpp"

using namespace cnbda;
using Catch::Approx;

TEST_CASE("network: shape and access", "[network]")
{
  const auto net = testing::socnet1();
  CHECK(net.size() == 5);
  CHECK(net(3, 4) == 0.8);
  CHECK(net(0, 3) == 0.0);
  CHECK(net.row(1).size() == 5);
  CHECK(validate(net).empty());
  CHECK(total_connection(net, 0) == Approx(1.0));
  CHECK(total_connection(net, 3) == Approx(0.8));
  CHECK_THROWS_AS(total_connection(net, 5), std::out_of_range);
  CHECK_THROWS_AS(Network(1, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Network(3, std::vector<double>(8, 0.0)), std::invalid_argument);
}

TEST_CASE("network: validation reports each violation", "[network]")
{
  const auto net = Network::from_rows({{0, -1, 0}, {0, 1, std::nan("")}, {0, 0, 0}});
  const auto v = validate(net);
  REQUIRE(v.size() == 3);
  CHECK(v[0].kind == WeightViolation::Kind::negative);
  CHECK(v[0].row == 0);
  CHECK(v[0].col == 1);
  CHECK(v[1].kind == WeightViolation::Kind::nonzero_diagonal);
  CHECK(v[2].kind == WeightViolation::Kind::non_finite);
}

TEST_CASE("network: CSV round trip is exact", "[network]")
{
  GeneratorConfig g;
  g.n = 12;
  g.multiplier_max = 3;
  g.seed = 9;
  const auto net = generate_network(g);
  std::stringstream buf;
  write_network_csv(buf, net);
  const auto back = read_network_csv(buf);
  CHECK(back == net);
}

TEST_CASE("network: CSV errors name the line", "[network]")
{
  SECTION("ragged row")
  {
    std::istringstream in("0,1,0\n1,0\n0,0,0\n");
    try {
      read_network_csv(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SECTION("bad number")
  {
    std::istringstream in("0,1\nx,0\n");
    try {
      read_network_csv(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SECTION("not square")
  {
    std::istringstream in("0,1,1\n1,0,1\n");
    CHECK_THROWS_AS(read_network_csv(in), ParseError);
  }
  SECTION("header is skipped when requested")
  {
    std::istringstream in("a,b\n0,2\n2,0\n");
    const auto net = read_network_csv(in, true);
    CHECK(net(0, 1) == 2.0);
  }
}

TEST_CASE("network: generator is deterministic and well formed", "[network]")
{
  GeneratorConfig g;
  g.seed = 42;
  const auto a = generate_network(g);
  const auto b = generate_network(g);
  CHECK(a == b);
  g.seed = 43;
  CHECK_FALSE(generate_network(g) == a);
  CHECK(validate(a).empty());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a(i, i) == 0.0);
  for (double w : a.weights())
    CHECK((w == 0.0 || (w >= 0.7 && w < 1.0)));
}

TEST_CASE("network: generator row-sum moments", "[network]")
{
  // Off-diagonal entries are U[0,1) kept when >= t: mean m1, second moment m2.
  // Row sums are S0 * M with S0 a sum of 99 entries and M ~ U[0, 3).
  const double t = 0.7;
  const double keep = 1.0 - t;
  const double m1 = keep * (1.0 + t) / 2.0;
  const double m2 = (1.0 - t * t * t) / 3.0;
  const double s_mean = 99 * m1;
  const double s_var = 99 * (m2 - m1 * m1);
  const double mean = 1.5 * s_mean;
  const double sd = std::sqrt(3.0 * (s_var + s_mean * s_mean) - mean * mean);

  GeneratorConfig g;
  g.multiplier_max = 3.0;
  double sum = 0.0, sum2 = 0.0;
  std::size_t rows = 0, zeros = 0, cells = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    g.seed = seed;
    const auto net = generate_network(g);
    for (std::size_t i = 0; i < net.size(); ++i) {
      const double r = total_connection(net, i);
      sum += r;
      sum2 += r * r;
      ++rows;
      for (std::size_t j = 0; j < net.size(); ++j) {
        if (i == j)
          continue;
        ++cells;
        zeros += net(i, j) == 0.0;
      }
    }
  }
  const double emp_mean = sum / rows;
  const double emp_sd = std::sqrt(sum2 / rows - emp_mean * emp_mean);
  CHECK(emp_mean == Approx(mean).epsilon(0.15));
  CHECK(emp_sd == Approx(sd).epsilon(0.15));
  CHECK(mean == Approx(38).epsilon(0.02));
  CHECK(sd == Approx(23).epsilon(0.02));
  const double frac = static_cast<double>(zeros) / cells;
  CHECK(std::abs(frac - t) < 4 * std::sqrt(t * keep / cells));
}

TEST_CASE("network: generator argument checks", "[network]")
{
  GeneratorConfig g;
  g.n = 1;
  CHECK_THROWS(generate_network(g));
  g = {};
  g.sparsity_threshold = 1.5;
  CHECK_THROWS(generate_network(g));
  g = {};
  g.multiplier_max = -1;
  CHECK_THROWS(generate_network(g));
}
