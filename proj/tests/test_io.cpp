#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"

using namespace cnbda;
using Catch::Approx;

namespace {

json selection_doc()
{
  return json::parse(R"({
    "name": "t",
    "kind": "selection",
    "generator": {"n": 30, "sparsity_threshold": 0.7, "multiplier_max": 3, "seed": 0},
    "true_rule": "freqdep",
    "grid": {"s": [0, 10], "f": [3]},
    "candidates": ["asocial", "standard", "proportional", "freqdep"],
    "reps": 5,
    "seed": 1,
    "fit": {"freqdep": {"start": [5, 5], "lower": [0, 0.2], "upper": [null, null], "restarts": 3}}
  })");
}

std::string field_of(const json& doc)
{
  try {
    experiment_from_json(doc);
  } catch (const SpecError& e) {
    return e.field();
  }
  return "";
}

} // namespace

TEST_CASE("io: fit report", "[io]")
{
  const auto t = testing::socnet1_table();
  const auto fit = fit_oada(t, rule::asocial());
  const auto j = fit_report(fit);
  CHECK(j.at("rule") == "asocial");
  CHECK(j.at("k") == 0);
  CHECK(j.at("events") == 5);
  CHECK(j.at("nll").get<double>() == Approx(std::log(120.0)));
  CHECK(j.at("aicc").get<double>() == Approx(2 * std::log(120.0)));
  CHECK_FALSE(j.contains("ci"));

  const auto thr = fit_oada(t, rule::threshold());
  std::vector<ProfileCI> cis{profile_ci(t, thr, 1)};
  const auto jt = fit_report(thr, cis);
  CHECK(jt.at("fixed").at("b") == 3.0);
  CHECK(jt.at("mle").contains("a"));
  CHECK(jt.at("ci").contains("c"));
  CHECK(jt.at("ci").at("c").contains("lower_open"));
}

TEST_CASE("io: comparison CSV", "[io]")
{
  const auto t = testing::socnet1_table();
  std::vector<FitResult> fits{fit_oada(t, rule::asocial()), fit_oada(t, rule::proportional())};
  std::ostringstream out;
  write_comparison_csv(out, compare_models(fits));
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "model,k,nll,aicc,delta_aicc,favored");
}

TEST_CASE("io: experiment spec parsing", "[io]")
{
  const auto spec = experiment_from_json(selection_doc());
  const auto& cfg = spec.config;
  CHECK(cfg.true_rule.name == "freqdep");
  CHECK(cfg.grid == std::vector<std::vector<double>>{{0, 10}, {3}});
  CHECK(cfg.candidates.size() == 4);
  CHECK(cfg.candidates[1].name == "simple");
  CHECK(cfg.fit.at("freqdep").restarts == 3);
  CHECK(std::isinf(cfg.fit.at("freqdep").upper[0]));
  CHECK(cfg.generator.n == 30);

  auto d = selection_doc();
  d["reps"] = 0;
  CHECK(field_of(d) == "reps");
  d = selection_doc();
  d["colour"] = "red";
  CHECK(field_of(d) == "colour");
  d = selection_doc();
  d["grid"]["f"] = json::array({0.1});
  CHECK(field_of(d) == "grid.f");
  d = selection_doc();
  d["candidates"] = json::array({"asocial", "simple", "standard"});
  CHECK(field_of(d) == "candidates");
  d = selection_doc();
  d["generator"]["sparsity_threshold"] = 2;
  CHECK(field_of(d).rfind("generator", 0) == 0);
  d = selection_doc();
  d["kind"] = "calibrate";
  CHECK(field_of(d) == "calibrate_param");
  d = selection_doc();
  d["fit"]["freqdep"]["start"] = json::array({5});
  CHECK(field_of(d) == "fit.freqdep");
}

TEST_CASE("io: shipped experiment specs parse", "[io]")
{
  const std::filesystem::path dir = std::filesystem::path(CNBDA_SOURCE_DIR) / "configs";
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json")
      continue;
    std::ifstream in(entry.path());
    INFO(entry.path().string());
    CHECK_NOTHROW(experiment_from_json(json::parse(in)));
    ++seen;
  }
  CHECK(seen >= 5);
}

TEST_CASE("io: fit report keys follow the shipped schemas", "[io]")
{
  const auto dir = std::filesystem::path(CNBDA_SOURCE_DIR) / "docs" / "schemas";
  std::ifstream fs_in(dir / "fit_report.schema.json"), ci_in(dir / "ci_report.schema.json");
  const auto fit_schema = json::parse(fs_in);
  const auto ci_schema = json::parse(ci_in);

  const auto t = testing::socnet1_table();
  const auto fit = fit_oada(t, rule::threshold());
  std::vector<ProfileCI> cis{profile_ci(t, fit, 0), profile_ci(t, fit, 1)};
  const auto report = fit_report(fit, cis);
  for (const auto& key : fit_schema.at("required"))
    CHECK(report.contains(key.get<std::string>()));
  for (const auto& [key, _] : report.items())
    CHECK(fit_schema.at("properties").contains(key));
  for (const auto& [name, ci] : report.at("ci").items()) {
    for (const auto& key : ci_schema.at("required"))
      CHECK(ci.contains(key.get<std::string>()));
    for (const auto& [key, _] : ci.items())
      CHECK(ci_schema.at("properties").contains(key));
  }
}
