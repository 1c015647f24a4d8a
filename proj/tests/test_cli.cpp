#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "recomb/cli/commands.hpp"
#include "recomb/cli/json_io.hpp"
#include "support.hpp"

using namespace recomb;
using namespace recomb::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("recomb_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "recomb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_scenario(const fs::path& dir, const json& doc, const std::string& name = "scenario.json") {
  const auto p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json generic_n3() {
  return {{"n", 3},
          {"rates", {{"1|2,3", 0.4}, {"1,2|3", 0.7}, {"1,3|2", 0.25}, {"1|2|3", 0.3}}},
          {"initial_measure", "product:0.3,0.7;0.6,0.4;0.5,0.5"},
          {"time_grid", {{"start", 0}, {"end", 3}, {"points", 7}}},
          {"monte_carlo", {{"samples", 20000}, {"seed", 42}}}};
}

json degenerate_n4() {
  return {{"n", 4},
          {"rates", {{"1,2|3,4", 1.0}, {"1|2|3|4", 1.0}, {"1|2,3,4", 0.7}, {"1,2,3|4", 0.3}}},
          {"time_grid", json::array({0, 0.1, 1, 10})},
          {"monte_carlo", {{"samples", 100000}, {"seed", 7}}}};
}

}  // namespace

TEST_CASE("lattice command") {
  auto r = invoke({"lattice", "-n", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("B(n) = 15") != std::string::npos);
  CHECK(r.out.find("two-block partitions = 7") != std::string::npos);
  r = invoke({"lattice", "-n", "8", "--format", "json"});
  CHECK(json::parse(r.out)["bell"] == 4140);
  r = invoke({"lattice", "-n", "1", "--format", "json", "--enumerate", "--mobius"});
  const auto doc = json::parse(r.out);
  CHECK(doc["bell"] == 1);
  CHECK(doc["two_block"] == 0);
  CHECK(doc["partitions"].size() == 1);
  r = invoke({"lattice", "-n", "3", "--format", "json", "--mobius"});
  CHECK(json::parse(r.out)["mobius_from_bottom"]["1,2,3"] == 2);
  CHECK(invoke({"lattice", "-n", "11"}).code == 2);
  CHECK(invoke({"lattice", "-n", "0"}).code == 2);
  CHECK(invoke({"lattice"}).code == 2);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("scenario validation") {
  TempDir tmp;
  auto code_for = [&](json doc) {
    return invoke({"solve", "--config", write_scenario(tmp.path, doc).string(), "--out", tmp.path.string()}).code;
  };
  CHECK(code_for(generic_n3()) == 0);
  auto bad = generic_n3();
  bad["rates"]["1|2,3"] = -1.0;
  CHECK(code_for(bad) == 2);
  bad = generic_n3();
  bad["rates"]["1|2"] = 1.0;
  CHECK(code_for(bad) == 2);
  bad = generic_n3();
  bad["time_grid"] = json::array({0.5, 1.0});
  CHECK(code_for(bad) == 2);
  bad = generic_n3();
  bad["time_grid"] = json::array({0.0, 1.0, 0.5});
  CHECK(code_for(bad) == 2);
  bad = generic_n3();
  bad["n"] = 11;
  CHECK(code_for(bad) == 2);
  bad = generic_n3();
  bad["colour"] = "blue";
  CHECK(code_for(bad) == 2);
  bad = generic_n3();
  bad["two_block_only"] = true;
  CHECK(code_for(bad) == 2);
  bad = generic_n3();
  bad["initial_measure"] = "gaussian";
  CHECK(code_for(bad) == 2);
  CHECK(invoke({"solve", "--config", (tmp.path / "missing.json").string()}).code == 2);
  CHECK(invoke({"solve"}).code == 2);
  std::ofstream(tmp.path / "broken.json") << "{ n: ";
  CHECK(invoke({"solve", "--config", (tmp.path / "broken.json").string()}).code == 2);
  CHECK(invoke({"integrate", "--config", write_scenario(tmp.path, generic_n3()).string(), "--step", "-1"}).code == 2);

  const auto s = parse_scenario({{"n", 4}, {"two_block_only", true}, {"rates", {{"1,2|3,4", 0.5}}}});
  CHECK(s.rates.rate(Partition::parse("1,2|3,4")) == 0.5);
  CHECK(s.grid.front() == 0.0);
  CHECK(s.alphabet_sizes == std::vector<int>{2, 2, 2, 2});
  CHECK(s.monte_carlo_tv_gate() == doctest::Approx(5.0 * std::sqrt(15.0)));
}

TEST_CASE("solve writes a trajectory that re-parses exactly") {
  TempDir tmp;
  const auto cfg = write_scenario(tmp.path, generic_n3());
  REQUIRE(invoke({"solve", "--config", cfg.string(), "--out", tmp.path.string()}).code == 0);
  const auto s = load_scenario(cfg);
  const auto sol = build_closed_form(s.rates);
  std::ifstream in(tmp.path / "solve_trajectory.csv");
  const auto table = csv::read(in);
  REQUIRE(table.rows.size() == s.grid.size());
  const auto& lat = s.rates.lattice();
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    CHECK(csv::parse_double(table.rows[k][table.column("t")]) == s.grid[k]);
    const auto a = sol.evaluate(s.grid[k]);
    for (Index i = 0; i < lat.size(); ++i)
      CHECK(csv::parse_double(table.rows[k][table.column(lat.at(i).to_string())]) == a[i]);
  }
  const auto doc = read_json(tmp.path / "solution.json");
  CHECK(doc["degeneracy"]["generic"] == true);
  CHECK(doc["psi"]["1|2|3"] == 0.0);
  CHECK(doc["theta"].size() > 0);

  REQUIRE(invoke({"solve", "--config", cfg.string(), "--out", tmp.path.string(), "--format", "json"}).code == 0);
  const auto records = read_json(tmp.path / "solve_trajectory.json");
  CHECK(records.size() == s.grid.size());
  CHECK(records[1]["1,2,3"].get<double>() == sol.evaluate(s.grid[1])[0]);
}

TEST_CASE("solve on special rate systems") {
  TempDir tmp;
  json zero{{"n", 3}, {"time_grid", json::array({0, 1, 2})}};
  auto r = invoke({"solve", "--config", write_scenario(tmp.path, zero).string(), "--out", tmp.path.string()});
  REQUIRE(r.code == 0);
  {
    std::ifstream zin(tmp.path / "solve_trajectory.csv");
    const auto zt = csv::read(zin);
    for (const auto& row : zt.rows)
      for (std::size_t c = 1; c < row.size(); ++c) CHECK(csv::parse_double(row[c]) == (c == 1 ? 1.0 : 0.0));
  }
  json single{{"n", 3}, {"rates", {{"1|2|3", 1.0}}}, {"time_grid", json::array({0, 0.5, 2})}};
  r = invoke({"solve", "--config", write_scenario(tmp.path, single).string(), "--out", tmp.path.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(tmp.path / "solve_trajectory.csv");
  const auto table = csv::read(in);
  for (std::size_t k = 0; k < 3; ++k) {
    const double t = csv::parse_double(table.rows[k][0]);
    CHECK(csv::parse_double(table.rows[k][table.column("1,2,3")]) == doctest::Approx(std::exp(-t)).epsilon(1e-14));
  }
}

TEST_CASE("degenerate scenario exits with 3 and writes the report") {
  TempDir tmp;
  const auto cfg = write_scenario(tmp.path, degenerate_n4());
  const auto r = invoke({"solve", "--config", cfg.string(), "--out", tmp.path.string()});
  CHECK(r.code == 3);
  const auto rep = read_json(tmp.path / "degeneracy.json");
  CHECK(rep["bad_count"].get<int>() >= 1);
  bool bad = false;
  for (const auto& p : rep["pairs"]) bad |= p["kind"] == "bad";
  CHECK(bad);
  CHECK_FALSE(fs::exists(tmp.path / "solution.json"));

  const auto c = invoke({"compare", "--config", cfg.string(), "--out", tmp.path.string()});
  CHECK(c.code == 0);
  const auto cmp = read_json(tmp.path / "comparison.json");
  CHECK(cmp["fallback"] == "numerical");
  CHECK(cmp["pass"] == true);
  CHECK(cmp["deviations"].contains("monte_carlo_tv"));
}

TEST_CASE("integrate writes drift and mixture columns") {
  TempDir tmp;
  const auto cfg = write_scenario(tmp.path, generic_n3());
  REQUIRE(invoke({"integrate", "--config", cfg.string(), "--out", tmp.path.string()}).code == 0);
  std::ifstream in(tmp.path / "integrate_coefficients.csv");
  const auto table = csv::read(in);
  for (const auto& row : table.rows) CHECK(std::abs(csv::parse_double(row[table.column("drift")])) <= 1e-10);
  std::ifstream min(tmp.path / "integrate_measure.csv");
  const auto mt = csv::read(min);
  CHECK(mt.rows.size() == 7 * 8);
  for (const auto& row : mt.rows)
    CHECK(std::abs(csv::parse_double(row[mt.column("ode")]) - csv::parse_double(row[mt.column("mixture")])) <= 1e-6);
  const auto meta = read_json(tmp.path / "integrate.json");
  CHECK(meta["max_tv_ode_vs_mixture"].get<double>() <= 1e-6);

  json zero{{"n", 2}, {"initial_measure", "uniform"}, {"time_grid", json::array({0, 1})}};
  REQUIRE(invoke({"integrate", "--config", write_scenario(tmp.path, zero).string(), "--out", tmp.path.string()}).code == 0);
  std::ifstream zin(tmp.path / "integrate_coefficients.csv");
  const auto zt = csv::read(zin);
  CHECK(csv::parse_double(zt.rows[1][zt.column("1,2")]) == 1.0);
}

TEST_CASE("simulate is byte-reproducible for a fixed seed") {
  TempDir tmp;
  auto doc = generic_n3();
  doc["monte_carlo"]["samples"] = 5000;
  const auto cfg = write_scenario(tmp.path, doc);
  const auto a = tmp.path / "a", b = tmp.path / "b", c = tmp.path / "c";
  REQUIRE(invoke({"simulate", "--config", cfg.string(), "--out", a.string()}).code == 0);
  REQUIRE(invoke({"simulate", "--config", cfg.string(), "--out", b.string()}).code == 0);
  REQUIRE(invoke({"simulate", "--config", cfg.string(), "--out", c.string(), "--seed", "43"}).code == 0);
  CHECK(slurp(a / "estimate.csv") == slurp(b / "estimate.csv"));
  CHECK(slurp(a / "estimate.csv") != slurp(c / "estimate.csv"));
  const auto meta = read_json(a / "estimate.json");
  CHECK(meta["generator"] == std::string(kGeneratorName));
  CHECK(meta["seed"] == 42);

  REQUIRE(invoke({"simulate", "--config", cfg.string(), "--out", a.string(), "--samples", "1"}).code == 0);
  std::ifstream in(a / "estimate.csv");
  const auto t = csv::read(in);
  std::uint64_t total = 0;
  for (const auto& row : t.rows)
    if (csv::parse_double(row[0]) == 3.0) total += static_cast<std::uint64_t>(csv::parse_double(row[t.column("count")]));
  CHECK(total == 1);

  json none{{"n", 2}, {"rates", {{"1|2", 1.0}}}};
  CHECK(invoke({"simulate", "--config", write_scenario(tmp.path, none).string(), "--out", a.string()}).code == 2);
}

TEST_CASE("two-site estimate matches the exact survival probability") {
  TempDir tmp;
  json doc{{"n", 2}, {"rates", {{"1|2", 1.0}}}, {"time_grid", json::array({0, 1})},
           {"monte_carlo", {{"samples", 100000}, {"seed", 11}}}};
  REQUIRE(invoke({"simulate", "--config", write_scenario(tmp.path, doc).string(), "--out", tmp.path.string()}).code == 0);
  std::ifstream in(tmp.path / "estimate.csv");
  const auto t = csv::read(in);
  const double p = std::exp(-1.0);
  for (const auto& row : t.rows)
    if (csv::parse_double(row[0]) == 1.0 && row[1] == "1,2")
      CHECK(std::abs(csv::parse_double(row[3]) - p) <= 3.0 * std::sqrt(p * (1 - p) / 1e5));
}

TEST_CASE("compare") {
  TempDir tmp;
  auto r = invoke({"compare", "--config", write_scenario(tmp.path, generic_n3()).string(), "--out", tmp.path.string()});
  CHECK(r.code == 0);
  auto doc = read_json(tmp.path / "comparison.json");
  CHECK(doc["pass"] == true);
  CHECK(doc["linear_regime"] == true);
  CHECK(doc["fallback"].is_null());
  CHECK(doc["points"].size() == 7);

  json sc{{"n", 4},
          {"two_block_only", true},
          {"rates", {{"1|2,3,4", 0.5}, {"1,2|3,4", 0.8}, {"1,2,3|4", 0.3}}},
          {"time_grid", {{"start", 0}, {"end", 5}, {"points", 10}}}};
  r = invoke({"compare", "--config", write_scenario(tmp.path, sc).string(), "--out", tmp.path.string()});
  CHECK(r.code == 0);
  doc = read_json(tmp.path / "comparison.json");
  CHECK(doc["linear_regime"] == true);
  CHECK(doc["deviations"]["closed_form_vs_linear"].get<double>() <= 1e-10);

  json general = sc;
  general["two_block_only"] = false;
  general["rates"]["1,3|2,4"] = 0.4;
  general["rates"]["1|2|3|4"] = 0.2;
  r = invoke({"compare", "--config", write_scenario(tmp.path, general).string(), "--out", tmp.path.string()});
  CHECK(r.code == 0);
  CHECK(read_json(tmp.path / "comparison.json")["linear_regime"] == false);

  // A coarse step with a tiny tolerance fails the gate.
  auto strict = generic_n3();
  strict["tolerances"] = {{"integration", 1e-15}};
  strict.erase("monte_carlo");
  r = invoke({"compare", "--config", write_scenario(tmp.path, strict).string(), "--out", tmp.path.string(), "--step",
           "0.15"});
  CHECK(r.code == 4);
  CHECK(read_json(tmp.path / "comparison.json")["pass"] == false);
}

TEST_CASE("measure files") {
  TempDir tmp;
  testing::Rng rng(3);
  const auto nu = testing::random_measure(TypeSpace::uniform(2, 3), rng);
  {
    std::ofstream out(tmp.path / "nu.csv");
    write_measure_csv(out, nu);
  }
  json doc{{"n", 2}, {"alphabet_sizes", 3}, {"rates", {{"1|2", 1.0}}}, {"initial_measure", "file:nu.csv"}};
  const auto s = load_scenario(write_scenario(tmp.path, doc));
  CHECK(l1_distance(initial_measure(s), nu) == 0.0);
  doc["initial_measure"] = "file:nope.csv";
  const auto missing = load_scenario(write_scenario(tmp.path, doc));
  CHECK_THROWS_AS(initial_measure(missing), ConfigError);
  doc["initial_measure"] = "product:1,2,3";
  CHECK(norm(initial_measure(load_scenario(write_scenario(tmp.path, doc)))) == doctest::Approx(36.0));
  doc["initial_measure"] = "product:1,2";
  CHECK_THROWS_AS(initial_measure(load_scenario(write_scenario(tmp.path, doc))), ConfigError);
}

TEST_CASE("linear regime detection") {
  testing::Rng rng(1);
  CHECK(is_linear_regime(testing::single_crossover_rates(5, rng)));
  CHECK(is_linear_regime(testing::random_rates(GroundSet::first(3), rng)));
  CHECK_FALSE(is_linear_regime(testing::random_rates(GroundSet::first(4), rng)));
  const std::pair<Partition, double> gap[] = {{Partition::parse("1,3|2,4"), 1.0}};
  CHECK_FALSE(is_linear_regime(RateSystem(GroundSet::first(4), gap)));
}
