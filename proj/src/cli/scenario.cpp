#include "recomb/cli/scenario.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "recomb/csv.hpp"
#include "recomb/dynamics.hpp"
#include "recomb/errors.hpp"
#include "recomb/lattice.hpp"

namespace recomb::cli {

using nlohmann::json;

namespace {

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double as_number(const json& v, std::string_view what) {
  if (!v.is_number()) throw ConfigError(fmt::format("{} must be a number", what));
  return v.get<double>();
}

std::uint64_t as_count(const json& v, std::string_view what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError(fmt::format("{} must be a nonnegative integer", what));
  return v.get<std::uint64_t>();
}

std::vector<double> parse_grid(const json& g) {
  std::vector<double> grid;
  if (g.is_array()) {
    for (const auto& v : g) grid.push_back(as_number(v, "time_grid entry"));
  } else if (g.is_object()) {
    const double start = find(g, "start") ? as_number(g["start"], "time_grid.start") : 0.0;
    if (!find(g, "end")) throw ConfigError("time_grid.end is required");
    const double end = as_number(g["end"], "time_grid.end");
    const auto points = find(g, "points") ? as_count(g["points"], "time_grid.points") : 11;
    if (points < 1) throw ConfigError("time_grid.points must be at least 1");
    if (points > 1 && !(end > start)) throw ConfigError("time_grid.end must exceed time_grid.start");
    grid = linspace(start, end, points);
  } else {
    throw ConfigError("time_grid must be an array or an object {start, end, points}");
  }
  if (grid.empty()) throw ConfigError("time_grid is empty");
  if (grid.front() != 0.0) throw ConfigError("time_grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]) || !std::isfinite(grid[i]))
      throw ConfigError("time_grid must be finite and strictly increasing");
  return grid;
}

std::vector<std::vector<double>> parse_factors(std::string_view text, const std::vector<int>& sizes) {
  std::vector<std::vector<double>> factors;
  std::size_t start = 0;
  while (true) {
    auto semi = text.find(';', start);
    auto piece = text.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
    std::vector<double> f;
    std::size_t s = 0;
    while (true) {
      auto comma = piece.find(',', s);
      auto tok = piece.substr(s, comma == std::string_view::npos ? std::string_view::npos : comma - s);
      try {
        f.push_back(csv::parse_double(tok));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("bad weight '{}' in product measure", tok));
      }
      if (!(f.back() >= 0.0) || !std::isfinite(f.back()))
        throw ConfigError("product measure weights must be finite and nonnegative");
      if (comma == std::string_view::npos) break;
      s = comma + 1;
    }
    factors.push_back(std::move(f));
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  // One factor stands for every site.
  if (factors.size() == 1 && sizes.size() > 1) factors.resize(sizes.size(), factors.front());
  if (factors.size() != sizes.size())
    throw ConfigError(fmt::format("product measure has {} factors for {} sites", factors.size(), sizes.size()));
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (factors[i].size() != static_cast<std::size_t>(sizes[i]))
      throw ConfigError(fmt::format("product factor for site {} has {} weights, alphabet has {}", i + 1,
                                    factors[i].size(), sizes[i]));
  return factors;
}

Scenario parse(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  static const char* const known[] = {"n", "alphabet_sizes", "rates", "two_block_only", "initial_measure",
                                      "time_grid", "step", "monte_carlo", "tolerances", "description"};
  for (const auto& [key, _] : doc.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw ConfigError(fmt::format("unknown scenario key '{}'", key));

  if (!find(doc, "n")) throw ConfigError("scenario needs 'n'");
  const auto n64 = as_count(doc["n"], "n");
  if (n64 < 1 || n64 > static_cast<std::uint64_t>(kMaxLatticeSites))
    throw ConfigError(fmt::format("n = {} out of range 1..{}", n64, kMaxLatticeSites));
  const int n = static_cast<int>(n64);
  const GroundSet ground = GroundSet::first(n);

  std::vector<int> sizes(static_cast<std::size_t>(n), 2);
  if (const json* a = find(doc, "alphabet_sizes")) {
    if (a->is_array()) {
      if (a->size() != sizes.size()) throw ConfigError("alphabet_sizes needs one entry per site");
      for (std::size_t i = 0; i < sizes.size(); ++i) sizes[i] = static_cast<int>(as_count((*a)[i], "alphabet size"));
    } else {
      std::fill(sizes.begin(), sizes.end(), static_cast<int>(as_count(*a, "alphabet_sizes")));
    }
    for (int k : sizes)
      if (k < 1) throw ConfigError("alphabet sizes must be at least 1");
  }

  const bool two_block = find(doc, "two_block_only") && doc["two_block_only"].get<bool>();
  std::vector<std::pair<Partition, double>> entries;
  if (const json* r = find(doc, "rates")) {
    if (!r->is_object()) throw ConfigError("rates must be an object mapping partitions to rates");
    for (const auto& [key, value] : r->items()) {
      Partition p = Partition::parse(key, ground);
      const double rate = as_number(value, fmt::format("rate for '{}'", key));
      if (!std::isfinite(rate) || rate < 0.0) throw ConfigError(fmt::format("rate for '{}' must be >= 0", key));
      if (two_block && p.block_count() != 2)
        throw ConfigError(fmt::format("two_block_only: '{}' does not have two blocks", key));
      entries.emplace_back(std::move(p), rate);
    }
  }
  RateSystem rates(ground, entries);

  std::optional<std::string> measure;
  if (const json* m = find(doc, "initial_measure")) {
    if (!m->is_string()) throw ConfigError("initial_measure must be a string");
    measure = m->get<std::string>();
    if (*measure != "uniform" && !measure->starts_with("product:") && !measure->starts_with("file:"))
      throw ConfigError(fmt::format("initial_measure '{}' is not uniform, product:<weights> or file:<path>", *measure));
  }

  const json* g = find(doc, "time_grid");
  std::vector<double> grid = g ? parse_grid(*g) : linspace(0.0, 1.0, 11);

  std::optional<double> step;
  if (const json* s = find(doc, "step")) {
    step = as_number(*s, "step");
    if (!(*step > 0.0) || !std::isfinite(*step)) throw ConfigError("step must be positive");
  }

  std::optional<MonteCarloSpec> mc;
  if (const json* m = find(doc, "monte_carlo")) {
    if (!m->is_object()) throw ConfigError("monte_carlo must be an object {samples, seed}");
    mc.emplace();
    if (const json* v = find(*m, "samples")) mc->samples = as_count(*v, "monte_carlo.samples");
    if (const json* v = find(*m, "seed")) mc->seed = as_count(*v, "monte_carlo.seed");
    if (mc->samples < 1) throw ConfigError("monte_carlo.samples must be at least 1");
  }

  Tolerances tol;
  if (const json* t = find(doc, "tolerances")) {
    if (!t->is_object()) throw ConfigError("tolerances must be an object");
    if (const json* v = find(*t, "integration")) tol.integration = as_number(*v, "tolerances.integration");
    if (const json* v = find(*t, "monte_carlo_tv")) tol.monte_carlo_tv = as_number(*v, "tolerances.monte_carlo_tv");
    if (const json* v = find(*t, "degeneracy")) tol.degeneracy = as_number(*v, "tolerances.degeneracy");
    if (const json* v = find(*t, "linear")) tol.linear = as_number(*v, "tolerances.linear");
  }

  return Scenario{n,    std::move(sizes), std::move(entries), std::move(rates), two_block, std::move(measure),
                  std::move(grid), step, mc, tol, base_dir};
}

}  // namespace

double Scenario::step_or_default() const { return step ? *step : default_step(rates); }

double Scenario::monte_carlo_tv_gate() const {
  if (tolerances.monte_carlo_tv) return *tolerances.monte_carlo_tv;
  const double samples = monte_carlo ? static_cast<double>(monte_carlo->samples) : 1.0;
  const double bell = static_cast<double>(Lattice::of(ground())->size());
  return std::max(0.01, 5.0 * std::sqrt(bell / samples));
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  try {
    return parse(doc, base_dir);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("scenario: {}", e.what()));
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open scenario '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_scenario(doc, path.parent_path());
}

Measure initial_measure(const Scenario& s) {
  if (!s.initial_measure) throw ConfigError("scenario has no initial_measure");
  const std::string& spec = *s.initial_measure;
  try {
    TypeSpace space(s.ground(), s.alphabet_sizes);
    if (spec == "uniform") return Measure::uniform(std::move(space));
    if (spec.starts_with("product:"))
      return Measure::product(std::move(space), parse_factors(std::string_view(spec).substr(8), s.alphabet_sizes));
    std::filesystem::path p = spec.substr(5);
    if (p.is_relative()) p = s.base_dir / p;
    std::ifstream in(p);
    if (!in) throw ConfigError(fmt::format("cannot open measure file '{}'", p.string()));
    return read_measure_csv(in, space);
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("initial_measure: {}", e.what()));
  }
}

json to_json(const Scenario& s) {
  json rates = json::object();
  for (const auto& [p, r] : s.rate_entries) rates[p.to_string()] = r;
  json doc{{"n", s.n},
           {"alphabet_sizes", s.alphabet_sizes},
           {"rates", rates},
           {"two_block_only", s.two_block_only},
           {"time_grid", s.grid},
           {"step", s.step_or_default()},
           {"tolerances",
            {{"integration", s.tolerances.integration},
             {"monte_carlo_tv", s.monte_carlo_tv_gate()},
             {"degeneracy", s.tolerances.degeneracy},
             {"linear", s.tolerances.linear}}}};
  if (s.initial_measure) doc["initial_measure"] = *s.initial_measure;
  if (s.monte_carlo) doc["monte_carlo"] = {{"samples", s.monte_carlo->samples}, {"seed", s.monte_carlo->seed}};
  return doc;
}

}  // namespace recomb::cli
