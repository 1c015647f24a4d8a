#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "recomb/coefficients.hpp"
#include "recomb/measure.hpp"

namespace recomb::cli {

/// Invalid scenario file or command-line values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MonteCarloSpec {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 1;
};

struct Tolerances {
  double integration = 1e-6;
  std::optional<double> monte_carlo_tv;  // unset: max(0.01, 5 sqrt(B(n)/N))
  double degeneracy = 1e-9;
  double linear = 1e-10;
};

struct Scenario {
  int n;
  std::vector<int> alphabet_sizes;
  std::vector<std::pair<Partition, double>> rate_entries;
  RateSystem rates;
  bool two_block_only = false;
  std::optional<std::string> initial_measure;  // uniform | product:... | file:...
  std::vector<double> grid;
  std::optional<double> step;
  std::optional<MonteCarloSpec> monte_carlo;
  Tolerances tolerances;
  std::filesystem::path base_dir;  // relative file: paths resolve here

  GroundSet ground() const { return rates.ground(); }
  double step_or_default() const;
  double monte_carlo_tv_gate() const;
};

Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// The initial measure named by the scenario. Throws ConfigError when absent.
Measure initial_measure(const Scenario& s);

nlohmann::json to_json(const Scenario& s);

}  // namespace recomb::cli
