#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "recomb/cli/scenario.hpp"

namespace recomb::cli {

/// Process exit status. The numeric values are part of the interface.
enum class ExitCode : int { ok = 0, runtime_error = 1, config_error = 2, degenerate = 3, tolerance_failure = 4 };

enum class Format { csv, json };

struct Options {
  std::string command;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::optional<double> step;
  Format format = Format::csv;
  int n = 0;
  bool enumerate = false;
  bool mobius = false;
};

/// Command-line --seed/--samples/--step win over the scenario file.
void apply_overrides(Scenario& s, const Options& opt);

ExitCode cmd_lattice(int n, bool enumerate, bool mobius, Format format, std::ostream& out);
ExitCode cmd_solve(const Scenario& s, const std::filesystem::path& out_dir, Format format, std::ostream& out);
ExitCode cmd_integrate(const Scenario& s, const std::filesystem::path& out_dir, Format format, std::ostream& out);
ExitCode cmd_simulate(const Scenario& s, const std::filesystem::path& out_dir, Format format, std::ostream& out);
ExitCode cmd_compare(const Scenario& s, const std::filesystem::path& out_dir, Format format, std::ostream& out);

/// Dispatches a parsed command; all exceptions become exit codes.
int run(const Options& opt, std::ostream& out, std::ostream& err);
/// Full command line, as seen by main().
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// True when every positive rate sits on 1̲ or on a partition {1..k}|{k+1..n},
/// or when n <= 3; the closed form then equals the linear solution.
bool is_linear_regime(const RateSystem& rates);

}  // namespace recomb::cli
