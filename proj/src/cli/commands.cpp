#include "recomb/cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "recomb/cli/json_io.hpp"
#include "recomb/closed_form.hpp"
#include "recomb/csv.hpp"
#include "recomb/dynamics.hpp"
#include "recomb/errors.hpp"
#include "recomb/partitioning.hpp"

namespace recomb::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Rows of JSON scalars, written either as CSV or as an array of records.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<json>> rows;
};

std::string cell_text(const json& v) {
  if (v.is_number_float()) return csv::format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

fs::path write_table(const fs::path& dir, const std::string& stem, const Table& t, Format format) {
  if (format == Format::json) {
    json records = json::array();
    for (const auto& row : t.rows) {
      json rec = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) rec[t.header[i]] = row[i];
      records.push_back(std::move(rec));
    }
    const fs::path p = dir / (stem + ".json");
    write_json(p, records);
    return p;
  }
  const fs::path p = dir / (stem + ".csv");
  std::ofstream out(p);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
  csv::write_row(out, t.header);
  std::vector<std::string> fields;
  for (const auto& row : t.rows) {
    fields.clear();
    for (const auto& v : row) fields.push_back(cell_text(v));
    csv::write_row(out, fields);
  }
  return p;
}

std::vector<std::string> partition_keys(const Lattice& lat) {
  std::vector<std::string> keys;
  keys.reserve(lat.size());
  for (const auto& p : lat.elements()) keys.push_back(p.to_string());
  return keys;
}

// Wide layout: one row per time, one column per partition.
Table coefficient_table(std::span<const double> times, std::span<const CoefficientVector> states,
                        std::span<const double> drift = {}) {
  Table t;
  t.header.push_back("t");
  if (!drift.empty()) t.header.push_back("drift");
  const auto keys = partition_keys(states.front().lattice());
  t.header.insert(t.header.end(), keys.begin(), keys.end());
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<json> row{times[k]};
    if (!drift.empty()) row.emplace_back(drift[k]);
    for (double v : states[k].values()) row.emplace_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
}

std::vector<CoefficientVector> closed_form_states(const ClosedFormSolution& sol, std::span<const double> grid) {
  std::vector<CoefficientVector> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(sol.evaluate(t));
  return out;
}

}  // namespace

bool is_linear_regime(const RateSystem& rates) {
  const auto& lat = rates.lattice();
  if (lat.ground().size() <= 3) return true;
  for (Index i = 1; i < lat.size(); ++i) {
    if (rates.rate(i) <= 0.0) continue;
    const Partition& p = lat.at(i);
    if (p.block_count() != 2) return false;
    // {1..k}|{k+1..n}: the first block is a run of the lowest sites.
    const SiteMask first = p.block(0);
    if ((first & (first + (first & (~first + 1)))) != 0) return false;
  }
  return true;
}

void apply_overrides(Scenario& s, const Options& opt) {
  if (opt.step) {
    if (!(*opt.step > 0.0) || !std::isfinite(*opt.step)) throw ConfigError("--step must be positive");
    s.step = *opt.step;
  }
  if (opt.seed || opt.samples) {
    if (!s.monte_carlo) s.monte_carlo.emplace();
    if (opt.seed) s.monte_carlo->seed = *opt.seed;
    if (opt.samples) {
      if (*opt.samples < 1) throw ConfigError("--samples must be at least 1");
      s.monte_carlo->samples = *opt.samples;
    }
  }
}

ExitCode cmd_lattice(int n, bool enumerate, bool mobius, Format format, std::ostream& out) {
  if (n < 1 || n > kMaxLatticeSites) throw ConfigError(fmt::format("-n must be in 1..{}, got {}", kMaxLatticeSites, n));
  auto lat = Lattice::of(GroundSet::first(n));
  const auto two_block = count_two_block(n);
  if (format == Format::json) {
    json doc{{"n", n}, {"bell", lat->size()}, {"two_block", two_block}};
    if (enumerate) doc["partitions"] = partition_keys(*lat);
    if (mobius) {
      json row = json::object();
      for (Index j = 0; j < lat->size(); ++j) row[lat->at(j).to_string()] = lat->mobius(lat->bottom(), j);
      doc["mobius_from_bottom"] = std::move(row);
    }
    out << doc.dump(2) << '\n';
    return ExitCode::ok;
  }
  out << fmt::format("n = {}\nB(n) = {}\ntwo-block partitions = {}\n", n, lat->size(), two_block);
  if (enumerate)
    for (Index i = 0; i < lat->size(); ++i) out << fmt::format("{:>8}  {}\n", i, lat->at(i).to_string());
  if (mobius) {
    out << "mobius(bottom, .)\n";
    for (Index j = 0; j < lat->size(); ++j)
      out << fmt::format("{:>12}  {}\n", lat->mobius(lat->bottom(), j), lat->at(j).to_string());
  }
  return ExitCode::ok;
}

ExitCode cmd_solve(const Scenario& s, const fs::path& out_dir, Format format, std::ostream& out) {
  prepare_dir(out_dir);
  const DegeneracyReport report = detect_degeneracy(s.rates, s.tolerances.degeneracy);
  write_json(out_dir / "degeneracy.json", to_json(report));
  if (report.has_bad()) {
    spdlog::error("rates are degenerate: {} bad coincidence(s) psi(B) = psi(top); see degeneracy.json",
                  report.bad_count);
    out << fmt::format("degenerate: {} bad pair(s), {} in total\n", report.bad_count, report.pair_count);
    return ExitCode::degenerate;
  }
  const ClosedFormSolution sol = build_closed_form(s.rates, s.tolerances.degeneracy);
  json doc = to_json(sol);
  doc["scenario"] = to_json(s);
  write_json(out_dir / "solution.json", doc);
  const auto states = closed_form_states(sol, s.grid);
  const auto path = write_table(out_dir, "solve_trajectory", coefficient_table(s.grid, states), format);
  spdlog::info("closed form on {} partitions, {} time points -> {}", states.front().size(), s.grid.size(),
               path.string());
  out << fmt::format("solved: {} partitions, {} time points, {} harmless coincidence(s)\n", states.front().size(),
                     s.grid.size(), report.pair_count);
  return ExitCode::ok;
}

ExitCode cmd_integrate(const Scenario& s, const fs::path& out_dir, Format format, std::ostream& out) {
  prepare_dir(out_dir);
  const double step = s.step_or_default();
  const auto traj = integrate_coefficients(s.rates, CoefficientVector::top(s.ground()), s.grid, step);
  write_table(out_dir, "integrate_coefficients", coefficient_table(traj.times, traj.states, traj.drift), format);
  double max_drift = 0.0;
  for (double d : traj.drift) max_drift = std::max(max_drift, std::abs(d));
  json meta{{"step", step}, {"max_drift", max_drift}, {"scenario", to_json(s)}};

  if (s.initial_measure) {
    const Measure omega0 = initial_measure(s);
    const auto mtraj = integrate_measure(s.rates, omega0, s.grid, step);
    const auto& space = omega0.space();
    Table t;
    t.header.push_back("t");
    for (int site : s.ground().sites()) t.header.push_back(fmt::format("x{}", site));
    t.header.insert(t.header.end(), {"ode", "mixture"});
    double max_dev = 0.0;
    for (std::size_t k = 0; k < mtraj.times.size(); ++k) {
      const Measure mix = mixture(traj.states[k], omega0);
      max_dev = std::max(max_dev, 0.5 * l1_distance(mix, mtraj.states[k]));
      for (std::size_t x = 0; x < space.state_count(); ++x) {
        std::vector<json> row{mtraj.times[k]};
        for (int d : space.decode(x)) row.emplace_back(d);
        row.emplace_back(mtraj.states[k][x]);
        row.emplace_back(mix[x]);
        t.rows.push_back(std::move(row));
      }
    }
    write_table(out_dir, "integrate_measure", t, format);
    double mdrift = 0.0;
    for (double d : mtraj.drift) mdrift = std::max(mdrift, std::abs(d));
    meta["measure_max_drift"] = mdrift;
    meta["max_tv_ode_vs_mixture"] = max_dev;
  }
  write_json(out_dir / "integrate.json", meta);
  out << fmt::format("integrated: step {}, max drift {:.3g}\n", step, max_drift);
  return ExitCode::ok;
}

ExitCode cmd_simulate(const Scenario& s, const fs::path& out_dir, Format format, std::ostream& out) {
  if (!s.monte_carlo) throw ConfigError("simulate needs a monte_carlo block or --samples/--seed");
  prepare_dir(out_dir);
  const auto& mc = *s.monte_carlo;
  const auto& lat = s.rates.lattice();
  const auto keys = partition_keys(lat);
  Table t{{"t", "partition", "count", "frequency"}, {}};
  for (double time : s.grid) {
    const auto est = estimate_distribution(s.rates, time, mc.samples, mc.seed);
    const auto freq = est.frequencies();
    for (Index i = 0; i < lat.size(); ++i)
      t.rows.push_back({time, keys[i], est.counts()[i], freq[i]});
  }
  write_table(out_dir, "estimate", t, format);
  write_json(out_dir / "estimate.json", {{"seed", mc.seed},
                                         {"samples", mc.samples},
                                         {"generator", std::string(kGeneratorName)},
                                         {"times", s.grid},
                                         {"scenario", to_json(s)}});
  out << fmt::format("simulated: {} paths per time point, seed {}\n", mc.samples, mc.seed);
  return ExitCode::ok;
}

ExitCode cmd_compare(const Scenario& s, const fs::path& out_dir, Format, std::ostream& out) {
  prepare_dir(out_dir);
  const auto& lat = s.rates.lattice();
  const auto keys = partition_keys(lat);

  std::optional<ClosedFormSolution> sol;
  json degeneracy;
  try {
    sol.emplace(build_closed_form(s.rates, s.tolerances.degeneracy));
    degeneracy = to_json(sol->report());
  } catch (const DegeneracyError& e) {
    spdlog::warn("closed form unavailable ({} bad pair(s)); comparing integration and simulation only",
                 e.report().bad_count);
    degeneracy = to_json(e.report());
  }
  const double step = s.step_or_default();
  const auto traj = integrate_coefficients(s.rates, CoefficientVector::top(s.ground()), s.grid, step);

  const bool linear = is_linear_regime(s.rates);
  double dev_integration = 0.0, dev_linear = 0.0, tv_mc = 0.0;
  json points = json::array();
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const double t = s.grid[k];
    const auto& integrated = traj.states[k];
    std::optional<CoefficientVector> closed, lin, freq;
    if (sol) {
      closed = sol->evaluate(t);
      dev_integration = std::max(dev_integration, max_abs_difference(*closed, integrated));
      if (linear) {
        lin = linear_solution(s.rates, s.ground(), t);
        dev_linear = std::max(dev_linear, max_abs_difference(*closed, *lin));
      }
    }
    if (s.monte_carlo) {
      freq = estimate_distribution(s.rates, t, s.monte_carlo->samples, s.monte_carlo->seed).frequencies();
      tv_mc = std::max(tv_mc, tv_distance(*freq, closed ? *closed : integrated));
    }
    json parts = json::object();
    for (Index i = 0; i < lat.size(); ++i) {
      json e{{"integrated", integrated[i]}};
      if (closed) e["closed_form"] = (*closed)[i];
      if (freq) e["monte_carlo"] = (*freq)[i];
      parts[keys[i]] = std::move(e);
    }
    points.push_back({{"t", t}, {"partitions", std::move(parts)}});
  }

  const double mc_gate = s.monte_carlo_tv_gate();
  bool pass = true;
  json deviations = json::object(), gates = json::object();
  if (sol) {
    deviations["closed_form_vs_integrated"] = dev_integration;
    gates["closed_form_vs_integrated"] = s.tolerances.integration;
    pass = pass && dev_integration <= s.tolerances.integration;
    if (linear) {
      deviations["closed_form_vs_linear"] = dev_linear;
      gates["closed_form_vs_linear"] = s.tolerances.linear;
      pass = pass && dev_linear <= s.tolerances.linear;
    }
  }
  if (s.monte_carlo) {
    deviations["monte_carlo_tv"] = tv_mc;
    gates["monte_carlo_tv"] = mc_gate;
    pass = pass && tv_mc <= mc_gate;
  }

  json doc{{"pass", pass},
           {"fallback", sol ? json(nullptr) : json("numerical")},
           {"linear_regime", linear},
           {"step", step},
           {"deviations", deviations},
           {"tolerances", gates},
           {"degeneracy", degeneracy},
           {"points", std::move(points)},
           {"scenario", to_json(s)}};
  if (s.monte_carlo)
    doc["monte_carlo"] = {{"seed", s.monte_carlo->seed},
                          {"samples", s.monte_carlo->samples},
                          {"generator", std::string(kGeneratorName)},
                          {"reference", sol ? "closed_form" : "integrated"}};
  write_json(out_dir / "comparison.json", doc);

  out << fmt::format("compare: {}{}\n", pass ? "PASS" : "FAIL", sol ? "" : " (fallback: numerical)");
  for (const auto& [name, v] : deviations.items())
    out << fmt::format("  {:<28} {:.3e}  (tolerance {:.3e})\n", name, v.get<double>(), gates[name].get<double>());
  return pass ? ExitCode::ok : ExitCode::tolerance_failure;
}

namespace {

void setup_logging(std::ostream& err) {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("recomb")); });
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("RECOMB_LOG")) {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to off
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      err << fmt::format("RECOMB_LOG: unknown level '{}', using warn\n", env);
      level = spdlog::level::warn;
    }
  }
  spdlog::set_level(level);
}

}  // namespace

int run(const Options& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.command == "lattice") return static_cast<int>(cmd_lattice(opt.n, opt.enumerate, opt.mobius, opt.format, out));
    if (!opt.config) throw ConfigError(fmt::format("{} needs --config <scenario.json>", opt.command));
    Scenario s = load_scenario(*opt.config);
    apply_overrides(s, opt);
    spdlog::debug("scenario {}: n = {}, {} time points", opt.config->string(), s.n, s.grid.size());
    ExitCode code;
    if (opt.command == "solve") code = cmd_solve(s, opt.out, opt.format, out);
    else if (opt.command == "integrate") code = cmd_integrate(s, opt.out, opt.format, out);
    else if (opt.command == "simulate") code = cmd_simulate(s, opt.out, opt.format, out);
    else if (opt.command == "compare") code = cmd_compare(s, opt.out, opt.format, out);
    else throw ConfigError(fmt::format("unknown command '{}'", opt.command));
    return static_cast<int>(code);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::config_error);
  } catch (const DegeneracyError& e) {
    err << "degenerate: " << e.what() << '\n';
    return static_cast<int>(ExitCode::degenerate);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::runtime_error);
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  setup_logging(err);
  CLI::App app{"Recombination equation: closed form, numerical integration and Monte Carlo"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options opt;
  std::string config, format = "csv";
  std::uint64_t seed = 0, samples = 0;
  double step = 0.0;
  auto* o_config = app.add_option("--config", config, "scenario JSON file");
  app.add_option("--out", opt.out, "output directory")->capture_default_str();
  auto* o_seed = app.add_option("--seed", seed, "Monte Carlo seed");
  auto* o_samples = app.add_option("--samples", samples, "Monte Carlo sample count");
  auto* o_step = app.add_option("--step", step, "RK4 step size");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  auto* lattice = app.add_subcommand("lattice", "partition lattice of {1..n}");
  lattice->add_option("-n", opt.n, "number of sites")->required();
  lattice->add_flag("--enumerate", opt.enumerate, "list every partition");
  lattice->add_flag("--mobius", opt.mobius, "print the Mobius row of the bottom element");
  app.add_subcommand("solve", "closed-form coefficients on the time grid");
  app.add_subcommand("integrate", "RK4 integration of coefficients and, if given, the measure");
  app.add_subcommand("simulate", "Monte Carlo estimate from the partitioning process");
  app.add_subcommand("compare", "cross-check closed form, integration and simulation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }
  opt.command = app.get_subcommands().front()->get_name();
  if (*o_config) opt.config = config;
  if (*o_seed) opt.seed = seed;
  if (*o_samples) opt.samples = samples;
  if (*o_step) opt.step = step;
  opt.format = format == "json" ? Format::json : Format::csv;
  return run(opt, out, err);
}

}  // namespace recomb::cli
