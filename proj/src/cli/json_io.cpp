#include "recomb/cli/json_io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "recomb/errors.hpp"

namespace recomb::cli {

using nlohmann::json;

json to_json(const CoefficientVector& v) {
  json out = json::object();
  const auto& lat = v.lattice();
  for (Index i = 0; i < lat.size(); ++i) out[lat.at(i).to_string()] = v[i];
  return out;
}

CoefficientVector coefficients_from_json(const json& obj, GroundSet ground) {
  auto lat = Lattice::of(ground);
  CoefficientVector v(lat);
  for (const auto& [key, value] : obj.items()) v[lat->index_of(Partition::parse(key, ground))] = value.get<double>();
  return v;
}

json to_json(const DegeneracyReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs)
    pairs.push_back({{"subset", p.subset.to_string()},
                     {"first", p.first.to_string()},
                     {"second", p.second.to_string()},
                     {"psi_first", p.psi_first},
                     {"psi_second", p.psi_second},
                     {"kind", p.kind == DegeneratePair::Kind::bad ? "bad" : "harmless"}});
  return {{"tolerance", report.tolerance},
          {"generic", report.generic()},
          {"pair_count", report.pair_count},
          {"bad_count", report.bad_count},
          {"listed", report.pairs.size()},
          {"pairs", std::move(pairs)}};
}

json to_json(const ClosedFormSolution& sol) {
  const GroundSet s = sol.ground();
  const auto& lat = sol.rates().lattice();
  json psi = json::object();
  const auto values = sol.psi(s);
  for (Index i = 0; i < lat.size(); ++i) psi[lat.at(i).to_string()] = values[i];
  json doc{{"ground", s.to_string()},
           {"rate_total", sol.rates().total()},
           {"psi", std::move(psi)},
           {"degeneracy", to_json(sol.report())}};
  if (lat.pair_count() <= kMaxThetaPairs) {
    const auto& theta = sol.theta(s);
    json entries = json::array();
    for (Index a = 0; a < lat.size(); ++a) {
      const auto up = lat.upper(a);
      const auto row = theta.row(a);
      for (std::size_t k = 0; k < up.size(); ++k)
        if (row[k] != 0.0) entries.push_back({lat.at(a).to_string(), lat.at(up[k]).to_string(), row[k]});
    }
    doc["theta"] = std::move(entries);
  } else {
    doc["theta"] = nullptr;
  }
  return doc;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
  return json::parse(in);
}

}  // namespace recomb::cli
