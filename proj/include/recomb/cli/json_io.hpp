#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "recomb/closed_form.hpp"
#include "recomb/partitioning.hpp"

namespace recomb::cli {

/// Partition key -> value.
nlohmann::json to_json(const CoefficientVector& v);
CoefficientVector coefficients_from_json(const nlohmann::json& obj, GroundSet ground);

nlohmann::json to_json(const DegeneracyReport& report);

/// ψ on the full ground set, the report and, when the lattice is small
/// enough, the nonzero θ entries.
nlohmann::json to_json(const ClosedFormSolution& sol);

inline constexpr std::size_t kMaxThetaPairs = 250000;

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace recomb::cli
