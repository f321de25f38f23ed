#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "contopt/optimizer.hpp"

namespace contopt {

inline constexpr int kConfigVersion = 1;

// JSON <-> RunConfig. Missing keys take the RunConfig defaults, unknown keys
// are rejected; errors are ConfigError with the JSON pointer of the offending
// value, e.g. "/contact/rho: expected a number".
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& cfg);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

std::string_view to_string(Formulation f);
std::string_view to_string(ContactMode m);

}  // namespace contopt
