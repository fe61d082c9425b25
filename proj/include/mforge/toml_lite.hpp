#pragma once

#include <string>

#include <json.hpp>

namespace mforge::toml_lite {

/// Parses the TOML subset used by experiment configs into JSON: [table] and
/// [[array-of-tables]] headers with dotted keys, and `key = value` pairs
/// where a value is a string, number, boolean, or flat array of those.
nlohmann::json parse(const std::string& text);

}  // namespace mforge::toml_lite
