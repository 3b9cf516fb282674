#pragma once

#include <filesystem>
#include <stdexcept>
#include <string_view>

#include <json.hpp>

namespace adlraw::harness {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads the TOML subset used by experiment files: [section] and
/// [dotted.section] headers, key = value pairs, strings, integers, floats,
/// booleans, and arrays of those (arrays may span lines). Comments start
/// with '#'. Throws ConfigError with the line number on anything else.
nlohmann::json parse_toml(std::string_view text);
nlohmann::json load_toml(const std::filesystem::path& path);

} // namespace adlraw::harness
