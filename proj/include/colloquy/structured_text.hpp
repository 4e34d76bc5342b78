#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace colloquy {

/// Parses a YAML (or JSON, which is a subset) document into a json value.
/// Plain scalars become numbers/booleans/null when they look like one;
/// quoted scalars always stay strings. Throws std::runtime_error on syntax
/// errors.
nlohmann::json parse_structured_text(std::string_view text);

std::string read_text_file(const std::string& path);

nlohmann::json read_structured_file(const std::string& path);

}  // namespace colloquy
