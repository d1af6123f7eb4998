#pragma once

#include <string>

#include "grid/model.hpp"

namespace avc::grid {

/// Parses the line-oriented case format (sections [meta], [bus], [branch],
/// [gen], [load], [ltc]; `#` comments). Validates the result.
GridCase parse_case(const std::string& text);

/// Inverse of parse_case: parse_case(serialize_case(c)) is structurally
/// equal to c.
std::string serialize_case(const GridCase& c);

GridCase load_case_file(const std::string& path);
void save_case_file(const GridCase& c, const std::string& path);

}  // namespace avc::grid
