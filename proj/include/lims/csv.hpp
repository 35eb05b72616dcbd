#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lims::csv {

/// Shortest decimal text that parses back to the same double.
std::string num(double v);

double parse_double(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace lims::csv
