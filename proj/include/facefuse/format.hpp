#pragma once

#include <string>
#include <string_view>

namespace facefuse {

// Locale-independent number formatting for every text artifact.

/// Shortest decimal that parses back to the same double.
std::string format_shortest(double value);
/// Fixed notation with `digits` decimals.
std::string format_fixed(double value, int digits);
/// Strict parse of a whole token; IngestionError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);

}  // namespace facefuse
