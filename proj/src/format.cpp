#include "facefuse/format.hpp"

#include <charconv>
#include <system_error>

#include "facefuse/error.hpp"

namespace facefuse {

std::string format_shortest(double value) {
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, end);
}

std::string format_fixed(double value, int digits) {
    char buffer[128];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::fixed, digits);
    return std::string(buffer, end);
}

double parse_double(std::string_view text, std::string_view what) {
    double value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw IngestionError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace facefuse
