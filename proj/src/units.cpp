#include "ramanhom/units.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "ramanhom/errors.hpp"

namespace ramanhom {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double convert(std::string_view text, const std::map<std::string, double, std::less<>>& table,
               const char* kind) {
    const NumberWithUnit q = split_number(text);
    auto it = table.find(q.unit);
    if (it == table.end())
        throw config_error(std::string("expected a ") + kind + " with unit suffix, got '" +
                           std::string(text) + "'");
    return q.value * it->second;
}

}  // namespace

NumberWithUnit split_number(std::string_view text) {
    const std::string s(trim(text));
    if (s.empty()) throw config_error("empty numeric value");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw config_error("not a number: '" + s + "'");
    NumberWithUnit out;
    out.value = v;
    out.unit = std::string(trim(std::string_view(end)));
    return out;
}

double parse_time(std::string_view text) {
    static const std::map<std::string, double, std::less<>> table{
        {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
    return convert(text, table, "time");
}

double parse_rate(std::string_view text) {
    static const std::map<std::string, double, std::less<>> table{
        {"/s", 1.0}, {"1/s", 1.0}, {"/ms", 1e3}, {"/us", 1e6}, {"/ns", 1e9}};
    return convert(text, table, "rate");
}

double parse_angular_frequency(std::string_view text) {
    static const std::map<std::string, double, std::less<>> table{
        {"rad/s", 1.0},          {"krad/s", 1e3},        {"Mrad/s", 1e6},
        {"Grad/s", 1e9},         {"Hz", kTwoPi},         {"kHz", kTwoPi * 1e3},
        {"MHz", kTwoPi * 1e6},   {"GHz", kTwoPi * 1e9}};
    return convert(text, table, "frequency");
}

double parse_angle(std::string_view text) {
    static const std::map<std::string, double, std::less<>> table{
        {"rad", 1.0}, {"mrad", 1e-3}, {"deg", M_PI / 180.0}};
    return convert(text, table, "angle");
}

double parse_number(std::string_view text) {
    const NumberWithUnit q = split_number(text);
    if (!q.unit.empty())
        throw config_error("dimensionless value must not carry a unit, got '" + std::string(text) +
                           "'");
    return q.value;
}

}  // namespace ramanhom
