#pragma once

#include <string>
#include <string_view>

namespace ramanhom {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Strict unit-suffixed parsing for scenario values. Every dimensioned
// quantity must carry a suffix; dimensionless ones must not.
//   time:     s, ms, us, ns, ps
//   rate:     /s, /ms, /us, /ns          (exponential decay constants)
//   angular:  rad/s, krad/s, Mrad/s, Grad/s, or Hz, kHz, MHz, GHz (cycles,
//             multiplied by 2 pi)
//   angle:    rad, deg
double parse_time(std::string_view text);
double parse_rate(std::string_view text);
double parse_angular_frequency(std::string_view text);
double parse_angle(std::string_view text);
double parse_number(std::string_view text);  // rejects any suffix

// Splits "value [unit]" and converts; used by the sweep-row tokenizer.
struct NumberWithUnit {
    double value = 0.0;
    std::string unit;  // empty when absent
};
NumberWithUnit split_number(std::string_view text);

}  // namespace ramanhom
