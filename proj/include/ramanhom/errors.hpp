#pragma once

#include <stdexcept>
#include <string>

namespace ramanhom {

// Numerical / model failures. The CLI maps these to exit code 3.
class sim_error : public std::runtime_error {
  public:
    explicit sim_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad scenario files or parameter values. The CLI maps these to exit code 2.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class invalid_scheme_error : public sim_error {
  public:
    using sim_error::sim_error;
};

class fit_error : public sim_error {
  public:
    using sim_error::sim_error;
};

class calibration_error : public sim_error {
  public:
    using sim_error::sim_error;
};

class propagation_error : public sim_error {
  public:
    using sim_error::sim_error;
};

// Requested quantity has no defined value (e.g. a ratio with zero denominator).
class undefined_value_error : public sim_error {
  public:
    using sim_error::sim_error;
};

}  // namespace ramanhom
