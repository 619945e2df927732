#include "ramanhom/atomic_model.hpp"

namespace ramanhom {

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::back393: return "back393";
        case Channel::raman854: return "raman854";
        case Channel::raman850: return "raman850";
    }
    return "?";
}

void LevelScheme::validate() const {
    if (gamma_back < 0 || gamma_854 < 0 || gamma_850 < 0)
        throw invalid_scheme_error("LevelScheme: decay rates must be nonnegative");
    if (gamma_854 + gamma_850 <= 0)
        throw invalid_scheme_error("LevelScheme: at least one Raman channel must be open");
}

double branching_ratio(const LevelScheme& scheme) {
    scheme.validate();
    return scheme.gamma_854 / (scheme.gamma_854 + scheme.gamma_850);
}

}  // namespace ramanhom
