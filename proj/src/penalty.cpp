#include "spf/penalty.hpp"

#include "spf/error.hpp"

#include <cmath>
#include <string>

namespace spf {

void validate(const PenaltyParams& params) {
    if (!(params.mu > 0.0)) throw Error(ErrorCode::InvalidThreshold, "mu must be positive");
    if (!(params.nu > 0.0)) throw Error(ErrorCode::InvalidThreshold, "nu must be positive");
}

double transition(double z, double tau, Blend blend) {
    if (!(tau > 0.0)) throw Error(ErrorCode::InvalidThreshold, "transition width must be positive, got " + std::to_string(tau));
    if (z <= 0.0) return 1.0;
    if (z >= tau) return 0.0;
    const double u = z / tau;
    switch (blend) {
        case Blend::Cubic:
            return 1.0 - u * u * (3.0 - 2.0 * u);
        case Blend::Quintic:
            return 1.0 - u * u * u * (10.0 - u * (15.0 - 6.0 * u));
    }
    return 0.0;
}

double blend_weight(double d, double s, const PenaltyParams& params) {
    const double a = transition(d, params.mu, params.blend);
    if (a == 0.0) return 0.0;
    return a * transition(s, params.nu, params.blend);
}

double penalty_value(double d, double s, const PenaltyParams& params) {
    const double w = blend_weight(d, s, params);
    if (w >= 1.0) throw Error(ErrorCode::PenaltyUnbounded, "penalty diverges at saturated blend weight");
    return w / (1.0 - w);
}

}  // namespace spf
