#pragma once

namespace spf {

/// Shape of the smooth step between 1 (z <= 0) and 0 (z >= tau).
enum class Blend {
    Cubic,    // C1: gamma'(0) = gamma'(tau) = 0
    Quintic,  // C2: additionally gamma'' vanishes at both ends
};

struct PenaltyParams {
    double mu = 0.6;  // distance activation threshold
    double nu = 1.0;  // alignment activation threshold
    Blend blend = Blend::Cubic;
};

void validate(const PenaltyParams& params);

/// Smooth step: 1 for z <= 0, 0 for z >= tau, polynomial blend in between.
double transition(double z, double tau, Blend blend = Blend::Cubic);

/// w = transition(d, mu) * transition(s, nu), the bounded ratio psi / (1 + psi).
double blend_weight(double d, double s, const PenaltyParams& params);

/// psi = w / (1 - w). Diagnostics only; throws PenaltyUnbounded when w = 1.
double penalty_value(double d, double s, const PenaltyParams& params);

}  // namespace spf
