#pragma once

#include "spf/types.hpp"

#include <cmath>
#include <vector>

namespace spf::test {

// J(u) = |u - nominal|^2 + sum_i psi_i (u . eta_i)^2 and its gradient.
struct PenaltyObjective {
    Vec nominal;
    std::vector<Vec> normals;
    std::vector<double> psi;

    double value(const Vec& u) const {
        double j = (u - nominal).squaredNorm();
        for (std::size_t i = 0; i < normals.size(); ++i) j += psi[i] * std::pow(u.dot(normals[i]), 2);
        return j;
    }

    Vec gradient(const Vec& u) const {
        Vec g = 2.0 * (u - nominal);
        for (std::size_t i = 0; i < normals.size(); ++i) g += 2.0 * psi[i] * u.dot(normals[i]) * normals[i];
        return g;
    }
};

// Polak-Ribiere conjugate gradients using only objective gradients. The
// directional derivative is affine along a line, so the secant step is the
// exact line minimizer.
inline Vec minimize(const PenaltyObjective& f, Vec u, int max_iter = 500) {
    Vec g = f.gradient(u);
    Vec p = -g;
    const double scale = 1.0 + f.nominal.norm();
    for (int it = 0; it < max_iter && g.norm() > 1e-15 * scale; ++it) {
        const double d0 = g.dot(p);
        const double d1 = f.gradient(u + p).dot(p);
        if (!(d1 > d0)) break;
        u += (-d0 / (d1 - d0)) * p;
        const Vec g_new = f.gradient(u);
        const double beta = std::max(0.0, g_new.dot(g_new - g) / g.dot(g));
        p = -g_new + beta * p;
        g = g_new;
    }
    return u;
}

}  // namespace spf::test
