#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "spinmem/constants.hpp"
#include "spinmem/errors.hpp"
#include "spinmem/math/fft.hpp"

namespace spinmem {

/// Echo-amplitude attenuation L(2tau) in [0, 1] on an increasing grid.
struct CoherenceCurve {
    std::vector<double> two_tau;  // s
    std::vector<double> L;

    void validate() const {
        if (two_tau.size() != L.size() || two_tau.empty())
            throw ConfigError("coherence curve: empty or mismatched grids");
        for (std::size_t i = 0; i < two_tau.size(); ++i) {
            if (i > 0 && !(two_tau[i] > two_tau[i - 1]))
                throw ConfigError("coherence curve: grid must be strictly increasing");
            if (!(L[i] >= -1e-9 && L[i] <= 1.0 + 1e-9))
                throw ConfigError("coherence curve: L outside [0, 1]");
        }
        if (two_tau.front() == 0.0 && std::abs(L.front() - 1.0) > 1e-9)
            throw ConfigError("coherence curve: L(0) must be 1");
    }
};

/// Pointwise product of attenuation curves sharing one grid.
inline CoherenceCurve combined_decay(const std::vector<CoherenceCurve>& curves) {
    if (curves.empty()) throw ConfigError("combined_decay: no curves");
    for (const auto& c : curves) c.validate();
    const auto& grid = curves.front().two_tau;
    for (const auto& c : curves) {
        if (c.two_tau.size() != grid.size())
            throw ConfigError("combined_decay: curves use different grids");
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::abs(c.two_tau[i] - grid[i]) > 1e-12 * std::max(1.0, std::abs(grid[i])))
                throw ConfigError("combined_decay: curves use different grids");
    }
    CoherenceCurve out;
    out.two_tau = grid;
    out.L.assign(grid.size(), 1.0);
    for (const auto& c : curves)
        for (std::size_t i = 0; i < grid.size(); ++i) out.L[i] *= c.L[i];
    return out;
}

struct ExponentialFit {
    double t2 = 0.0;         // s
    double amplitude = 0.0;  // fitted L at zero delay
    std::size_t points_used = 0;
};

/// Least-squares exponential A0 exp(-t/T2) fit on ln L over the range L > 0.1.
inline ExponentialFit fit_exponential(const CoherenceCurve& curve) {
    curve.validate();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < curve.two_tau.size(); ++i) {
        if (!(curve.L[i] > 0.1)) continue;
        const double x = curve.two_tau[i];
        const double y = std::log(curve.L[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) throw NumericalError("fit_exponential: fewer than 2 points with L > 0.1");
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw NumericalError("fit_exponential: degenerate grid");
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    if (!(slope < 0.0)) throw NumericalError("fit_exponential: curve does not decay");
    ExponentialFit out;
    out.t2 = -1.0 / slope;
    out.amplitude = std::exp(intercept);
    out.points_used = m;
    return out;
}

/// Dominant modulation frequency of 1 - L, measured against the interpulse
/// delay tau = two_tau/2 (the conventional echo-modulation axis).
/// Returns an angular frequency in rad/s; 0 if featureless.
inline double dominant_oscillation_frequency(const CoherenceCurve& curve) {
    curve.validate();
    const std::size_t n = curve.two_tau.size();
    if (n < 8) throw ConfigError("dominant_oscillation_frequency: need >= 8 points");
    const double step = curve.two_tau[1] - curve.two_tau[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double d = curve.two_tau[i] - curve.two_tau[i - 1];
        if (std::abs(d - step) > 1e-9 * step)
            throw ConfigError("dominant_oscillation_frequency: grid must be uniform");
    }
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = 1.0 - curve.L[i];
    const double dtau = step / 2.0;
    return two_pi * dominant_frequency(residual, dtau);
}

}  // namespace spinmem
