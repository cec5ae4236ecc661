#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spinmem/constants.hpp"
#include "spinmem/errors.hpp"
#include "spinmem/math/special.hpp"

namespace spinmem {

enum class Lineshape { Lorentzian, Gaussian };

/// Distribution of single-spin coupling strengths across the ensemble.
/// Values are relative shapes; discretize_ensemble rescales them so the
/// collective coupling comes out exactly, so only the shape matters here.
struct CouplingDistribution {
    enum class Kind { Delta, LogNormal, Histogram };

    Kind kind = Kind::Delta;
    double log_sd = 0.0;                // LogNormal: std dev of ln g
    std::vector<double> values;         // Histogram
    std::vector<double> weights;        // Histogram

    static CouplingDistribution delta() { return {}; }

    static CouplingDistribution lognormal(double log_sd) {
        if (!(log_sd > 0.0)) throw ConfigError("lognormal coupling spread must be > 0");
        CouplingDistribution d;
        d.kind = Kind::LogNormal;
        d.log_sd = log_sd;
        return d;
    }

    static CouplingDistribution histogram(std::vector<double> values,
                                          std::vector<double> weights) {
        if (values.empty() || values.size() != weights.size())
            throw ConfigError("coupling histogram needs matching nonempty values/weights");
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] > 0.0)) throw ConfigError("coupling histogram values must be > 0");
            if (!(weights[i] >= 0.0)) throw ConfigError("coupling histogram weights must be >= 0");
            total += weights[i];
        }
        if (!(total > 0.0)) throw ConfigError("coupling histogram weights sum to zero");
        CouplingDistribution d;
        d.kind = Kind::Histogram;
        d.values = std::move(values);
        d.weights = std::move(weights);
        for (double& w : d.weights) w /= total;
        return d;
    }

    /// n nodes of (relative coupling, weight); weights sum to 1.
    std::vector<std::pair<double, double>> nodes(int n) const {
        std::vector<std::pair<double, double>> out;
        switch (kind) {
            case Kind::Delta:
                out.emplace_back(1.0, 1.0);
                break;
            case Kind::LogNormal: {
                if (n < 1) throw ConfigError("coupling node count must be >= 1");
                for (int k = 0; k < n; ++k) {
                    const double q = (k + 0.5) / n;
                    out.emplace_back(std::exp(log_sd * inverse_normal_cdf(q)), 1.0 / n);
                }
                break;
            }
            case Kind::Histogram:
                for (std::size_t i = 0; i < values.size(); ++i)
                    out.emplace_back(values[i], weights[i]);
                break;
        }
        return out;
    }
};

struct EnsembleConfig {
    double zero_field_splitting = two_pi * 2.88e9;   // rad/s
    double hyperfine_splitting = two_pi * 2.2e6;     // rad/s
    double line_halfwidth = two_pi * 65e3;           // rad/s, HWHM per hyperfine line
    Lineshape lineshape = Lineshape::Lorentzian;
    double g_ens = two_pi * 410e3;                   // rad/s at full polarization
    double electron_gyromagnetic = two_pi * 28.02e9; // rad/(s T)
    double nv_axis_angle = nv110_axis_angle;         // rad, NV axis vs applied field
    // Spin count behind the collective coupling. It sets the single-spin
    // coupling g_j/sqrt(N) and the excitation per spin; in the linear regime
    // observable dynamics are independent of it.
    double total_spins = 1e10;
    CouplingDistribution coupling_dist{};

    void validate() const {
        if (!(zero_field_splitting > 0.0))
            throw ConfigError("zero_field_splitting must be > 0");
        if (!(hyperfine_splitting > 0.0))
            throw ConfigError("hyperfine_splitting must be > 0");
        if (!(line_halfwidth > 0.0)) throw ConfigError("line_halfwidth must be > 0");
        if (!(g_ens > 0.0)) throw ConfigError("g_ens must be > 0");
        if (!(electron_gyromagnetic > 0.0))
            throw ConfigError("electron_gyromagnetic must be > 0");
        if (!(nv_axis_angle >= 0.0 && nv_axis_angle <= pi / 2))
            throw ConfigError("nv_axis_angle must be in [0, pi/2]");
        if (!(total_spins >= 1.0)) throw ConfigError("total_spins must be >= 1");
    }
};

struct SpinBin {
    double detuning = 0.0;  // rad/s, relative to the model's reference frequency
    double g = 0.0;         // rad/s, collective-scale coupling
    double weight = 0.0;
    double u = 0.0, v = 0.0, sz = 0.0;  // Bloch vector
};

struct EnsembleModel {
    std::vector<SpinBin> bins;
    double polarization = 0.0;
    double reference = 0.0;  // rad/s, absolute frequency the detunings refer to
    EnsembleConfig config{};

    void reset(double p) {
        polarization = p;
        for (auto& b : bins) {
            b.u = 0.0;
            b.v = 0.0;
            b.sz = -p;
        }
    }
};

namespace detail {

inline double gaussian_sigma(double halfwidth) {
    return halfwidth / std::sqrt(2.0 * std::numbers::ln2_v<double>);
}

inline double line_density(double x, double halfwidth, Lineshape shape) {
    if (shape == Lineshape::Lorentzian)
        return halfwidth / (pi * (x * x + halfwidth * halfwidth));
    const double s = gaussian_sigma(halfwidth);
    return std::exp(-x * x / (2.0 * s * s)) / (s * std::sqrt(two_pi));
}

inline double line_cdf(double x, double halfwidth, Lineshape shape) {
    if (shape == Lineshape::Lorentzian) return 0.5 + std::atan(x / halfwidth) / pi;
    const double s = gaussian_sigma(halfwidth);
    return 0.5 * (1.0 + std::erf(x / (s * std::numbers::sqrt2_v<double>)));
}

}  // namespace detail

/// Unit-area spectral density of the hyperfine triplet: three lines of
/// half-width line_halfwidth at center and center +- hyperfine_splitting.
inline double triplet_density(double omega, const EnsembleConfig& cfg, double center) {
    if (!std::isfinite(omega) || !std::isfinite(center))
        throw NumericalError("triplet_density: non-finite frequency");
    const double x = omega - center;
    const double A = cfg.hyperfine_splitting;
    return (detail::line_density(x + A, cfg.line_halfwidth, cfg.lineshape) +
            detail::line_density(x, cfg.line_halfwidth, cfg.lineshape) +
            detail::line_density(x - A, cfg.line_halfwidth, cfg.lineshape)) /
           3.0;
}

/// Integral of triplet_density over [lo, hi] relative to the same center.
inline double triplet_mass(double lo, double hi, const EnsembleConfig& cfg, double center) {
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw NumericalError("triplet_mass: non-finite bound");
    const double A = cfg.hyperfine_splitting;
    double total = 0.0;
    for (double offset : {-A, 0.0, A}) {
        total += detail::line_cdf(hi - center - offset, cfg.line_halfwidth, cfg.lineshape) -
                 detail::line_cdf(lo - center - offset, cfg.line_halfwidth, cfg.lineshape);
    }
    return total / 3.0;
}

/// Bins the triplet over [-span, +span] around the reference with
/// cell-integrated frequency weights crossed with the coupling distribution.
/// Couplings are rescaled so sum(w g^2) = g_ens^2 exactly.
inline EnsembleModel discretize_ensemble(const EnsembleConfig& cfg, double p, int n_freq,
                                         int n_g, double span) {
    cfg.validate();
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("polarization must be in [0, 1]");
    if (n_freq < 3) throw ConfigError("n_freq must be >= 3");
    if (n_g < 1) throw ConfigError("n_g must be >= 1");
    const double min_span = cfg.hyperfine_splitting + 10.0 * cfg.line_halfwidth;
    if (!(span >= min_span))
        throw ConfigError("span must cover at least +-(hyperfine_splitting + 10*line_halfwidth)");

    const double coverage = triplet_mass(-span, span, cfg, 0.0);
    if (coverage < 0.99)
        throw ConfigError("span captures " + std::to_string(coverage * 100.0) +
                          "% of the line mass; need >= 99%");

    const auto g_nodes = cfg.coupling_dist.nodes(n_g);

    EnsembleModel model;
    model.config = cfg;
    model.polarization = p;
    model.bins.reserve(static_cast<std::size_t>(n_freq) * g_nodes.size());

    std::vector<double> freq_mass(static_cast<std::size_t>(n_freq));
    double total_mass = 0.0;
    for (int j = 0; j < n_freq; ++j) {
        const double lo = -span + 2.0 * span * j / n_freq;
        const double hi = -span + 2.0 * span * (j + 1) / n_freq;
        freq_mass[static_cast<std::size_t>(j)] = triplet_mass(lo, hi, cfg, 0.0);
        total_mass += freq_mass[static_cast<std::size_t>(j)];
    }

    double second_moment = 0.0;  // sum over coupling nodes of weight * shape^2
    for (const auto& [shape, w] : g_nodes) second_moment += w * shape * shape;
    const double scale = cfg.g_ens / std::sqrt(second_moment);

    for (int j = 0; j < n_freq; ++j) {
        const double center = -span + 2.0 * span * (j + 0.5) / n_freq;
        const double wf = freq_mass[static_cast<std::size_t>(j)] / total_mass;
        for (const auto& [shape, wg] : g_nodes) {
            SpinBin b;
            b.detuning = center;
            b.g = scale * shape;
            b.weight = wf * wg;
            b.u = 0.0;
            b.v = 0.0;
            b.sz = -p;
            model.bins.push_back(b);
        }
    }
    return model;
}

/// m_S = 0 -> +1 transition frequency in the linear low-field model.
inline double zeeman_frequency(double B, const EnsembleConfig& cfg) {
    if (!std::isfinite(B) || B < 0.0) throw ConfigError("field must be finite and >= 0");
    return cfg.zero_field_splitting +
           cfg.electron_gyromagnetic * B * std::cos(cfg.nv_axis_angle);
}

/// Field at which the triplet center sits at the given frequency.
inline double field_for_frequency(double omega, const EnsembleConfig& cfg) {
    return (omega - cfg.zero_field_splitting) /
           (cfg.electron_gyromagnetic * std::cos(cfg.nv_axis_angle));
}

/// Collective coupling at partial polarization.
inline double effective_coupling(double g_ens, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("polarization must be in [0, 1]");
    return g_ens * std::sqrt(p);
}

}  // namespace spinmem
