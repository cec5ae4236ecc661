#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "spinmem/constants.hpp"
#include "spinmem/ensemble.hpp"
#include "spinmem/errors.hpp"
#include "spinmem/math/compensated_sum.hpp"
#include "spinmem/math/levenberg_marquardt.hpp"

namespace spinmem {

struct CavityParams {
    double omega_r = two_pi * 2.915e9;          // rad/s
    double kappa_ext = two_pi * 2.915e9 / 650;  // rad/s
    double kappa_int = 0.0;                     // rad/s

    double kappa() const { return kappa_ext + kappa_int; }
    double quality() const { return omega_r / kappa(); }

    static CavityParams from_quality(double omega_r, double q, double kappa_int = 0.0) {
        if (!(q > 0.0)) throw ConfigError("Q must be > 0");
        CavityParams c;
        c.omega_r = omega_r;
        c.kappa_int = kappa_int;
        c.kappa_ext = omega_r / q - kappa_int;
        c.validate();
        return c;
    }

    void validate() const {
        if (!(omega_r > 0.0)) throw ConfigError("omega_r must be > 0");
        if (!(kappa_ext > 0.0)) throw ConfigError("kappa_ext must be > 0");
        if (!(kappa_int >= 0.0)) throw ConfigError("kappa_int must be >= 0");
    }
};

struct ReflectionSpectrum {
    std::vector<double> frequencies;          // rad/s
    std::vector<std::complex<double>> s11;
};

struct FitParameter {
    double value = 0.0;
    double std_error = 0.0;
};

struct FitResult {
    std::map<std::string, FitParameter> parameters;
    double residual_norm = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Smoothing half-width for the discrete spin susceptibility sum. Keeps the
/// bin sum a faithful stand-in for the continuous line; results are
/// insensitive once it exceeds the bin spacing.
inline constexpr double default_gamma_hom = two_pi * 6.5e3;

/// Spin susceptibility W(omega) = sum_j p g_j^2 w_j / (i(omega_j - omega) + gamma).
inline std::complex<double> spin_susceptibility(double omega, const EnsembleModel& ens,
                                                double gamma_hom) {
    CompensatedComplexSum sum;
    const double p = ens.polarization;
    for (const auto& b : ens.bins) {
        const double omega_j = ens.reference + b.detuning;
        sum.add(p * b.g * b.g * b.weight /
                std::complex<double>(gamma_hom, omega_j - omega));
    }
    return sum.value();
}

/// Single-port reflection at one frequency.
/// S11 = 1 - kappa_ext / (i(omega_r - omega) + kappa/2 + W(omega)); this sign
/// choice gives a downward 2pi phase winding across resonance.
inline std::complex<double> s11_at(double omega, const CavityParams& cav,
                                   const EnsembleModel& ens,
                                   double gamma_hom = default_gamma_hom) {
    const std::complex<double> denom =
        std::complex<double>(cav.kappa() / 2.0, cav.omega_r - omega) +
        spin_susceptibility(omega, ens, gamma_hom);
    return 1.0 - cav.kappa_ext / denom;
}

inline ReflectionSpectrum reflection_spectrum(const std::vector<double>& grid,
                                              const CavityParams& cav,
                                              const EnsembleModel& ens,
                                              double gamma_hom = default_gamma_hom) {
    cav.validate();
    if (grid.empty()) throw ConfigError("reflection_spectrum: empty frequency grid");
    ReflectionSpectrum out;
    out.frequencies = grid;
    out.s11.reserve(grid.size());
    for (double w : grid) out.s11.push_back(s11_at(w, cav, ens, gamma_hom));
    return out;
}

/// |S11| at a fixed probe frequency while the field sweeps the triplet
/// through it. The relative bin layout is computed once and shifted per
/// field point.
inline std::vector<double> field_scan(const std::vector<double>& b_grid, double omega_probe,
                                      const CavityParams& cav, const EnsembleConfig& cfg,
                                      double p, int n_freq = 4000,
                                      double span = two_pi * 6e6,
                                      double gamma_hom = default_gamma_hom) {
    cav.validate();
    if (b_grid.size() < 2) throw ConfigError("field_scan: need at least 2 field points");
    for (std::size_t i = 1; i < b_grid.size(); ++i)
        if (!(b_grid[i] > b_grid[i - 1]))
            throw ConfigError("field_scan: field grid must be strictly increasing");

    EnsembleModel ens = discretize_ensemble(cfg, p, n_freq, 1, span);
    std::vector<double> out;
    out.reserve(b_grid.size());
    for (double B : b_grid) {
        ens.reference = zeeman_frequency(B, cfg);
        out.push_back(std::abs(s11_at(omega_probe, cav, ens, gamma_hom)));
    }
    return out;
}

namespace detail {

inline std::complex<double> bare_s11(double omega, double omega_r, double kappa) {
    return (std::complex<double>(-kappa / 2.0, omega_r - omega)) /
           (std::complex<double>(kappa / 2.0, omega_r - omega));
}

}  // namespace detail

/// Fits omega_r and Q of a bare (spin-free, overcoupled) resonator from a
/// complex reflection trace. The model is the unit-magnitude phase response
/// with a constant phase offset as a nuisance parameter.
inline FitResult fit_resonator(const ReflectionSpectrum& spectrum) {
    const std::size_t n = spectrum.frequencies.size();
    if (n < 8 || spectrum.s11.size() != n)
        throw ConfigError("fit_resonator: need >= 8 matching spectrum points");

    // Initial guess: resonance where the phase turns fastest.
    std::vector<double> phase(n);
    for (std::size_t i = 0; i < n; ++i) phase[i] = std::arg(spectrum.s11[i]);
    double best_slope = 0.0;
    std::size_t best_i = n / 2;
    for (std::size_t i = 1; i < n; ++i) {
        double dphi = phase[i] - phase[i - 1];
        while (dphi > pi) dphi -= two_pi;
        while (dphi < -pi) dphi += two_pi;
        const double dw = spectrum.frequencies[i] - spectrum.frequencies[i - 1];
        const double slope = std::abs(dphi / dw);
        if (slope > best_slope) {
            best_slope = slope;
            best_i = i;
        }
    }
    double omega0 = spectrum.frequencies[best_i];
    double kappa0 = best_slope > 0.0 ? 4.0 / best_slope
                                     : (spectrum.frequencies.back() - spectrum.frequencies.front()) / 10.0;

    auto residuals = [&](const std::vector<double>& prm) {
        std::vector<double> r;
        r.reserve(2 * n);
        const std::complex<double> rot = std::polar(1.0, prm[2]);
        for (std::size_t i = 0; i < n; ++i) {
            const std::complex<double> model =
                rot * detail::bare_s11(spectrum.frequencies[i], prm[0], prm[1]);
            r.push_back(model.real() - spectrum.s11[i].real());
            r.push_back(model.imag() - spectrum.s11[i].imag());
        }
        return r;
    };

    FitOptions opt;
    opt.lower = {0.0, 0.0, -two_pi};
    opt.upper = {2.0 * spectrum.frequencies.back(), 1e12, two_pi};
    auto fit = fit_least_squares(residuals, {omega0, kappa0, 0.0}, opt);

    FitResult out;
    out.converged = fit.converged;
    out.iterations = fit.iterations;
    out.residual_norm = std::sqrt(fit.chi2);
    out.parameters["omega_r"] = {fit.params[0], fit.std_errors[0]};
    out.parameters["kappa"] = {fit.params[1], fit.std_errors[1]};
    out.parameters["phase_offset"] = {fit.params[2], fit.std_errors[2]};
    const double q = fit.params[0] / fit.params[1];
    const double q_err =
        q * std::sqrt(std::pow(fit.std_errors[0] / fit.params[0], 2) +
                      std::pow(fit.std_errors[1] / fit.params[1], 2));
    out.parameters["Q"] = {q, q_err};
    return out;
}

/// Fits a field-scan magnitude curve to a baseline minus three Lorentzian
/// dips; initialization by picking the three deepest local minima.
inline FitResult fit_triplet(const std::vector<double>& b_grid,
                             const std::vector<double>& magnitude) {
    const std::size_t n = b_grid.size();
    if (n < 16 || magnitude.size() != n)
        throw ConfigError("fit_triplet: need >= 16 matching curve points");

    struct Dip {
        double b, depth;
    };
    std::vector<Dip> dips;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (magnitude[i] < magnitude[i - 1] && magnitude[i] <= magnitude[i + 1])
            dips.push_back({b_grid[i], 0.0});
    }
    double baseline = *std::max_element(magnitude.begin(), magnitude.end());
    for (auto& d : dips) {
        const auto it = std::lower_bound(b_grid.begin(), b_grid.end(), d.b);
        d.depth = baseline - magnitude[static_cast<std::size_t>(it - b_grid.begin())];
    }
    std::sort(dips.begin(), dips.end(), [](const Dip& a, const Dip& b) { return a.depth > b.depth; });
    if (dips.size() < 3)
        throw ConfigError("fit_triplet: found " + std::to_string(dips.size()) +
                          " dips, need 3");
    dips.resize(3);
    std::sort(dips.begin(), dips.end(), [](const Dip& a, const Dip& b) { return a.b < b.b; });

    const double width0 = (dips[2].b - dips[0].b) / 10.0;

    // Parameters: baseline, then (center, width, depth) per dip.
    std::vector<double> p0 = {baseline};
    for (const auto& d : dips) {
        p0.push_back(d.b);
        p0.push_back(width0);
        p0.push_back(d.depth);
    }

    auto residuals = [&](const std::vector<double>& prm) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            double m = prm[0];
            for (int k = 0; k < 3; ++k) {
                const double c = prm[1 + 3 * k];
                const double w = prm[2 + 3 * k];
                const double d = prm[3 + 3 * k];
                const double x = (b_grid[i] - c) / w;
                m -= d / (1.0 + x * x);
            }
            r[i] = m - magnitude[i];
        }
        return r;
    };

    FitOptions opt;
    opt.lower.assign(p0.size(), -1e30);
    opt.upper.assign(p0.size(), 1e30);
    for (int k = 0; k < 3; ++k) {
        opt.lower[2 + 3 * static_cast<std::size_t>(k)] = width0 * 1e-3;  // widths stay positive
        opt.lower[3 + 3 * static_cast<std::size_t>(k)] = 0.0;            // depths stay >= 0
    }
    auto fit = fit_least_squares(residuals, p0, opt);

    FitResult out;
    out.converged = fit.converged;
    out.iterations = fit.iterations;
    out.residual_norm = std::sqrt(fit.chi2);
    out.parameters["baseline"] = {fit.params[0], fit.std_errors[0]};
    for (int k = 0; k < 3; ++k) {
        const std::string idx = std::to_string(k);
        out.parameters["center" + idx] = {fit.params[1 + 3 * static_cast<std::size_t>(k)],
                                          fit.std_errors[1 + 3 * static_cast<std::size_t>(k)]};
        out.parameters["width" + idx] = {fit.params[2 + 3 * static_cast<std::size_t>(k)],
                                         fit.std_errors[2 + 3 * static_cast<std::size_t>(k)]};
        out.parameters["depth" + idx] = {fit.params[3 + 3 * static_cast<std::size_t>(k)],
                                         fit.std_errors[3 + 3 * static_cast<std::size_t>(k)]};
    }
    return out;
}

/// Calibration constant relating g_eff^2/(kappa Gamma_HWHM) to the reported
/// cooperativity scale; stored in configuration, applied here.
inline constexpr double default_cooperativity_calibration = 0.5887;

inline double cooperativity(double g_eff, double kappa, double gamma_hwhm,
                            double calibration = default_cooperativity_calibration) {
    if (!(g_eff >= 0.0)) throw ConfigError("g_eff must be >= 0");
    if (!(kappa > 0.0) || !(gamma_hwhm > 0.0))
        throw ConfigError("kappa and gamma must be > 0");
    if (!(calibration > 0.0)) throw ConfigError("cooperativity calibration must be > 0");
    return calibration * g_eff * g_eff / (kappa * gamma_hwhm);
}

/// Steady-state intra-cavity photon number for resonant drive power P_in.
inline double mean_photons(double p_in, const CavityParams& cav) {
    cav.validate();
    if (!(p_in >= 0.0)) throw ConfigError("input power must be >= 0");
    const double kappa = cav.kappa();
    return 4.0 * cav.kappa_ext * p_in / (hbar * cav.omega_r * kappa * kappa);
}

}  // namespace spinmem
