#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "spinmem/constants.hpp"
#include "spinmem/ensemble.hpp"
#include "spinmem/errors.hpp"
#include "spinmem/math/compensated_sum.hpp"
#include "spinmem/spectroscopy.hpp"

namespace spinmem {

struct PulseSegment {
    enum class Kind { Drive, Idle, IdealRotation };

    Kind kind = Kind::Idle;
    double duration = 0.0;                     // s; zero for IdealRotation
    std::complex<double> amplitude{0.0, 0.0};  // sqrt(photons/s), Drive only
    double detuning = 0.0;                     // rad/s off the shared carrier, Drive only
    double angle = 0.0;                        // rad, IdealRotation only
    double axis_phase = 0.0;                   // rad, IdealRotation only

    static PulseSegment drive(std::complex<double> amplitude, double duration,
                              double detuning = 0.0) {
        PulseSegment s;
        s.kind = Kind::Drive;
        s.amplitude = amplitude;
        s.duration = duration;
        s.detuning = detuning;
        return s;
    }
    static PulseSegment idle(double duration) {
        PulseSegment s;
        s.kind = Kind::Idle;
        s.duration = duration;
        return s;
    }
    static PulseSegment ideal_rotation(double angle, double axis_phase = 0.0) {
        PulseSegment s;
        s.kind = Kind::IdealRotation;
        s.angle = angle;
        s.axis_phase = axis_phase;
        return s;
    }
};

struct PulseSequence {
    std::vector<PulseSegment> segments;
    double sample_dt = 5e-8;  // s, output sampling
    double carrier = 0.0;     // rad/s, absolute rotating-frame frequency

    double total_duration() const {
        double t = 0.0;
        for (const auto& s : segments) t += s.duration;
        return t;
    }

    void validate() const {
        if (!(sample_dt > 0.0)) throw ConfigError("sample_dt must be > 0");
        double shortest = 0.0;
        for (const auto& s : segments) {
            if (!(s.duration >= 0.0)) throw ConfigError("segment duration must be >= 0");
            if (s.kind == PulseSegment::Kind::IdealRotation && s.duration != 0.0)
                throw ConfigError("ideal rotation segments must have zero duration");
            if (s.kind == PulseSegment::Kind::Drive &&
                !(std::isfinite(s.amplitude.real()) && std::isfinite(s.amplitude.imag())))
                throw ConfigError("drive amplitude must be finite");
            if (s.duration > 0.0 && (shortest == 0.0 || s.duration < shortest))
                shortest = s.duration;
        }
        if (!(total_duration() > 0.0)) throw ConfigError("sequence must have positive duration");
        if (sample_dt > shortest / 10.0 + 1e-18)
            throw ConfigError("sample_dt must be <= shortest nonzero segment / 10");
        for (const auto& s : segments) {
            if (s.duration == 0.0) continue;
            const double n = std::round(s.duration / sample_dt);
            if (std::abs(n * sample_dt - s.duration) >
                1e-9 * std::max(s.duration, sample_dt))
                throw ConfigError("segment durations must be integer multiples of sample_dt");
        }
    }
};

struct TimeTrace {
    std::vector<double> t;                          // s
    std::vector<std::complex<double>> a_out;        // sqrt(photons/s)
    std::vector<std::complex<double>> a_cav;        // sqrt(photons)
    std::vector<std::complex<double>> dipole;       // sum_j w_j s_j^-
    // Cumulative energy integrals up to each sample, for window arithmetic.
    std::vector<double> cum_in;    // photons, integral of |a_in|^2
    std::vector<double> cum_refl;  // photons, integral of |a_out|^2
};

struct HomogeneousRates {
    double gamma2 = 0.0;  // rad/s, transverse
    double gamma1 = 0.0;  // rad/s, longitudinal
};

enum class SpinModel { FullBloch, Linearized };

struct IntegrationOptions {
    SpinModel spin_model = SpinModel::FullBloch;
    double dt_safety = 20.0;  // dt <= 1/(dt_safety * max rate)
    double fixed_dt = 0.0;    // 0 = choose from the step policy
};

struct EnergyBudget {
    double E_in = 0.0;          // photons
    double E_refl = 0.0;        // photons
    double E_cav = 0.0;         // photons, |a|^2 at the final time
    double E_spin = 0.0;        // photons stored in the ensemble at the final time
    double E_dissipated = 0.0;  // photons lost to kappa_int, gamma1, gamma2 channels
    // E_in - (E_refl + E_cav + E_spin + E_dissipated). Zero to integrator
    // accuracy when gamma2 = 0 or in the linearized model; with gamma2 > 0 in
    // the full Bloch model the dephasing channel and the sz-based stored
    // energy overlap, and the overlap lands here.
    double residual = 0.0;
};

struct IntegrationResult {
    TimeTrace trace;
    EnsembleModel final_state;
    EnergyBudget budget;
    double dt = 0.0;
    std::size_t steps = 0;
};

/// Rotates every bin's Bloch vector by `angle` about the in-plane axis at
/// `axis_phase` (Rodrigues form; norms preserved).
inline void apply_ideal_rotation(EnsembleModel& ens, double angle, double axis_phase) {
    const double nx = std::cos(axis_phase);
    const double ny = std::sin(axis_phase);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (auto& b : ens.bins) {
        const double rx = b.u, ry = b.v, rz = b.sz;
        const double ndotr = nx * rx + ny * ry;
        const double cxx = ny * rz;          // (n x r)_x with n_z = 0
        const double cxy = -nx * rz;         // (n x r)_y
        const double cxz = nx * ry - ny * rx;
        b.u = rx * c + cxx * s + nx * ndotr * (1.0 - c);
        b.v = ry * c + cxy * s + ny * ndotr * (1.0 - c);
        b.sz = rz * c + cxz * s;
    }
}

namespace detail {

struct DynState {
    std::complex<double> a{0.0, 0.0};
    std::vector<std::complex<double>> sm;
    std::vector<double> sz;
    // Quadrature channels integrated alongside the physical state.
    double q_refl = 0.0;   // |a_out|^2
    double q_cav = 0.0;    // |a|^2
    double q_g1 = 0.0;     // sum_j w_j (sz_j + p)
    double q_g2 = 0.0;     // sum_j w_j |sm_j|^2
};

inline void axpy(DynState& out, const DynState& y, double h, const DynState& k) {
    out.a = y.a + h * k.a;
    const std::size_t n = y.sm.size();
    for (std::size_t j = 0; j < n; ++j) out.sm[j] = y.sm[j] + h * k.sm[j];
    for (std::size_t j = 0; j < n; ++j) out.sz[j] = y.sz[j] + h * k.sz[j];
    out.q_refl = y.q_refl + h * k.q_refl;
    out.q_cav = y.q_cav + h * k.q_cav;
    out.q_g1 = y.q_g1 + h * k.q_g1;
    out.q_g2 = y.q_g2 + h * k.q_g2;
}

inline void rk4_combine(DynState& y, double h, const DynState& k1, const DynState& k2,
                        const DynState& k3, const DynState& k4) {
    const double w = h / 6.0;
    y.a += w * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
    const std::size_t n = y.sm.size();
    for (std::size_t j = 0; j < n; ++j)
        y.sm[j] += w * (k1.sm[j] + 2.0 * k2.sm[j] + 2.0 * k3.sm[j] + k4.sm[j]);
    for (std::size_t j = 0; j < n; ++j)
        y.sz[j] += w * (k1.sz[j] + 2.0 * k2.sz[j] + 2.0 * k3.sz[j] + k4.sz[j]);
    y.q_refl += w * (k1.q_refl + 2.0 * k2.q_refl + 2.0 * k3.q_refl + k4.q_refl);
    y.q_cav += w * (k1.q_cav + 2.0 * k2.q_cav + 2.0 * k3.q_cav + k4.q_cav);
    y.q_g1 += w * (k1.q_g1 + 2.0 * k2.q_g1 + 2.0 * k3.q_g1 + k4.q_g1);
    y.q_g2 += w * (k1.q_g2 + 2.0 * k2.q_g2 + 2.0 * k3.q_g2 + k4.q_g2);
}

}  // namespace detail

/// Integrates the coupled cavity-spin equations in the frame rotating at the
/// sequence carrier with a fixed-step RK4:
///   da/dt    = -(kappa/2 + i Dc) a - i sqrt(N) sum_j w_j g_j sm_j + sqrt(kappa_ext) a_in
///   dsm_j/dt = -(i D_j + gamma2) sm_j + i (g_j/sqrt(N)) a sz_j
///   dsz_j/dt = -gamma1 (sz_j + p) - 4 (g_j/sqrt(N)) Im(conj(a) sm_j)
/// with N the configured total spin count; a_out = sqrt(kappa_ext) a - a_in.
/// The sz drive term carries the sign required by energy conservation. The
/// bin reduction is a fixed-order compensated sum, so results are bitwise
/// reproducible for any thread count.
inline IntegrationResult integrate_sequence(const EnsembleModel& ens, const CavityParams& cav,
                                            const PulseSequence& seq,
                                            const HomogeneousRates& rates = {},
                                            const IntegrationOptions& opts = {}) {
    cav.validate();
    seq.validate();
    if (ens.bins.empty()) throw ConfigError("integrate_sequence: empty ensemble");
    if (!(rates.gamma2 >= 0.0 && rates.gamma1 >= 0.0))
        throw ConfigError("homogeneous rates must be >= 0");
    const double p = ens.polarization;
    if (opts.spin_model == SpinModel::Linearized && !(p > 0.0))
        throw ConfigError("linearized model needs polarization > 0");

    const std::size_t n = ens.bins.size();
    const double sqrt_n_spins = std::sqrt(ens.config.total_spins);
    const double kappa = cav.kappa();
    const double sqrt_kext = std::sqrt(cav.kappa_ext);
    const double delta_c = cav.omega_r - seq.carrier;

    // Frame detunings and per-bin constants.
    std::vector<double> det(n), g_col(n), g_single(n), w(n);
    double max_det = std::abs(delta_c), max_g = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        det[j] = ens.reference + ens.bins[j].detuning - seq.carrier;
        g_col[j] = ens.bins[j].g;
        g_single[j] = ens.bins[j].g / sqrt_n_spins;
        w[j] = ens.bins[j].weight;
        max_det = std::max(max_det, std::abs(det[j]));
        max_g = std::max(max_g, g_col[j]);
    }

    // Step policy: the fastest rate in the problem sets dt.
    double g_ens_rate = 0.0;
    for (std::size_t j = 0; j < n; ++j) g_ens_rate += w[j] * g_col[j] * g_col[j];
    g_ens_rate = std::sqrt(g_ens_rate);

    double rabi_max = 0.0;
    for (const auto& s : seq.segments) {
        if (s.kind != PulseSegment::Kind::Drive) continue;
        max_det = std::max(max_det, std::abs(s.detuning + delta_c));
        const double a_est = 2.0 * sqrt_kext * std::abs(s.amplitude) / kappa;
        rabi_max = std::max(rabi_max, 2.4 * (max_g / sqrt_n_spins) * a_est);
    }

    struct RateEntry {
        double rate;
        const char* name;
    };
    const RateEntry entries[] = {{kappa, "kappa"},
                                 {max_det, "max detuning"},
                                 {g_ens_rate, "collective coupling"},
                                 {rabi_max, "drive Rabi rate"},
                                 {rates.gamma2, "gamma2"},
                                 {rates.gamma1, "gamma1"}};
    double max_rate = 0.0;
    const char* limiting = "kappa";
    for (const auto& e : entries) {
        if (e.rate > max_rate) {
            max_rate = e.rate;
            limiting = e.name;
        }
    }

    const double dt_limit = max_rate > 0.0 ? 1.0 / (opts.dt_safety * max_rate) : seq.sample_dt;
    double dt = dt_limit;
    if (opts.fixed_dt > 0.0) {
        if (opts.fixed_dt > dt_limit * (1.0 + 1e-12))
            throw NumericalError(std::string("step policy violated: dt exceeds 1/(") +
                                 std::to_string(opts.dt_safety) + " * " + limiting + ")");
        dt = opts.fixed_dt;
    }
    const std::size_t steps_per_sample =
        static_cast<std::size_t>(std::ceil(seq.sample_dt / dt - 1e-12));
    dt = seq.sample_dt / static_cast<double>(steps_per_sample);

    // State setup.
    detail::DynState y;
    y.sm.resize(n);
    y.sz.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        y.sm[j] = std::complex<double>(ens.bins[j].u, -ens.bins[j].v) * 0.5;
        y.sz[j] = ens.bins[j].sz;
    }
    detail::DynState k1 = y, k2 = y, k3 = y, k4 = y, tmp = y;

    const bool linearized = opts.spin_model == SpinModel::Linearized;
    const double gamma2 = rates.gamma2, gamma1 = rates.gamma1;

    auto deriv = [&](double t, const detail::DynState& s, detail::DynState& d,
                     const std::complex<double>& amp, double drive_det) {
        const std::complex<double> a_in =
            (amp != 0.0) ? amp * std::polar(1.0, -drive_det * t) : std::complex<double>(0.0);
        CompensatedComplexSum dip;
        CompensatedSum acc_g1, acc_g2;
        const std::complex<double> a = s.a;
        for (std::size_t j = 0; j < n; ++j) {
            const std::complex<double> smj = s.sm[j];
            const double szj = linearized ? -p : s.sz[j];
            d.sm[j] = std::complex<double>(-gamma2, -det[j]) * smj +
                      std::complex<double>(0.0, g_single[j] * szj) * a;
            if (linearized) {
                d.sz[j] = 0.0;
            } else {
                const double im = a.real() * smj.imag() - a.imag() * smj.real();
                d.sz[j] = -gamma1 * (s.sz[j] + p) - 4.0 * g_single[j] * im;
            }
            dip.add((w[j] * g_col[j]) * smj);
            acc_g1.add(w[j] * (s.sz[j] + p));
            acc_g2.add(w[j] * std::norm(smj));
        }
        d.a = -std::complex<double>(kappa / 2.0, delta_c) * a -
              std::complex<double>(0.0, sqrt_n_spins) * dip.value() + sqrt_kext * a_in;
        const std::complex<double> a_out = sqrt_kext * a - a_in;
        d.q_refl = std::norm(a_out);
        d.q_cav = std::norm(a);
        d.q_g1 = acc_g1.value();
        d.q_g2 = acc_g2.value();
    };

    // Output allocation.
    std::size_t total_samples = 1;
    for (const auto& s : seq.segments) {
        if (s.duration > 0.0)
            total_samples += static_cast<std::size_t>(std::llround(s.duration / seq.sample_dt));
    }
    IntegrationResult out;
    TimeTrace& tr = out.trace;
    tr.t.reserve(total_samples);
    tr.a_out.reserve(total_samples);
    tr.a_cav.reserve(total_samples);
    tr.dipole.reserve(total_samples);
    tr.cum_in.reserve(total_samples);
    tr.cum_refl.reserve(total_samples);

    double e_in_cum = 0.0;
    std::size_t sample_index = 0;

    auto record = [&](const std::complex<double>& amp, double drive_det, double t) {
        const std::complex<double> a_in =
            (amp != 0.0) ? amp * std::polar(1.0, -drive_det * t) : std::complex<double>(0.0);
        CompensatedComplexSum dip;
        for (std::size_t j = 0; j < n; ++j) dip.add(w[j] * y.sm[j]);
        tr.t.push_back(t);
        tr.a_cav.push_back(y.a);
        tr.a_out.push_back(sqrt_kext * y.a - a_in);
        tr.dipole.push_back(dip.value());
        tr.cum_in.push_back(e_in_cum);
        tr.cum_refl.push_back(y.q_refl);
        if (!std::isfinite(y.a.real()) || !std::isfinite(y.a.imag()))
            throw NumericalError("non-finite cavity field at t = " + std::to_string(t) + " s");
    };

    double t_base = 0.0;  // accumulated time at segment starts, in exact sample counts
    std::size_t samples_done = 0;

    // First sample at t = 0 with the first segment's drive context.
    {
        std::complex<double> amp{0.0, 0.0};
        double ddet = 0.0;
        for (const auto& s : seq.segments) {
            if (s.kind == PulseSegment::Kind::IdealRotation) continue;
            if (s.kind == PulseSegment::Kind::Drive) {
                amp = s.amplitude;
                ddet = s.detuning;
            }
            break;
        }
        record(amp, ddet, 0.0);
    }

    for (const auto& s : seq.segments) {
        if (s.kind == PulseSegment::Kind::IdealRotation) {
            // Exact Bloch rotation applied between samples.
            const double nx = std::cos(s.axis_phase), ny = std::sin(s.axis_phase);
            const double c = std::cos(s.angle), sn = std::sin(s.angle);
            for (std::size_t j = 0; j < n; ++j) {
                const double rx = 2.0 * y.sm[j].real();
                const double ry = -2.0 * y.sm[j].imag();
                const double rz = y.sz[j];
                const double ndotr = nx * rx + ny * ry;
                const double ux = rx * c + ny * rz * sn + nx * ndotr * (1.0 - c);
                const double uy = ry * c - nx * rz * sn + ny * ndotr * (1.0 - c);
                const double uz = rz * c + (nx * ry - ny * rx) * sn;
                y.sm[j] = std::complex<double>(ux, -uy) * 0.5;
                y.sz[j] = uz;
            }
            continue;
        }
        if (s.duration == 0.0) continue;
        const std::size_t seg_samples =
            static_cast<std::size_t>(std::llround(s.duration / seq.sample_dt));
        const std::complex<double> amp =
            s.kind == PulseSegment::Kind::Drive ? s.amplitude : std::complex<double>(0.0);
        const double ddet = s.kind == PulseSegment::Kind::Drive ? s.detuning : 0.0;
        const double amp2 = std::norm(amp);

        for (std::size_t m = 0; m < seg_samples; ++m) {
            const double t0 = t_base + static_cast<double>(m) * seq.sample_dt;
            for (std::size_t i = 0; i < steps_per_sample; ++i) {
                const double t = t0 + static_cast<double>(i) * dt;
                deriv(t, y, k1, amp, ddet);
                detail::axpy(tmp, y, dt / 2.0, k1);
                deriv(t + dt / 2.0, tmp, k2, amp, ddet);
                detail::axpy(tmp, y, dt / 2.0, k2);
                deriv(t + dt / 2.0, tmp, k3, amp, ddet);
                detail::axpy(tmp, y, dt, k3);
                deriv(t + dt, tmp, k4, amp, ddet);
                detail::rk4_combine(y, dt, k1, k2, k3, k4);
                ++out.steps;
            }
            e_in_cum += amp2 * seq.sample_dt;
            ++sample_index;
            const double t_next = t_base + static_cast<double>(m + 1) * seq.sample_dt;
            record(amp, ddet, t_next);
        }
        t_base += static_cast<double>(seg_samples) * seq.sample_dt;
        samples_done += seg_samples;
    }
    (void)samples_done;

    // Final ensemble state.
    out.final_state = ens;
    for (std::size_t j = 0; j < n; ++j) {
        out.final_state.bins[j].u = 2.0 * y.sm[j].real();
        out.final_state.bins[j].v = -2.0 * y.sm[j].imag();
        out.final_state.bins[j].sz = linearized ? -p : y.sz[j];
    }

    // Energy budget, in photons.
    const double n_spins = ens.config.total_spins;
    EnergyBudget& b = out.budget;
    b.E_in = e_in_cum;
    b.E_refl = y.q_refl;
    b.E_cav = std::norm(y.a);
    if (linearized) {
        CompensatedSum spin;
        for (std::size_t j = 0; j < n; ++j) spin.add(w[j] * std::norm(y.sm[j]));
        b.E_spin = n_spins / p * spin.value();
    } else {
        CompensatedSum spin;
        for (std::size_t j = 0; j < n; ++j) spin.add(w[j] * (y.sz[j] + p));
        b.E_spin = n_spins * spin.value() / 2.0;
    }
    const double p_eff = p > 0.0 ? p : 1.0;
    b.E_dissipated = cav.kappa_int * y.q_cav + 0.5 * n_spins * gamma1 * y.q_g1 +
                     2.0 * n_spins / p_eff * gamma2 * y.q_g2;
    b.residual = b.E_in - (b.E_refl + b.E_cav + b.E_spin + b.E_dissipated);

    out.dt = dt;
    return out;
}

/// Budget accessor with the grid-consistency check.
inline EnergyBudget energy_budget(const IntegrationResult& result) {
    const TimeTrace& tr = result.trace;
    const std::size_t n = tr.t.size();
    if (tr.a_out.size() != n || tr.a_cav.size() != n || tr.dipole.size() != n ||
        tr.cum_in.size() != n || tr.cum_refl.size() != n)
        throw ConfigError("energy_budget: trace grids have mismatched lengths");
    return result.budget;
}

}  // namespace spinmem
