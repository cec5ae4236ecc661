#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace spinmem {

/// In-place iterative radix-2 FFT; data.size() must be a power of two.
inline void fft_pow2(std::vector<std::complex<double>>& data) {
    const std::size_t n = data.size();
    if (n < 2) return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

/// Strongest nonzero frequency of a real, uniformly sampled signal.
/// The mean is removed, the signal zero-padded for grid resolution, and the
/// magnitude peak refined by parabolic interpolation on log magnitude.
/// Returns the frequency in cycles per unit of dt; 0 if featureless.
inline double dominant_frequency(const std::vector<double>& samples, double dt) {
    const std::size_t n = samples.size();
    if (n < 4 || dt <= 0.0) return 0.0;
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(n);

    std::size_t m = 1;
    while (m < 8 * n) m <<= 1;
    std::vector<std::complex<double>> buf(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        // Hann window keeps leakage from swamping weak, slow oscillations.
        const double w =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n - 1));
        buf[i] = (samples[i] - mean) * w;
    }
    fft_pow2(buf);

    std::size_t peak = 0;
    double best = -1.0;
    for (std::size_t k = 1; k <= m / 2; ++k) {
        const double mag = std::abs(buf[k]);
        if (mag > best) {
            best = mag;
            peak = k;
        }
    }
    if (peak == 0 || best <= 0.0) return 0.0;

    double delta = 0.0;
    if (peak > 1 && peak < m / 2) {
        const double a = std::abs(buf[peak - 1]);
        const double b = std::abs(buf[peak]);
        const double c = std::abs(buf[peak + 1]);
        if (a > 0.0 && c > 0.0) {
            const double la = std::log(a), lb = std::log(b), lc = std::log(c);
            const double den = la - 2.0 * lb + lc;
            if (den < 0.0) delta = 0.5 * (la - lc) / den;
        }
    }
    return (static_cast<double>(peak) + delta) / (static_cast<double>(m) * dt);
}

}  // namespace spinmem
