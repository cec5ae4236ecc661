#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace spinmem {

/// Neumaier-compensated accumulator. Summation order is part of the
/// contract: callers feed terms in a fixed order so that results do not
/// depend on how work was partitioned.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> terms) {
    CompensatedSum s;
    for (double x : terms) s.add(x);
    return s.value();
}

class CompensatedComplexSum {
public:
    void add(std::complex<double> z) {
        re_.add(z.real());
        im_.add(z.imag());
    }
    std::complex<double> value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

}  // namespace spinmem
