#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace spinmem {

struct FitOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10;  // relative step size below which we stop
    double jacobian_step = 1e-6;    // relative central-difference step
    std::vector<double> lower;      // optional box bounds, empty = unbounded
    std::vector<double> upper;
};

struct FitResult {
    std::vector<double> params;
    std::vector<double> std_errors;  // from the linearised covariance
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt least squares with a numeric Jacobian.
/// residuals(p) returns one entry per data point; the minimised objective is
/// the sum of squares.  Box bounds, when given, are enforced by projection.
inline FitResult fit_least_squares(
    const std::function<std::vector<double>(const std::vector<double>&)>& residuals,
    std::vector<double> params, const FitOptions& opt = {}) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    const std::size_t np = params.size();
    auto project = [&](std::vector<double>& p) {
        for (std::size_t j = 0; j < np; ++j) {
            if (j < opt.lower.size() && p[j] < opt.lower[j]) p[j] = opt.lower[j];
            if (j < opt.upper.size() && p[j] > opt.upper[j]) p[j] = opt.upper[j];
        }
    };
    project(params);

    auto eval = [&](const std::vector<double>& p) {
        const std::vector<double> r = residuals(p);
        VectorXd v(static_cast<Eigen::Index>(r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) v[static_cast<Eigen::Index>(i)] = r[i];
        return v;
    };

    VectorXd r = eval(params);
    const std::size_t nr = static_cast<std::size_t>(r.size());
    double chi2 = r.squaredNorm();

    FitResult out;
    out.params = params;
    out.chi2 = chi2;
    if (np == 0 || nr == 0) {
        out.converged = true;
        return out;
    }

    MatrixXd jac(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(np));
    auto fill_jacobian = [&](const std::vector<double>& p) {
        for (std::size_t j = 0; j < np; ++j) {
            const double h = opt.jacobian_step * std::max(std::abs(p[j]), 1e-12);
            std::vector<double> lo = p, hi = p;
            hi[j] += h;
            lo[j] -= h;
            const VectorXd rh = eval(hi);
            const VectorXd rl = eval(lo);
            jac.col(static_cast<Eigen::Index>(j)) = (rh - rl) / (2.0 * h);
        }
    };

    double lambda = 1e-3;
    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        fill_jacobian(params);
        const MatrixXd jtj = jac.transpose() * jac;
        const VectorXd jtr = jac.transpose() * r;

        bool stepped = false;
        for (int raise = 0; raise < 40; ++raise) {
            MatrixXd a = jtj;
            for (std::size_t j = 0; j < np; ++j) {
                auto k = static_cast<Eigen::Index>(j);
                a(k, k) += lambda * std::max(jtj(k, k), 1e-30);
            }
            const VectorXd delta = a.ldlt().solve(-jtr);
            std::vector<double> trial = params;
            for (std::size_t j = 0; j < np; ++j)
                trial[j] += delta[static_cast<Eigen::Index>(j)];
            project(trial);

            const VectorXd rt = eval(trial);
            const double trial_chi2 = rt.squaredNorm();
            if (trial_chi2 <= chi2) {
                double rel = 0.0;
                for (std::size_t j = 0; j < np; ++j) {
                    const double scale = std::max(std::abs(params[j]), 1e-30);
                    rel = std::max(rel, std::abs(trial[j] - params[j]) / scale);
                }
                params = trial;
                r = rt;
                chi2 = trial_chi2;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (rel < opt.step_tolerance) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // No damping level improved chi2: treat the point as a minimum.
            out.converged = true;
        }
        if (out.converged) break;
    }

    out.params = params;
    out.chi2 = chi2;
    out.std_errors.assign(np, 0.0);
    if (nr > np) {
        fill_jacobian(params);
        const MatrixXd jtj = jac.transpose() * jac;
        const double dof_var = chi2 / static_cast<double>(nr - np);
        const MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse() * dof_var;
        for (std::size_t j = 0; j < np; ++j) {
            const double v = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
            out.std_errors[j] = v > 0.0 ? std::sqrt(v) : 0.0;
        }
    }
    return out;
}

}  // namespace spinmem
