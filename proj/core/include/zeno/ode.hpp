// ode.hpp — Adaptive Dormand-Prince 5(4) integration of dense complex
// matrix ODEs dX/dt = F(X, t).  The per-step hook runs after every accepted
// step and may adjust the state (the Lindblad propagator uses it to restore
// Hermiticity and to monitor trace drift and truncation tails).

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Dense>

#include "zeno/errors.hpp"

namespace zeno::ode {

using Matrix = Eigen::MatrixXcd;

struct StepControls {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::uint64_t max_steps = 4'000'000;
};

struct IntegrationStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t rhs_evaluations = 0;
};

namespace detail {

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Mixed absolute/relative max-norm of the embedded error estimate.
inline double error_ratio(const Matrix& err, const Matrix& x_old, const Matrix& x_new,
                          double atol, double rtol) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < err.cols(); ++c)
        for (Eigen::Index r = 0; r < err.rows(); ++r) {
            const double scale =
                atol + rtol * std::max(std::abs(x_old(r, c)), std::abs(x_new(r, c)));
            const double ratio = std::abs(err(r, c)) / scale;
            if (ratio > worst) worst = ratio;
        }
    return worst;
}

} // namespace detail

// Integrates x from t0 to t1 in place.  Rhs: void(const Matrix&, double, Matrix&).
// Hook: void(Matrix&, double), called after each accepted step.
template <class Rhs, class Hook>
IntegrationStats integrate(Rhs&& rhs, Matrix& x, double t0, double t1,
                           const StepControls& ctrl, Hook&& hook) {
    IntegrationStats stats;
    if (t1 < t0) throw ValidationError("ode::integrate: t1 must be >= t0");
    if (t1 == t0) return stats;
    if (!(ctrl.rel_tol > 0.0 && ctrl.rel_tol < 1.0) ||
        !(ctrl.abs_tol > 0.0 && ctrl.abs_tol < 1.0))
        throw ValidationError("ode::integrate: tolerances must lie in (0, 1)");

    // Dormand-Prince 5(4) tableau.
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    Matrix k1(x.rows(), x.cols()), k2(x.rows(), x.cols()), k3(x.rows(), x.cols()),
        k4(x.rows(), x.cols()), k5(x.rows(), x.cols()), k6(x.rows(), x.cols()),
        k7(x.rows(), x.cols());
    Matrix stage(x.rows(), x.cols()), x_new(x.rows(), x.cols()), err(x.rows(), x.cols());

    double t = t0;
    rhs(x, t, k1);
    ++stats.rhs_evaluations;

    // Initial step from the magnitude of the right-hand side.
    double h = 0.01 * (detail::max_abs(x) + ctrl.abs_tol) /
               (detail::max_abs(k1) + 1e-300);
    h = std::min({h, t1 - t0, ctrl.max_step});
    if (!(h > 0.0)) h = std::min(t1 - t0, ctrl.max_step);

    while (t < t1) {
        if (stats.accepted + stats.rejected >= ctrl.max_steps)
            throw IntegrationError("ode::integrate: step budget exhausted", t);
        double h_try = std::min(h, ctrl.max_step);
        bool final_step = false;
        if (t + h_try >= t1) {
            h_try = t1 - t;
            final_step = true;
        }
        if (!final_step &&
            h_try < 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0))
            throw IntegrationError("ode::integrate: step-size underflow at t = " +
                                       std::to_string(t),
                                   t);

        stage = x + h_try * (a21 * k1);
        rhs(stage, t + c2 * h_try, k2);
        stage = x + h_try * (a31 * k1 + a32 * k2);
        rhs(stage, t + c3 * h_try, k3);
        stage = x + h_try * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(stage, t + c4 * h_try, k4);
        stage = x + h_try * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(stage, t + c5 * h_try, k5);
        stage = x + h_try * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(stage, t + h_try, k6);
        x_new = x + h_try * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(x_new, t + h_try, k7);
        stats.rhs_evaluations += 6;

        err = h_try * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double ratio = detail::error_ratio(err, x, x_new, ctrl.abs_tol, ctrl.rel_tol);

        if (ratio <= 1.0) {
            t = final_step ? t1 : t + h_try;
            x.swap(x_new);
            hook(x, t);
            ++stats.accepted;
            const double grow = ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
            h = h_try * std::clamp(grow, 0.2, 5.0);
            if (t < t1) {
                rhs(x, t, k1);
                ++stats.rhs_evaluations;
            }
        } else {
            ++stats.rejected;
            h = h_try * std::clamp(0.9 * std::pow(ratio, -0.2), 0.1, 0.9);
            if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0))
                throw IntegrationError("ode::integrate: step-size underflow at t = " +
                                           std::to_string(t),
                                       t);
        }
    }
    return stats;
}

template <class Rhs>
IntegrationStats integrate(Rhs&& rhs, Matrix& x, double t0, double t1,
                           const StepControls& ctrl) {
    return integrate(std::forward<Rhs>(rhs), x, t0, t1, ctrl, [](Matrix&, double) {});
}

} // namespace zeno::ode
