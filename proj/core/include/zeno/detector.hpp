// detector.hpp — Parameter algebra for the detector oscillator: thermal
// occupation, detailed balance, effective damping, thermal characteristic
// function.  Natural units hbar = k_B = 1 throughout; every energy is an
// angular frequency.

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>

#include "zeno/errors.hpp"

namespace zeno::detector {

// Bose-Einstein occupation of a mode of frequency omega at temperature T.
// T = 0 maps to 0 exactly; T = infinity maps to +infinity (callers that
// accept infinite temperature must supply their own occupation cap).
inline double nbar_of_temperature(double omega, double temperature) {
    if (!(omega > 0.0))
        throw ValidationError("nbar_of_temperature: omega must be positive");
    if (temperature < 0.0)
        throw ValidationError("nbar_of_temperature: temperature must be nonnegative");
    if (temperature == 0.0) return 0.0;
    if (std::isinf(temperature)) return std::numeric_limits<double>::infinity();
    return 1.0 / std::expm1(omega / temperature);
}

// Detailed-balance excitation rate: gamma_up = gamma_down * exp(-omega/T),
// equivalently gamma_down * nbar/(nbar + 1).
inline double gamma_up_from_detailed_balance(double gamma_down, double omega,
                                             double temperature) {
    if (gamma_down < 0.0)
        throw ValidationError("gamma_up_from_detailed_balance: gamma_down must be nonnegative");
    if (!(omega > 0.0))
        throw ValidationError("gamma_up_from_detailed_balance: omega must be positive");
    if (temperature < 0.0)
        throw ValidationError("gamma_up_from_detailed_balance: temperature must be nonnegative");
    if (temperature == 0.0) return 0.0;
    return gamma_down * std::exp(-omega / temperature);
}

inline double gamma_up_from_nbar(double gamma_down, double nbar) {
    if (gamma_down < 0.0)
        throw ValidationError("gamma_up_from_nbar: gamma_down must be nonnegative");
    if (nbar < 0.0)
        throw ValidationError("gamma_up_from_nbar: nbar must be nonnegative");
    return gamma_down * nbar / (nbar + 1.0);
}

// Normally ordered thermal characteristic function chi_T = exp(-|xi|^2 nbar).
inline std::complex<double> thermal_char(std::complex<double> xi, double nbar) {
    return std::exp(std::complex<double>(-std::norm(xi) * nbar, 0.0));
}

// Detector parameters.  nbar is the canonical stored field; construction
// from a temperature is a convenience that converts immediately.  All
// derived rates are filled in at construction and the detailed-balance and
// positive-gamma_eff invariants are enforced there.
struct DetectorParams {
    double omega       = 0.0; // oscillator frequency Omega
    double gamma_phase = 0.0; // phase-damping rate gamma
    double gamma_down  = 0.0; // de-excitation rate
    double nbar        = 0.0; // thermal occupation (canonical)
    double gamma_up    = 0.0; // derived: detailed balance
    double gamma_eff   = 0.0; // derived: (gamma + gamma_down - gamma_up)/2

    static DetectorParams from_nbar(double omega, double gamma_phase,
                                    double gamma_down, double nbar) {
        if (!(omega > 0.0))
            throw ValidationError("DetectorParams: omega must be positive");
        if (gamma_phase < 0.0 || gamma_down < 0.0)
            throw ValidationError("DetectorParams: damping rates must be nonnegative");
        if (!(nbar >= 0.0) || !std::isfinite(nbar))
            throw ValidationError("DetectorParams: nbar must be finite and nonnegative");
        DetectorParams p;
        p.omega = omega;
        p.gamma_phase = gamma_phase;
        p.gamma_down = gamma_down;
        p.nbar = nbar;
        p.gamma_up = gamma_up_from_nbar(gamma_down, nbar);
        p.gamma_eff = 0.5 * (gamma_phase + gamma_down - p.gamma_up);
        if (!(p.gamma_eff > 0.0))
            throw ValidationError(
                "DetectorParams: gamma_eff must be positive (undamped detector "
                "is outside the analytic layer)");
        return p;
    }

    // Infinite temperature has no finite occupation; a cap must be supplied
    // by the caller in that case, never defaulted internally.
    static DetectorParams from_temperature(double omega, double gamma_phase,
                                           double gamma_down, double temperature,
                                           std::optional<double> nbar_cap_for_infinite_T = std::nullopt) {
        double nbar = nbar_of_temperature(omega, temperature);
        if (std::isinf(nbar)) {
            if (!nbar_cap_for_infinite_T)
                throw ValidationError(
                    "DetectorParams: infinite temperature requires an explicit nbar cap");
            nbar = *nbar_cap_for_infinite_T;
        }
        return from_nbar(omega, gamma_phase, gamma_down, nbar);
    }

    // Net relaxation rate of the occupation towards nbar.
    double gamma_net() const { return gamma_down - gamma_up; }
};

// (gamma + gamma_down - gamma_up)/2; rejects nonpositive results.
inline double gamma_eff(const DetectorParams& p) {
    double g = 0.5 * (p.gamma_phase + p.gamma_down - p.gamma_up);
    if (!(g > 0.0))
        throw ValidationError("gamma_eff: result must be positive");
    return g;
}

} // namespace zeno::detector
