#include "zeno/charfunc.hpp"

#include <algorithm>
#include <cmath>

namespace zeno::charfunc {

namespace {

// Integer power with the 0^0 = 1 convention used by the ansatz.
Complex ipow(Complex base, int n) {
    Complex r(1.0, 0.0);
    for (int i = 0; i < n; ++i) r *= base;
    return r;
}

} // namespace

void CharCoeffs::set(int j, int k, Complex value) {
    if (j < 0 || k < 0)
        throw ValidationError("CharCoeffs: indices must be nonnegative");
    auto pos = std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(j, k),
                                [](const Entry& e, const std::pair<int, int>& jk) {
                                    return std::make_pair(e.j, e.k) < jk;
                                });
    if (pos != entries_.end() && pos->j == j && pos->k == k)
        pos->value = value;
    else
        entries_.insert(pos, Entry{j, k, value});
}

Complex CharCoeffs::get(int j, int k) const {
    for (const Entry& e : entries_)
        if (e.j == j && e.k == k) return e.value;
    return Complex(0.0, 0.0);
}

bool CharCoeffs::obeys_conjugation_symmetry(double tol) const {
    for (const Entry& e : entries_) {
        Complex mirror = get(e.k, e.j);
        if (std::abs(mirror - std::conj(e.value)) > tol) return false;
    }
    return true;
}

Complex eval_char(const CharCoeffs& coeffs, Complex xi) {
    Complex exponent(0.0, 0.0);
    const Complex minus_xi_conj = -std::conj(xi);
    for (const auto& e : coeffs.entries())
        exponent += e.value * ipow(xi, e.j) * ipow(minus_xi_conj, e.k);
    return std::exp(exponent);
}

CharCoeffs free_coeffs(const CharCoeffs& c0, double t,
                       const detector::DetectorParams& det) {
    if (t < 0.0) throw ValidationError("free_coeffs: t must be nonnegative");

    const double gnet = det.gamma_net(); // gamma_down - gamma_up
    const double relax = std::exp(-gnet * t);

    CharCoeffs out;
    bool saw_c11 = false;
    for (const auto& e : c0.entries()) {
        if (e.j == 1 && e.k == 1) {
            out.set(1, 1, e.value * relax + det.nbar * (1.0 - relax));
            saw_c11 = true;
            continue;
        }
        const int d = e.j - e.k;
        const int s = e.j + e.k;
        const Complex factor =
            std::exp(Complex(-0.5 * det.gamma_phase * d * d * t - 0.5 * gnet * s * t,
                             det.omega * d * t));
        out.set(e.j, e.k, e.value * factor);
    }
    if (!saw_c11) out.set(1, 1, Complex(det.nbar * (1.0 - relax), 0.0));
    return out;
}

CharCoeffs measurement_coeffs(const LevelPair& pair, double lambda, double t,
                              const detector::DetectorParams& det) {
    if (t < 0.0) throw ValidationError("measurement_coeffs: t must be nonnegative");
    const double geff = det.gamma_eff;
    if (!(geff > 0.0)) throw ValidationError("measurement_coeffs: gamma_eff must be positive");

    const double nbar = det.nbar;
    const double wm = pair.omega_m;
    const double wn = pair.omega_n;
    const double wmn = pair.omega_mn();
    const Complex i(0.0, 1.0);
    const Complex gm = Complex(geff, -det.omega); // gamma_eff - i Omega
    const Complex gp = Complex(geff, det.omega);  // gamma_eff + i Omega
    const Complex em = std::exp(-gm * t);         // e^{(i Omega - gamma_eff) t}
    const Complex ep = std::exp(-gp * t);         // e^{-(i Omega + gamma_eff) t}

    CharCoeffs c;
    c.set(1, 1, Complex(nbar, 0.0));
    c.set(1, 0, i * lambda * (wn - wmn * nbar) / gm * (1.0 - em));
    c.set(0, 1, -i * lambda * (wm + wmn * nbar) / gp * (1.0 - ep));
    c.set(0, 0, -i * wmn * t
                    + lambda * lambda * wmn * (wn - wmn * nbar) / gm * (t + (em - 1.0) / gm)
                    - lambda * lambda * wmn * (wm + wmn * nbar) / gp * (t + (ep - 1.0) / gp));
    return c;
}

double offdiag_suppression(const LevelPair& pair, double lambda, double t,
                           const detector::DetectorParams& det) {
    return std::exp(measurement_coeffs(pair, lambda, t, det).get(0, 0).real());
}

double decoherence_rate(const LevelPair& pair, double lambda,
                        const detector::DetectorParams& det) {
    const double wmn = pair.omega_mn();
    const double geff = det.gamma_eff;
    return lambda * lambda * wmn * wmn * (1.0 + 2.0 * det.nbar) * geff /
           (geff * geff + det.omega * det.omega);
}

} // namespace zeno::charfunc
