// charfunc.hpp — Closed-form evolution of the exponential-ansatz
// characteristic function chi(xi, xi*) = exp(sum_jk C_{j,k} xi^j (-xi*)^k):
// free detector relaxation and the measurement-modified evolution of the
// reduced matrices rho_{m,n}, including the decoherence factor.

#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "zeno/detector.hpp"

namespace zeno::charfunc {

using Complex = std::complex<double>;

// Sparse map (j,k) -> C_{j,k}.  Entries absent from the map are zero.
// For physical detector states the coefficients obey the conjugation
// symmetry C_{k,j} = conj(C_{j,k}); with the (-xi*)^k sign convention no
// extra parity factor appears.
class CharCoeffs {
public:
    struct Entry {
        int j;
        int k;
        Complex value;
    };

    CharCoeffs() = default;

    static CharCoeffs thermal(double nbar) {
        CharCoeffs c;
        c.set(1, 1, Complex(nbar, 0.0));
        return c;
    }

    void set(int j, int k, Complex value);
    Complex get(int j, int k) const; // zero when absent

    const std::vector<Entry>& entries() const { return entries_; }
    bool obeys_conjugation_symmetry(double tol = 1e-12) const;

private:
    std::vector<Entry> entries_; // sorted by (j,k)
};

// Level pair (m,n) of the measured system, energies as angular frequencies.
struct LevelPair {
    int m = 0;
    int n = 0;
    double omega_m = 0.0;
    double omega_n = 0.0;

    double omega_mn() const { return omega_m - omega_n; }
};

// chi(xi) = exp(sum C_{j,k} xi^j (-xi*)^k)
Complex eval_char(const CharCoeffs& coeffs, Complex xi);

// Free relaxation of the coefficient map over a duration t:
//   C_{1,1}(t) = C_{1,1}(0) e^{-(gd-gu)t} + nbar (1 - e^{-(gd-gu)t})
//   C_{j,k}(t) = C_{j,k}(0) e^{i Omega (j-k) t}
//                e^{-(gamma/2)(j-k)^2 t - (1/2)(gd-gu)(j+k) t},  (j,k) != (1,1)
// The (1,1) entry is materialized even when absent initially.
CharCoeffs free_coeffs(const CharCoeffs& c0, double t,
                       const detector::DetectorParams& det);

// Closed-form coefficients of chi_{m,n}(xi, xi*; t) for a detector that
// starts in thermal equilibrium (C00 = C10 = C01 = 0, C11 = nbar).
// Returns the four entries {C00, C10, C01, C11}.
CharCoeffs measurement_coeffs(const LevelPair& pair, double lambda, double t,
                              const detector::DetectorParams& det);

// |exp(C00(t))| = exp(Re C00(t)): the suppression factor of the off-diagonal
// element rho_{m,n} relative to its initial magnitude.
double offdiag_suppression(const LevelPair& pair, double lambda, double t,
                           const detector::DetectorParams& det);

// Long-time decoherence rate, the negative real part of C00's linear term:
//   lambda^2 omega_mn^2 (1+2nbar) gamma_eff / (gamma_eff^2 + Omega^2)
double decoherence_rate(const LevelPair& pair, double lambda,
                        const detector::DetectorParams& det);

} // namespace zeno::charfunc
