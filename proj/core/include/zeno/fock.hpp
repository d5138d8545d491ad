// fock.hpp — Brute-force ground truth on a truncated Fock space: dense
// density matrices for the detector (optionally tensored with the measured
// system), direct Lindblad integration, and characteristic-function
// extraction.  The tensor index convention is system-major: full index
// r = s * dim_detector + a, so detector operators act block-diagonally.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "zeno/detector.hpp"
#include "zeno/errors.hpp"
#include "zeno/ode.hpp"

namespace zeno::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Dense matrices of the truncated detector mode: b, b†, n = b†b, q = b† + b.
struct ModeOperators {
    int dim = 0;
    Matrix annihilate;
    Matrix create;
    Matrix number;
    Matrix coordinate;
};

// <k-1| b |k> = sqrt(k); everything else follows.
ModeOperators build_mode_ops(int dim);

// Density matrix on the (system ⊗ detector) product space; dim_system = 1
// for detector-only states.
struct FockDensityMatrix {
    int dim_detector = 0;
    int dim_system = 1;
    Matrix data;

    int dim_full() const { return dim_detector * dim_system; }
    Complex trace() const { return data.trace(); }
};

// Smallest truncation with geometric tail mass below tol.
int thermal_dim_required(double nbar, double tail_tol = 1e-10);

// Truncated, renormalized thermal state diag((nbar/(nbar+1))^k).  Errors
// when the truncated tail mass is not below tail_tol, naming the dimension
// that would suffice.
FockDensityMatrix thermal_state(double nbar, int dim, double tail_tol = 1e-10);

// Displacement operator D(alpha) = exp(alpha b† - alpha* b).
Matrix displacement_operator(Complex alpha, int dim);

// Squeeze operator S(z) = exp((z* b b - z b† b†)/2).
Matrix squeeze_operator(Complex zeta, int dim);

// Lindblad generator data.  The Hamiltonian lives on the full product
// space; the dissipator rates act on the detector factor.
struct LindbladSpec {
    Matrix hamiltonian; // Hermitian, dim_full x dim_full
    double gamma_phase = 0.0;
    double gamma_up = 0.0;
    double gamma_down = 0.0;
    int dim_system = 1;
    int dim_detector = 0;

    static LindbladSpec detector_only(const detector::DetectorParams& det, int dim);
    void validate() const; // shape and Hermiticity (1e-12)
};

struct IntegratorControls {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();

    ode::StepControls to_step_controls() const;
};

// Applies the detector dissipator
//   (g/2)(2 n X n - n^2 X - X n^2) + (gu/2)(2 b† X b - (n+1)X - X(n+1))
//   + (gd/2)(2 b X b† - nX - Xn)
// structurally (no dense products), accumulating into out.
void add_detector_dissipator(const Matrix& x, double gamma_phase, double gamma_up,
                             double gamma_down, int dim_system, int dim_detector,
                             Matrix& out);

// Adjoint of the dissipator above, for backward (Heisenberg-picture)
// propagation of observables.
void add_detector_dissipator_adjoint(const Matrix& x, double gamma_phase,
                                     double gamma_up, double gamma_down,
                                     int dim_system, int dim_detector, Matrix& out);

// Full right-hand side -i[H, rho] + dissipator.
Matrix lindblad_rhs(const FockDensityMatrix& rho, const LindbladSpec& spec);

struct PropagationReport {
    double max_trace_drift = 0.0; // max |Tr rho(t) - Tr rho(0)|
    double max_tail = 0.0;        // max over steps of top-4 |diagonal| sum
    std::uint64_t steps = 0;
};

// rho(t) by adaptive integration; Hermiticity restored after each accepted
// step, trace drift and detector-tail mass monitored.
FockDensityMatrix propagate(const FockDensityMatrix& rho0, const LindbladSpec& spec,
                            double t, const IntegratorControls& controls,
                            PropagationReport* report = nullptr);

// Normally ordered characteristic function Tr{rho e^{xi b†} e^{-xi* b}},
// evaluated as a double power series with a 1e-14 stopping rule.  Requires
// a detector-only state.
Complex char_function(const FockDensityMatrix& rho, Complex xi);

// Trace out the system factor.
FockDensityMatrix partial_trace_system(const FockDensityMatrix& rho);

// Tr{(I ⊗ n) rho}, real part.
double expectation_number(const FockDensityMatrix& rho);

// Sum of |diagonal| over the top `levels` detector levels (traced over the
// system factor); the truncation-tail metric used by the audits.
double detector_tail_metric(const Matrix& x, int dim_system, int dim_detector,
                            int levels = 4);

} // namespace zeno::fock
