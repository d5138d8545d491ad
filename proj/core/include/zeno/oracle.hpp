// oracle.hpp — Oracle-side machinery built on the truncated-Fock integrator:
// the reduced superoperators S0_{m alpha, n alpha'} acting on the detector
// factor, their two-segment composition, the fully coupled jump-probability
// integrations (nonperturbative and second-order), and the truncation audit
// that picks the Fock dimension.

#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <utility>

#include "zeno/detector.hpp"
#include "zeno/fock.hpp"
#include "zeno/system.hpp"

namespace zeno::fock {

// Generator of the reduced-pair flow on the detector space,
//   dX/dt = -i w_phase X - i Omega [n, X] - i lambda (w_m q X - w_n X q) + L_D[X].
// w_phase carries the full pair frequency (H0 and H1 parts); the coupling
// frequencies w_m, w_n come from H0 alone.
struct PairGenerator {
    double omega_phase = 0.0;
    double omega_m = 0.0;
    double omega_n = 0.0;
    double lambda = 0.0;
    detector::DetectorParams det;
    int dim = 0;

    Matrix apply(const Matrix& x) const;
};

// Propagates a detector-space operator under a pair generator.  The state
// is generally non-Hermitian, so no symmetrization is applied; the report
// still tracks the truncation tail.
Matrix propagate_pair(const Matrix& x0, const PairGenerator& gen, double t,
                      const IntegratorControls& controls,
                      PropagationReport* report = nullptr);

// Doubling truncation audit: starting from dim0, runs trial(dim) (which
// returns the worst top-4-level tail metric seen) and doubles until the
// metric stays below tail_tol.  Throws TruncationError past dim_cap.
int audited_dimension(int dim0, double tail_tol, int dim_cap,
                      const std::function<double(int)>& trial);

// Initial-dimension heuristic ceil(8(nbar+1) + 4 lambda max|w| / gamma_eff).
int initial_pair_dim(const detector::DetectorParams& det, double lambda,
                     double max_abs_omega);

// Audited dimension for pair propagations out to t_max.
int audit_pair_dim(double omega_m, double omega_n, double lambda, double t_max,
                   const detector::DetectorParams& det,
                   const IntegratorControls& controls);

// chi_{m,n}(xi, xi*; t) for a detector started in thermal equilibrium,
// integrated on the truncated Fock space (the oracle counterpart of the
// closed-form coefficient solutions).  dim <= 0 requests the audit.
Complex oracle_measurement_char(double omega_m, double omega_n, double lambda,
                                double t, const detector::DetectorParams& det,
                                Complex xi, const IntegratorControls& controls,
                                int dim = 0);

// Tr{ S0_{m,n}(t1 - t2) S0_{s,s}(t2) rho_T } with an arbitrary phase
// frequency on the (m,n) segment: the superoperator-composition oracle for
// the two-time characteristic function.  dim <= 0 requests the audit.
Complex oracle_chi_two_time(double omega_m, double omega_n, double omega_seg1,
                            double omega_phase, double t1, double t2, double lambda,
                            const detector::DetectorParams& det,
                            const IntegratorControls& controls, int dim = 0);

// Full-space unperturbed Lindblad spec (V = 0) for a measured system
// coupled to the detector: H = H_S + H_D + lambda q H_0.
LindbladSpec coupled_spec(const sys::MeasuredSystemSpec& system,
                          const detector::DetectorParams& det, double lambda,
                          int dim_detector, bool include_v);

struct JumpOracleResult {
    double probability = 0.0;
    int dim_detector = 0;
    double max_tail = 0.0;
};

// Nonperturbative jump probability: propagates the full coupled master
// equation with V inside the Hamiltonian and reads Tr{|f><f| rho(t)}.
JumpOracleResult jump_probability_direct(const sys::MeasuredSystemSpec& system,
                                         const detector::DetectorParams& det,
                                         double lambda, const sys::StateRef& i_state,
                                         const sys::StateRef& f_state, double t,
                                         const IntegratorControls& controls,
                                         int dim = 0);

// Second-order jump probability: the double time integral of the
// second-order superoperator expansion, evaluated by composing V = 0
// propagations with commutator insertions of V.  Gauss-Legendre tensor
// quadrature over the (t2 <= t1) triangle with the final segment applied
// through one adjoint (Heisenberg) sweep.
JumpOracleResult jump_probability_second_order(const sys::MeasuredSystemSpec& system,
                                               const detector::DetectorParams& det,
                                               double lambda,
                                               const sys::StateRef& i_state,
                                               const sys::StateRef& f_state, double t,
                                               const IntegratorControls& controls,
                                               int dim = 0, int s_nodes = 20,
                                               int u_nodes = 20);

// The two structurally vanishing terms of the second-order expansion
// (both V insertions on the same side), evaluated at one (t1, t2) point.
std::pair<Complex, Complex> discarded_jump_terms(
    const sys::MeasuredSystemSpec& system, const detector::DetectorParams& det,
    double lambda, const sys::StateRef& i_state, const sys::StateRef& f_state,
    double t, double t1, double t2, const IntegratorControls& controls, int dim = 0);

} // namespace zeno::fock
