// spectral.hpp — The measurement-perturbed payload: closed-form two-time
// characteristic function, jump probability by quadrature over the
// (t2 <= t1) triangle, its fast-dissipation reduction, measurement-modified
// spectral line shapes, reservoir-spectrum convolution, and the large-lambda
// asymptotic decay rate with its temperature scaling.

#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "zeno/detector.hpp"
#include "zeno/system.hpp"

namespace zeno::spectral {

using Complex = std::complex<double>;

struct QuadratureControls {
    double rel_tol = 1e-8;
    std::size_t max_subdivisions = 20000;
    int omega_points = 400; // minimum line-shape grid resolution
};

// chi_{m alpha, n alpha'}(0, 0; t1, t2) for a jump chain that spends
// [0, t2] in the diagonal pair (seg1, seg1) and [t2, t1] in the pair (m, n);
// omega_phase is the full pair frequency including any H1 offset.
Complex chi_two_time_kernel(double omega_m, double omega_n, double omega_seg1,
                            double omega_phase, double t1, double t2, double lambda,
                            const detector::DetectorParams& det);

// chi_{i alpha, f alpha_1}(0, 0; t1, t2): the five-term closed form.
Complex chi_two_time(double omega_i, double omega_f, double t1, double t2,
                     double lambda, const detector::DetectorParams& det,
                     double omega_ia_fa1);

struct JumpResult {
    double probability = 0.0;
    double imag_residual = 0.0;   // |Im| of the quadrature result
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

// |V_if|^2 ∬_{0<=t2<=t1<=t} [chi_if + chi_fi](0,0;t1,t2) dt2 dt1 by nested
// adaptive quadrature; both chi orientations are evaluated independently and
// the imaginary residue of their sum is reported, not assumed zero.
JumpResult jump_probability_general_ex(const sys::MeasuredSystemSpec& spec,
                                       const detector::DetectorParams& det,
                                       const sys::StateRef& i_state,
                                       const sys::StateRef& f_state, double t,
                                       const QuadratureControls& q = {});
double jump_probability_general(const sys::MeasuredSystemSpec& spec,
                                const detector::DetectorParams& det,
                                const sys::StateRef& i_state,
                                const sys::StateRef& f_state, double t,
                                const QuadratureControls& q = {});

// Fast-dissipation gate: Omega <= gate_ratio * gamma_eff (default 0.1).
bool fast_dissipation_gate(const detector::DetectorParams& det,
                           double gate_ratio = 0.1);

// 2t|V|^2 Re ∫_0^t (1 - u/t) e^{i w_{fa1,ia} u} exp(-(1+2nbar) lambda^2
// w_if^2 / g (u + (e^{-g u} - 1)/g)) du.  Refuses outside the gate.
double jump_probability_fast_dissipation(const sys::MeasuredSystemSpec& spec,
                                         const detector::DetectorParams& det,
                                         const sys::StateRef& i_state,
                                         const sys::StateRef& f_state, double t,
                                         const QuadratureControls& q = {},
                                         double gate_ratio = 0.1);

struct LineShape {
    std::vector<double> omega_grid;
    std::vector<double> p_values;
    double t = 0.0;
    // metadata
    double lambda = 0.0;
    double gamma_eff = 0.0;
    double nbar = 0.0;
    double omega_if = 0.0;
    double mass_captured = 0.0; // trapezoid integral over the grid
    double min_value = 0.0;
    bool narrow_grid_warning = false;  // captured mass < 0.99
    bool negative_lobe_warning = false; // min P < -1e-3
};

// P(omega) sampled on a caller-supplied strictly increasing grid.
LineShape line_shape(double omega_i, double omega_f,
                     const detector::DetectorParams& det, double lambda, double t,
                     const std::vector<double>& omega_grid,
                     const QuadratureControls& q = {}, double gate_ratio = 0.1);

// Auto-sized grid: centered at omega_if, half-width
// max(6 lambda |w_if| sqrt(1+2nbar), 20/t), doubled until the captured mass
// reaches 0.999.
LineShape auto_line_shape(double omega_i, double omega_f,
                          const detector::DetectorParams& det, double lambda,
                          double t, const QuadratureControls& q = {},
                          double gate_ratio = 0.1);

// Reservoir spectrum G(omega): either discrete lines (omega_k, weight_k)
// with weights |V_k|^2, or a sampled nonnegative density.
struct SpectralDensity {
    enum class Kind { Discrete, Sampled } kind = Kind::Discrete;
    std::vector<std::pair<double, double>> lines; // discrete
    std::vector<double> omega_grid;               // sampled
    std::vector<double> values;                   // sampled

    static SpectralDensity discrete(std::vector<std::pair<double, double>> lines);
    static SpectralDensity sampled(std::vector<double> omega_grid,
                                   std::vector<double> values);
    void validate() const;
};

// W = prefactor * 2 pi t ∫ G(omega) P(omega) d omega.  Discrete G sums
// exactly (each line re-evaluates the P integral at its frequency); sampled
// G uses the trapezoid rule on the overlap grid.
double convolve_spectrum(const SpectralDensity& g, const LineShape& line, double t,
                         double prefactor = 1.0, const QuadratureControls& q = {});

// R = 2 |V_if|^2 / (lambda |w_if|) sqrt(pi / (2 (1 + 2 nbar))).
double asymptotic_rate(const sys::MeasuredSystemSpec& spec,
                       const detector::DetectorParams& det,
                       const sys::StateRef& i_state, const sys::StateRef& f_state);

struct RateScanRow {
    double nbar = 0.0;
    double rate = 0.0;
    double invariant = 0.0; // R * lambda * sqrt(1 + 2 nbar)
};

// Asymptotic rate across detector occupations; the template supplies omega
// and the bath rates, nbar is swept.
std::vector<RateScanRow> rate_temperature_scan(const sys::MeasuredSystemSpec& spec,
                                               const detector::DetectorParams& det_template,
                                               const sys::StateRef& i_state,
                                               const sys::StateRef& f_state,
                                               const std::vector<double>& nbar_list);

} // namespace zeno::spectral
