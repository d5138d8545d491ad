#include "zeno/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "zeno/quadrature.hpp"

namespace zeno::spectral {

Complex chi_two_time_kernel(double omega_m, double omega_n, double omega_seg1,
                            double omega_phase, double t1, double t2, double lambda,
                            const detector::DetectorParams& det) {
    if (!(t2 >= 0.0 && t1 >= t2))
        throw ValidationError("chi_two_time_kernel: need 0 <= t2 <= t1");
    const double geff = det.gamma_eff;
    const double nbar = det.nbar;
    const double wmn = omega_m - omega_n;
    const double tau = t1 - t2;
    const Complex i(0.0, 1.0);
    const Complex gm(geff, -det.omega); // gamma_eff - i Omega
    const Complex gp(geff, det.omega);  // gamma_eff + i Omega
    const Complex em_tau = std::exp(-gm * tau);
    const Complex ep_tau = std::exp(-gp * tau);
    const Complex em_t2 = std::exp(-gm * t2);
    const Complex ep_t2 = std::exp(-gp * t2);
    const double l2 = lambda * lambda;

    Complex exponent = -i * omega_phase * tau;
    exponent += l2 * wmn * (omega_n - wmn * nbar) / gm * (tau + (em_tau - 1.0) / gm);
    exponent -= l2 * wmn * (omega_m + wmn * nbar) / gp * (tau + (ep_tau - 1.0) / gp);
    exponent += l2 * wmn * omega_seg1 / (gm * gm) * (1.0 - em_t2) * (1.0 - em_tau);
    exponent -= l2 * wmn * omega_seg1 / (gp * gp) * (1.0 - ep_t2) * (1.0 - ep_tau);
    return std::exp(exponent);
}

Complex chi_two_time(double omega_i, double omega_f, double t1, double t2,
                     double lambda, const detector::DetectorParams& det,
                     double omega_ia_fa1) {
    return chi_two_time_kernel(omega_i, omega_f, omega_i, omega_ia_fa1, t1, t2,
                               lambda, det);
}

JumpResult jump_probability_general_ex(const sys::MeasuredSystemSpec& spec,
                                       const detector::DetectorParams& det,
                                       const sys::StateRef& i_state,
                                       const sys::StateRef& f_state, double t,
                                       const QuadratureControls& q) {
    spec.validate();
    if (!(t > 0.0)) throw ValidationError("jump_probability_general: t must be positive");
    if (i_state == f_state)
        throw ValidationError("jump_probability_general: initial and final states equal");

    const double wi = spec.omega_of_level(i_state.level);
    const double wf = spec.omega_of_level(f_state.level);
    const double wphase = spec.omega_ia_fa1(i_state, f_state);
    const double lambda = spec.lambda;
    const double v2 = std::norm(spec.v(i_state, f_state));

    JumpResult out;
    if (v2 == 0.0) return out;

    // chi depends on t2 as well as t1 - t2, so the triangle is integrated
    // as nested 1D rules rather than reduced to a convolution.
    const double inner_rel = q.rel_tol / 8.0;
    const double inner_abs = q.rel_tol / (16.0 * (1.0 + t));
    std::size_t evals = 0;
    auto inner = [&](double t1) {
        auto integrand = [&](double t2) {
            ++evals;
            const Complex chi_if =
                chi_two_time_kernel(wi, wf, wi, wphase, t1, t2, lambda, det);
            const Complex chi_fi =
                chi_two_time_kernel(wf, wi, wi, -wphase, t1, t2, lambda, det);
            return chi_if + chi_fi;
        };
        return quad::integrate_adaptive(integrand, 0.0, t1, inner_rel, inner_abs,
                                        q.max_subdivisions)
            .value;
    };
    const auto res = quad::integrate_adaptive(inner, 0.0, t, q.rel_tol,
                                              q.rel_tol / (16.0 * (1.0 + t)),
                                              q.max_subdivisions);
    out.probability = v2 * res.value.real();
    out.imag_residual = v2 * std::abs(res.value.imag());
    out.error_estimate = v2 * res.error_estimate;
    out.evaluations = evals;
    return out;
}

double jump_probability_general(const sys::MeasuredSystemSpec& spec,
                                const detector::DetectorParams& det,
                                const sys::StateRef& i_state,
                                const sys::StateRef& f_state, double t,
                                const QuadratureControls& q) {
    return jump_probability_general_ex(spec, det, i_state, f_state, t, q).probability;
}

bool fast_dissipation_gate(const detector::DetectorParams& det, double gate_ratio) {
    return det.omega <= gate_ratio * det.gamma_eff;
}

namespace {

// exp(-(1+2nbar) lambda^2 w_if^2/g (u + (e^{-g u}-1)/g)); expm1 keeps the
// small-g u regime stable.
double fast_envelope(double u, double lambda, double omega_if, double geff,
                     double nbar) {
    const double k = (1.0 + 2.0 * nbar) * lambda * lambda * omega_if * omega_if / geff;
    return std::exp(-k * (u + std::expm1(-geff * u) / geff));
}

void require_gate(const detector::DetectorParams& det, double gate_ratio,
                  const char* who) {
    if (!fast_dissipation_gate(det, gate_ratio))
        throw GateError(std::string(who) + ": fast-dissipation gate violated (Omega = " +
                        std::to_string(det.omega) + " > " + std::to_string(gate_ratio) +
                        " * gamma_eff = " + std::to_string(gate_ratio * det.gamma_eff) +
                        "); use jump_probability_general");
}

} // namespace

double jump_probability_fast_dissipation(const sys::MeasuredSystemSpec& spec,
                                         const detector::DetectorParams& det,
                                         const sys::StateRef& i_state,
                                         const sys::StateRef& f_state, double t,
                                         const QuadratureControls& q,
                                         double gate_ratio) {
    spec.validate();
    if (!(t > 0.0))
        throw ValidationError("jump_probability_fast_dissipation: t must be positive");
    require_gate(det, gate_ratio, "jump_probability_fast_dissipation");

    const double v2 = std::norm(spec.v(i_state, f_state));
    if (v2 == 0.0) return 0.0;
    const double omega_if =
        spec.omega_of_level(i_state.level) - spec.omega_of_level(f_state.level);
    const double w_fa1_ia = -spec.omega_ia_fa1(i_state, f_state);

    auto integrand = [&](double u) {
        return (1.0 - u / t) * std::cos(w_fa1_ia * u) *
               fast_envelope(u, spec.lambda, omega_if, det.gamma_eff, det.nbar);
    };
    const auto res = quad::integrate_adaptive(integrand, 0.0, t, q.rel_tol,
                                              q.rel_tol / (16.0 * (1.0 + t)),
                                              q.max_subdivisions);
    return 2.0 * t * v2 * res.value;
}

namespace {

double line_shape_point(double omega, double omega_if, double t, double lambda,
                        double geff, double nbar, const QuadratureControls& q) {
    auto integrand = [&](double u) {
        return (1.0 - u / t) * std::cos((omega - omega_if) * u) *
               fast_envelope(u, lambda, omega_if, geff, nbar);
    };
    return quad::integrate_adaptive(integrand, 0.0, t, q.rel_tol, 1e-14,
                                    q.max_subdivisions)
               .value /
           M_PI;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return s;
}

} // namespace

LineShape line_shape(double omega_i, double omega_f,
                     const detector::DetectorParams& det, double lambda, double t,
                     const std::vector<double>& omega_grid,
                     const QuadratureControls& q, double gate_ratio) {
    if (!(t > 0.0)) throw ValidationError("line_shape: t must be positive");
    if (omega_grid.size() < 2)
        throw ValidationError("line_shape: grid needs at least two points");
    for (std::size_t i = 1; i < omega_grid.size(); ++i)
        if (!(omega_grid[i] > omega_grid[i - 1]))
            throw ValidationError("line_shape: grid must be strictly increasing");
    require_gate(det, gate_ratio, "line_shape");

    LineShape out;
    out.omega_grid = omega_grid;
    out.t = t;
    out.lambda = lambda;
    out.gamma_eff = det.gamma_eff;
    out.nbar = det.nbar;
    out.omega_if = omega_i - omega_f;
    out.p_values.resize(omega_grid.size());
    for (std::size_t i = 0; i < omega_grid.size(); ++i)
        out.p_values[i] = line_shape_point(omega_grid[i], out.omega_if, t, lambda,
                                           det.gamma_eff, det.nbar, q);
    out.mass_captured = trapezoid(out.omega_grid, out.p_values);
    out.min_value = *std::min_element(out.p_values.begin(), out.p_values.end());
    out.narrow_grid_warning = out.mass_captured < 0.99;
    out.negative_lobe_warning = out.min_value < -1e-3;
    return out;
}

LineShape auto_line_shape(double omega_i, double omega_f,
                          const detector::DetectorParams& det, double lambda,
                          double t, const QuadratureControls& q, double gate_ratio) {
    const double omega_if = omega_i - omega_f;
    double half_width = std::max(
        6.0 * lambda * std::abs(omega_if) * std::sqrt(1.0 + 2.0 * det.nbar), 20.0 / t);
    LineShape shape;
    for (int attempt = 0; attempt < 12; ++attempt) {
        // Keep the resolution fine enough for the 1/t Fourier-window ripples.
        const int points = std::max(
            {q.omega_points,
             static_cast<int>(std::ceil(2.0 * half_width / (0.2 / t))) + 1, 2});
        std::vector<double> grid(points);
        for (int i = 0; i < points; ++i)
            grid[i] = omega_if - half_width +
                      2.0 * half_width * static_cast<double>(i) / (points - 1);
        shape = line_shape(omega_i, omega_f, det, lambda, t, grid, q, gate_ratio);
        if (shape.mass_captured >= 0.999) return shape;
        half_width *= 2.0;
    }
    return shape; // narrow_grid_warning flags the shortfall
}

SpectralDensity SpectralDensity::discrete(std::vector<std::pair<double, double>> lines) {
    SpectralDensity g;
    g.kind = Kind::Discrete;
    g.lines = std::move(lines);
    g.validate();
    return g;
}

SpectralDensity SpectralDensity::sampled(std::vector<double> omega_grid,
                                         std::vector<double> values) {
    SpectralDensity g;
    g.kind = Kind::Sampled;
    g.omega_grid = std::move(omega_grid);
    g.values = std::move(values);
    g.validate();
    return g;
}

void SpectralDensity::validate() const {
    if (kind == Kind::Discrete) {
        if (lines.empty()) throw ValidationError("SpectralDensity: no lines");
        for (const auto& [w, weight] : lines)
            if (weight < 0.0)
                throw ValidationError("SpectralDensity: negative line weight");
    } else {
        if (omega_grid.size() < 2 || omega_grid.size() != values.size())
            throw ValidationError("SpectralDensity: bad sampled grid");
        for (std::size_t i = 1; i < omega_grid.size(); ++i)
            if (!(omega_grid[i] > omega_grid[i - 1]))
                throw ValidationError("SpectralDensity: grid must be strictly increasing");
        for (double v : values)
            if (v < 0.0) throw ValidationError("SpectralDensity: negative density");
    }
}

double convolve_spectrum(const SpectralDensity& g, const LineShape& line, double t,
                         double prefactor, const QuadratureControls& q) {
    g.validate();
    if (line.omega_grid.empty())
        throw ValidationError("convolve_spectrum: empty line shape");

    if (g.kind == SpectralDensity::Kind::Discrete) {
        // Each delta line picks P at its exact frequency; the stored
        // metadata re-evaluates the integral rather than interpolating.
        double sum = 0.0;
        for (const auto& [w, weight] : g.lines)
            sum += weight * line_shape_point(w, line.omega_if, line.t, line.lambda,
                                             line.gamma_eff, line.nbar, q);
        return prefactor * 2.0 * M_PI * t * sum;
    }

    const double lo = std::max(line.omega_grid.front(), g.omega_grid.front());
    const double hi = std::min(line.omega_grid.back(), g.omega_grid.back());
    const double g_total = trapezoid(g.omega_grid, g.values);
    if (!(hi > lo)) {
        throw ValidationError(
            "convolve_spectrum: line and spectrum grids do not overlap "
            "(captured G mass 0 of " +
            std::to_string(g_total) + ")");
    }

    auto interp = [](const std::vector<double>& xs, const std::vector<double>& ys,
                     double x) {
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        if (it == xs.begin()) return ys.front();
        if (it == xs.end()) return ys.back();
        const std::size_t hi_idx = static_cast<std::size_t>(it - xs.begin());
        const std::size_t lo_idx = hi_idx - 1;
        const double f = (x - xs[lo_idx]) / (xs[hi_idx] - xs[lo_idx]);
        return ys[lo_idx] + f * (ys[hi_idx] - ys[lo_idx]);
    };

    // Captured-mass diagnostics on the overlap window.
    std::vector<double> gw, gv;
    for (std::size_t i = 0; i < g.omega_grid.size(); ++i)
        if (g.omega_grid[i] >= lo && g.omega_grid[i] <= hi) {
            gw.push_back(g.omega_grid[i]);
            gv.push_back(g.values[i]);
        }
    const double g_captured = gw.size() >= 2 ? trapezoid(gw, gv) : 0.0;
    if (g_total > 0.0 && g_captured < 0.99 * g_total)
        throw ValidationError(
            "convolve_spectrum: insufficient overlap; captured G mass " +
            std::to_string(g_captured) + " of " + std::to_string(g_total));

    double sum = 0.0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < line.omega_grid.size(); ++i) {
        const double w = line.omega_grid[i];
        if (w < lo || w > hi) continue;
        xs.push_back(w);
        ys.push_back(line.p_values[i] * interp(g.omega_grid, g.values, w));
    }
    if (xs.size() >= 2) sum = trapezoid(xs, ys);
    return prefactor * 2.0 * M_PI * t * sum;
}

double asymptotic_rate(const sys::MeasuredSystemSpec& spec,
                       const detector::DetectorParams& det,
                       const sys::StateRef& i_state, const sys::StateRef& f_state) {
    spec.validate();
    const double omega_if =
        spec.omega_of_level(i_state.level) - spec.omega_of_level(f_state.level);
    if (omega_if == 0.0)
        throw ValidationError(
            "asymptotic_rate: omega_if = 0 (degenerate levels have no Zeno "
            "suppression scale)");
    if (!(spec.lambda > 0.0))
        throw ValidationError("asymptotic_rate: lambda must be positive");
    const double v2 = std::norm(spec.v(i_state, f_state));
    return 2.0 * v2 / (spec.lambda * std::abs(omega_if)) *
           std::sqrt(M_PI / (2.0 * (1.0 + 2.0 * det.nbar)));
}

std::vector<RateScanRow> rate_temperature_scan(const sys::MeasuredSystemSpec& spec,
                                               const detector::DetectorParams& det_template,
                                               const sys::StateRef& i_state,
                                               const sys::StateRef& f_state,
                                               const std::vector<double>& nbar_list) {
    if (nbar_list.empty())
        throw ValidationError("rate_temperature_scan: empty nbar list");
    std::vector<RateScanRow> rows;
    rows.reserve(nbar_list.size());
    for (double nbar : nbar_list) {
        const auto det = detector::DetectorParams::from_nbar(
            det_template.omega, det_template.gamma_phase, det_template.gamma_down, nbar);
        RateScanRow row;
        row.nbar = nbar;
        row.rate = asymptotic_rate(spec, det, i_state, f_state);
        row.invariant = row.rate * spec.lambda * std::sqrt(1.0 + 2.0 * nbar);
        rows.push_back(row);
    }
    return rows;
}

} // namespace zeno::spectral
