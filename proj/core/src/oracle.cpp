#include "zeno/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "zeno/quadrature.hpp"

namespace zeno::fock {

namespace {

constexpr double kAuditTailTol = 1e-8;
constexpr double kHardTailTol = 1e-6;
constexpr int kDimCap = 4096;

// b† X, b X, X b†, X b as index shifts on a detector-space operator.
void add_scaled_q_left(const Matrix& x, Complex scale, Matrix& out) {
    const int n = static_cast<int>(x.rows());
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) {
            Complex v(0.0, 0.0);
            if (r >= 1) v += std::sqrt(static_cast<double>(r)) * x(r - 1, c);
            if (r + 1 < n) v += std::sqrt(static_cast<double>(r + 1)) * x(r + 1, c);
            out(r, c) += scale * v;
        }
}

void add_scaled_q_right(const Matrix& x, Complex scale, Matrix& out) {
    const int n = static_cast<int>(x.rows());
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            Complex v(0.0, 0.0);
            if (c >= 1) v += std::sqrt(static_cast<double>(c)) * x(r, c - 1);
            if (c + 1 < n) v += std::sqrt(static_cast<double>(c + 1)) * x(r, c + 1);
            out(r, c) += scale * v;
        }
    }
}

Matrix thermal_matrix(double nbar, int dim) { return thermal_state(nbar, dim).data; }

// Tr{AB} without forming the product.
Complex trace_product(const Matrix& a, const Matrix& b) {
    return a.cwiseProduct(b.transpose()).sum();
}

} // namespace

Matrix PairGenerator::apply(const Matrix& x) const {
    const int n = dim;
    Matrix out = Matrix::Zero(n, n);
    const Complex i(0.0, 1.0);

    // -i w_phase X - i Omega (n X - X n), entrywise.
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r)
            out(r, c) = -i * (omega_phase + det.omega * static_cast<double>(r - c)) * x(r, c);

    // -i lambda (w_m q X - w_n X q)
    if (lambda != 0.0) {
        add_scaled_q_left(x, -i * lambda * omega_m, out);
        add_scaled_q_right(x, i * lambda * omega_n, out);
    }

    add_detector_dissipator(x, det.gamma_phase, det.gamma_up, det.gamma_down, 1, n, out);
    return out;
}

Matrix propagate_pair(const Matrix& x0, const PairGenerator& gen, double t,
                      const IntegratorControls& controls, PropagationReport* report) {
    if (t < 0.0) throw ValidationError("propagate_pair: t must be nonnegative");
    if (x0.rows() != gen.dim || x0.cols() != gen.dim)
        throw ValidationError("propagate_pair: state/generator shape mismatch");
    Matrix x = x0;
    PropagationReport rep;
    if (t > 0.0) {
        auto rhs = [&gen](const Matrix& m, double, Matrix& dm) { dm = gen.apply(m); };
        auto hook = [&](Matrix& m, double) {
            rep.max_tail = std::max(rep.max_tail, detector_tail_metric(m, 1, gen.dim));
            ++rep.steps;
        };
        ode::integrate(rhs, x, 0.0, t, controls.to_step_controls(), hook);
    }
    if (report) *report = rep;
    return x;
}

int audited_dimension(int dim0, double tail_tol, int dim_cap,
                      const std::function<double(int)>& trial) {
    int dim = std::max(2, dim0);
    while (true) {
        const double tail = trial(dim);
        if (tail < tail_tol) return dim;
        if (2 * dim > dim_cap)
            throw TruncationError("truncation audit: tail " + std::to_string(tail) +
                                      " at dim " + std::to_string(dim) +
                                      " still above " + std::to_string(tail_tol) +
                                      "; need dim >= " + std::to_string(2 * dim),
                                  2 * dim);
        dim *= 2;
    }
}

int initial_pair_dim(const detector::DetectorParams& det, double lambda,
                     double max_abs_omega) {
    const double n0 = 8.0 * (det.nbar + 1.0) + 4.0 * lambda * max_abs_omega / det.gamma_eff;
    int dim = static_cast<int>(std::ceil(n0));
    dim = std::max(dim, thermal_dim_required(det.nbar));
    return std::max(dim, 8);
}

int audit_pair_dim(double omega_m, double omega_n, double lambda, double t_max,
                   const detector::DetectorParams& det,
                   const IntegratorControls& controls) {
    PairGenerator gen;
    gen.omega_phase = omega_m - omega_n;
    gen.omega_m = omega_m;
    gen.omega_n = omega_n;
    gen.lambda = lambda;
    gen.det = det;
    auto trial = [&](int d) {
        gen.dim = d;
        PropagationReport rep;
        propagate_pair(thermal_matrix(det.nbar, d), gen, t_max, controls, &rep);
        return rep.max_tail;
    };
    return audited_dimension(
        initial_pair_dim(det, lambda, std::max(std::abs(omega_m), std::abs(omega_n))),
        kAuditTailTol, kDimCap, trial);
}

Complex oracle_measurement_char(double omega_m, double omega_n, double lambda,
                                double t, const detector::DetectorParams& det,
                                Complex xi, const IntegratorControls& controls,
                                int dim) {
    PairGenerator gen;
    gen.omega_phase = omega_m - omega_n;
    gen.omega_m = omega_m;
    gen.omega_n = omega_n;
    gen.lambda = lambda;
    gen.det = det;

    Matrix evolved;
    auto trial = [&](int d) {
        gen.dim = d;
        PropagationReport rep;
        evolved = propagate_pair(thermal_matrix(det.nbar, d), gen, t, controls, &rep);
        return rep.max_tail;
    };
    if (dim > 0) {
        trial(dim);
    } else {
        audited_dimension(
            initial_pair_dim(det, lambda, std::max(std::abs(omega_m), std::abs(omega_n))),
            kAuditTailTol, kDimCap, trial);
    }

    FockDensityMatrix state;
    state.dim_detector = gen.dim;
    state.dim_system = 1;
    state.data = evolved;
    return char_function(state, xi);
}

Complex oracle_chi_two_time(double omega_m, double omega_n, double omega_seg1,
                            double omega_phase, double t1, double t2, double lambda,
                            const detector::DetectorParams& det,
                            const IntegratorControls& controls, int dim) {
    if (!(t2 >= 0.0 && t1 >= t2))
        throw ValidationError("oracle_chi_two_time: need 0 <= t2 <= t1");

    PairGenerator diag;
    diag.omega_phase = 0.0;
    diag.omega_m = omega_seg1;
    diag.omega_n = omega_seg1;
    diag.lambda = lambda;
    diag.det = det;

    PairGenerator pair;
    pair.omega_phase = omega_phase;
    pair.omega_m = omega_m;
    pair.omega_n = omega_n;
    pair.lambda = lambda;
    pair.det = det;

    Complex result;
    auto trial = [&](int d) {
        diag.dim = d;
        pair.dim = d;
        PropagationReport rep1, rep2;
        Matrix x = propagate_pair(thermal_matrix(det.nbar, d), diag, t2, controls, &rep1);
        x = propagate_pair(x, pair, t1 - t2, controls, &rep2);
        result = x.trace();
        return std::max(rep1.max_tail, rep2.max_tail);
    };
    if (dim > 0) {
        trial(dim);
    } else {
        const double wmax = std::max({std::abs(omega_m), std::abs(omega_n),
                                      std::abs(omega_seg1)});
        audited_dimension(initial_pair_dim(det, lambda, wmax), kAuditTailTol, kDimCap,
                          trial);
    }
    return result;
}

LindbladSpec coupled_spec(const sys::MeasuredSystemSpec& system,
                          const detector::DetectorParams& det, double lambda,
                          int dim_detector, bool include_v) {
    system.validate();
    const auto basis = system.states();
    const int s_dim = static_cast<int>(basis.size());
    const int n = dim_detector;
    const int d = s_dim * n;
    const ModeOperators ops = build_mode_ops(n);

    Eigen::MatrixXcd h_sys = Eigen::MatrixXcd::Zero(s_dim, s_dim);
    Eigen::VectorXd h0_diag(s_dim);
    for (int s = 0; s < s_dim; ++s) {
        const double w0 = system.omega_of_level(basis[s].level);
        h_sys(s, s) = w0 + system.omega1_of(basis[s]);
        h0_diag(s) = w0;
    }
    if (include_v)
        for (int a = 0; a < s_dim; ++a)
            for (int b = 0; b < s_dim; ++b)
                if (a != b) h_sys(a, b) += system.v(basis[a], basis[b]);

    Matrix h = Matrix::Zero(d, d);
    for (int s = 0; s < s_dim; ++s) {
        for (int sp = 0; sp < s_dim; ++sp)
            if (h_sys(s, sp) != Complex(0.0, 0.0))
                for (int a = 0; a < n; ++a)
                    h(s * n + a, sp * n + a) += h_sys(s, sp);
        // detector free Hamiltonian and the measurement coupling lambda q H0
        for (int a = 0; a < n; ++a)
            h(s * n + a, s * n + a) += det.omega * static_cast<double>(a);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (ops.coordinate(a, b) != Complex(0.0, 0.0))
                    h(s * n + a, s * n + b) += lambda * h0_diag(s) * ops.coordinate(a, b);
    }

    LindbladSpec spec;
    spec.hamiltonian = std::move(h);
    spec.gamma_phase = det.gamma_phase;
    spec.gamma_up = det.gamma_up;
    spec.gamma_down = det.gamma_down;
    spec.dim_system = s_dim;
    spec.dim_detector = n;
    return spec;
}

namespace {

Matrix v_operator(const sys::MeasuredSystemSpec& system, int dim_detector) {
    const auto basis = system.states();
    const int s_dim = static_cast<int>(basis.size());
    const int n = dim_detector;
    Matrix v = Matrix::Zero(s_dim * n, s_dim * n);
    for (int a = 0; a < s_dim; ++a)
        for (int b = 0; b < s_dim; ++b) {
            if (a == b) continue;
            const Complex val = system.v(basis[a], basis[b]);
            if (val == Complex(0.0, 0.0)) continue;
            for (int k = 0; k < n; ++k) v(a * n + k, b * n + k) = val;
        }
    return v;
}

Matrix initial_product_state(const sys::MeasuredSystemSpec& system,
                             const detector::DetectorParams& det,
                             const sys::StateRef& i_state, int dim_detector) {
    const int s_dim = static_cast<int>(system.states().size());
    const int n = dim_detector;
    const int si = system.state_index(i_state);
    Matrix rho = Matrix::Zero(s_dim * n, s_dim * n);
    rho.block(si * n, si * n, n, n) = thermal_matrix(det.nbar, n);
    return rho;
}

double project_final(const Matrix& rho, int f_index, int dim_detector) {
    double w = 0.0;
    for (int a = 0; a < dim_detector; ++a)
        w += rho(f_index * dim_detector + a, f_index * dim_detector + a).real();
    return w;
}

double max_abs_level_omega(const sys::MeasuredSystemSpec& system) {
    double m = 0.0;
    for (const auto& lv : system.levels) m = std::max(m, std::abs(lv.omega));
    return m;
}

} // namespace

JumpOracleResult jump_probability_direct(const sys::MeasuredSystemSpec& system,
                                         const detector::DetectorParams& det,
                                         double lambda, const sys::StateRef& i_state,
                                         const sys::StateRef& f_state, double t,
                                         const IntegratorControls& controls, int dim) {
    system.validate();
    if (t < 0.0) throw ValidationError("jump_probability_direct: t must be nonnegative");
    const int fi = system.state_index(f_state);

    JumpOracleResult out;
    auto trial = [&](int d) {
        const LindbladSpec spec = coupled_spec(system, det, lambda, d, true);
        FockDensityMatrix rho;
        rho.dim_detector = d;
        rho.dim_system = spec.dim_system;
        rho.data = initial_product_state(system, det, i_state, d);
        PropagationReport rep;
        rho = propagate(rho, spec, t, controls, &rep);
        out.probability = project_final(rho.data, fi, d);
        out.dim_detector = d;
        out.max_tail = rep.max_tail;
        return rep.max_tail;
    };
    if (dim > 0) {
        const double tail = trial(dim);
        if (tail > kHardTailTol)
            throw TruncationError(
                "jump_probability_direct: detector tail mass " + std::to_string(tail) +
                    " above 1e-6 at dim " + std::to_string(dim) + "; need dim >= " +
                    std::to_string(2 * dim),
                2 * dim);
    } else {
        audited_dimension(initial_pair_dim(det, lambda, max_abs_level_omega(system)),
                          kAuditTailTol, kDimCap, trial);
    }
    return out;
}

JumpOracleResult jump_probability_second_order(const sys::MeasuredSystemSpec& system,
                                               const detector::DetectorParams& det,
                                               double lambda,
                                               const sys::StateRef& i_state,
                                               const sys::StateRef& f_state, double t,
                                               const IntegratorControls& controls,
                                               int dim, int s_nodes, int u_nodes) {
    system.validate();
    if (!(t > 0.0)) throw ValidationError("jump_probability_second_order: t must be positive");
    if (s_nodes < 2 || u_nodes < 2)
        throw ValidationError("jump_probability_second_order: need >= 2 nodes per axis");

    // Choose the truncation with a forward-sweep audit (V = 0 flow of the
    // initial product state across [0, t]).
    auto forward_trial = [&](int d) {
        const LindbladSpec spec = coupled_spec(system, det, lambda, d, false);
        FockDensityMatrix rho;
        rho.dim_detector = d;
        rho.dim_system = spec.dim_system;
        rho.data = initial_product_state(system, det, i_state, d);
        PropagationReport rep;
        propagate(rho, spec, t, controls, &rep);
        return rep.max_tail;
    };
    int n = dim;
    if (n <= 0)
        n = audited_dimension(initial_pair_dim(det, lambda, max_abs_level_omega(system)),
                              kAuditTailTol, kDimCap, forward_trial);

    const LindbladSpec spec = coupled_spec(system, det, lambda, n, false);
    const Matrix v = v_operator(system, n);
    const int fi = system.state_index(f_state);
    const int d_full = spec.dim_system * n;

    const ode::StepControls step = controls.to_step_controls();
    auto rhs_forward = [&spec](const Matrix& x, double, Matrix& dx) {
        dx = -Complex(0.0, 1.0) * (spec.hamiltonian * x - x * spec.hamiltonian);
        add_detector_dissipator(x, spec.gamma_phase, spec.gamma_up, spec.gamma_down,
                                spec.dim_system, spec.dim_detector, dx);
    };
    auto rhs_adjoint = [&spec](const Matrix& x, double, Matrix& dx) {
        dx = Complex(0.0, 1.0) * (spec.hamiltonian * x - x * spec.hamiltonian);
        add_detector_dissipator_adjoint(x, spec.gamma_phase, spec.gamma_up,
                                        spec.gamma_down, spec.dim_system,
                                        spec.dim_detector, dx);
    };
    auto nohook = [](Matrix&, double) {};

    const quad::GaussLegendre gl_s(s_nodes);
    const quad::GaussLegendre gl_u(u_nodes);

    // Forward sweep: rho(s_j) cached at the outer nodes.
    std::vector<double> s_vals(s_nodes);
    for (int j = 0; j < s_nodes; ++j) s_vals[j] = gl_s.node_on(0.0, t, j);
    std::vector<Matrix> rho_at(s_nodes);
    {
        Matrix x = initial_product_state(system, det, i_state, n);
        double cur = 0.0;
        for (int j = 0; j < s_nodes; ++j) {
            ode::integrate(rhs_forward, x, cur, s_vals[j], step, nohook);
            cur = s_vals[j];
            rho_at[j] = 0.5 * (x + x.adjoint()); // density-matrix segment
        }
    }

    // Adjoint sweep: A(tau) = S0†(tau)[P_f] cached at every needed tau.
    std::vector<std::pair<double, std::pair<int, int>>> taus;
    taus.reserve(static_cast<std::size_t>(s_nodes) * u_nodes);
    for (int j = 0; j < s_nodes; ++j)
        for (int k = 0; k < u_nodes; ++k) {
            const double u = gl_u.node_on(0.0, t - s_vals[j], k);
            taus.push_back({t - s_vals[j] - u, {j, k}});
        }
    std::sort(taus.begin(), taus.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::map<std::pair<int, int>, Matrix> a_at;
    {
        Matrix a = Matrix::Zero(d_full, d_full);
        for (int k = 0; k < n; ++k) a(fi * n + k, fi * n + k) = 1.0;
        double cur = 0.0;
        for (const auto& [tau, jk] : taus) {
            if (tau > cur) {
                ode::integrate(rhs_adjoint, a, cur, tau, step, nohook);
                cur = tau;
            }
            a_at[jk] = 0.5 * (a + a.adjoint());
        }
    }

    // Middle sweeps: B_j(u) = S0(u)[V, rho(s_j)] along ascending u nodes.
    double w_total = 0.0;
    double worst_tail = 0.0;
    for (int j = 0; j < s_nodes; ++j) {
        Matrix b = v * rho_at[j] - rho_at[j] * v;
        const double b_scale = std::max(1.0, b.cwiseAbs().maxCoeff());
        double cur = 0.0;
        for (int k = 0; k < u_nodes; ++k) {
            const double u = gl_u.node_on(0.0, t - s_vals[j], k);
            if (u > cur) {
                ode::integrate(rhs_forward, b, cur, u, step, nohook);
                cur = u;
            }
            worst_tail = std::max(
                worst_tail, detector_tail_metric(b, spec.dim_system, n) / b_scale);
            const Matrix c = v * b - b * v;
            const double f_jk = -trace_product(a_at.at({j, k}), c).real();
            w_total += gl_s.weight_on(0.0, t, j) *
                       gl_u.weight_on(0.0, t - s_vals[j], k) * f_jk;
        }
    }
    if (worst_tail > kHardTailTol)
        throw TruncationError("jump_probability_second_order: detector tail " +
                                  std::to_string(worst_tail) + " above 1e-6 at dim " +
                                  std::to_string(n) + "; need dim >= " +
                                  std::to_string(2 * n),
                              2 * n);

    JumpOracleResult out;
    out.probability = w_total;
    out.dim_detector = n;
    out.max_tail = worst_tail;
    return out;
}

std::pair<Complex, Complex> discarded_jump_terms(
    const sys::MeasuredSystemSpec& system, const detector::DetectorParams& det,
    double lambda, const sys::StateRef& i_state, const sys::StateRef& f_state,
    double t, double t1, double t2, const IntegratorControls& controls, int dim) {
    system.validate();
    if (!(0.0 <= t2 && t2 <= t1 && t1 <= t))
        throw ValidationError("discarded_jump_terms: need 0 <= t2 <= t1 <= t");

    int n = dim;
    if (n <= 0) n = initial_pair_dim(det, lambda, max_abs_level_omega(system)) * 2;
    const LindbladSpec spec = coupled_spec(system, det, lambda, n, false);
    const Matrix v = v_operator(system, n);
    const int fi = system.state_index(f_state);

    const ode::StepControls step = controls.to_step_controls();
    auto rhs = [&spec](const Matrix& x, double, Matrix& dx) {
        dx = -Complex(0.0, 1.0) * (spec.hamiltonian * x - x * spec.hamiltonian);
        add_detector_dissipator(x, spec.gamma_phase, spec.gamma_up, spec.gamma_down,
                                spec.dim_system, spec.dim_detector, dx);
    };
    auto nohook = [](Matrix&, double) {};
    auto evolve = [&](Matrix x, double dt) {
        if (dt > 0.0) ode::integrate(rhs, x, 0.0, dt, step, nohook);
        return x;
    };

    const Matrix u0 = evolve(initial_product_state(system, det, i_state, n), t2);
    const Matrix m3 = evolve(v * u0, t1 - t2);
    const Matrix m4 = evolve(u0 * v, t1 - t2);
    const Matrix y3 = evolve(v * m3, t - t1);
    const Matrix y4 = evolve(m4 * v, t - t1);

    Complex t3(0.0, 0.0), t4(0.0, 0.0);
    for (int a = 0; a < n; ++a) {
        t3 += y3(fi * n + a, fi * n + a);
        t4 += y4(fi * n + a, fi * n + a);
    }
    return {t3, t4};
}

} // namespace zeno::fock
