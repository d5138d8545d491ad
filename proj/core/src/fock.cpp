#include "zeno/fock.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace zeno::fock {

ModeOperators build_mode_ops(int dim) {
    if (dim < 2) throw ValidationError("build_mode_ops: dimension must be >= 2");
    ModeOperators ops;
    ops.dim = dim;
    ops.annihilate = Matrix::Zero(dim, dim);
    for (int k = 1; k < dim; ++k)
        ops.annihilate(k - 1, k) = std::sqrt(static_cast<double>(k));
    ops.create = ops.annihilate.adjoint();
    ops.number = ops.create * ops.annihilate;
    ops.coordinate = ops.create + ops.annihilate;
    return ops;
}

int thermal_dim_required(double nbar, double tail_tol) {
    if (nbar <= 0.0) return 2;
    const double q = nbar / (nbar + 1.0);
    return std::max(2, static_cast<int>(std::ceil(std::log(tail_tol) / std::log(q))));
}

FockDensityMatrix thermal_state(double nbar, int dim, double tail_tol) {
    if (nbar < 0.0) throw ValidationError("thermal_state: nbar must be nonnegative");
    if (dim < 2) throw ValidationError("thermal_state: dimension must be >= 2");
    const double q = nbar / (nbar + 1.0);
    const double tail = nbar > 0.0 ? std::pow(q, dim) : 0.0;
    if (tail >= tail_tol)
        throw TruncationError(
            "thermal_state: truncated tail mass " + std::to_string(tail) +
                " exceeds " + std::to_string(tail_tol) + "; need dim >= " +
                std::to_string(thermal_dim_required(nbar, tail_tol)),
            thermal_dim_required(nbar, tail_tol));

    FockDensityMatrix rho;
    rho.dim_detector = dim;
    rho.dim_system = 1;
    rho.data = Matrix::Zero(dim, dim);
    double norm = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double p = std::pow(q, k);
        rho.data(k, k) = p;
        norm += p;
    }
    rho.data /= norm;
    return rho;
}

Matrix displacement_operator(Complex alpha, int dim) {
    const ModeOperators ops = build_mode_ops(dim);
    Matrix gen = alpha * ops.create - std::conj(alpha) * ops.annihilate;
    return gen.exp();
}

Matrix squeeze_operator(Complex zeta, int dim) {
    const ModeOperators ops = build_mode_ops(dim);
    Matrix gen = 0.5 * (std::conj(zeta) * ops.annihilate * ops.annihilate -
                        zeta * ops.create * ops.create);
    return gen.exp();
}

LindbladSpec LindbladSpec::detector_only(const detector::DetectorParams& det, int dim) {
    const ModeOperators ops = build_mode_ops(dim);
    LindbladSpec spec;
    spec.hamiltonian = det.omega * ops.number;
    spec.gamma_phase = det.gamma_phase;
    spec.gamma_up = det.gamma_up;
    spec.gamma_down = det.gamma_down;
    spec.dim_system = 1;
    spec.dim_detector = dim;
    return spec;
}

void LindbladSpec::validate() const {
    if (dim_detector < 2 || dim_system < 1)
        throw ValidationError("LindbladSpec: bad dimensions");
    const int d = dim_detector * dim_system;
    if (hamiltonian.rows() != d || hamiltonian.cols() != d)
        throw ValidationError("LindbladSpec: Hamiltonian shape mismatch");
    if (gamma_phase < 0.0 || gamma_up < 0.0 || gamma_down < 0.0)
        throw ValidationError("LindbladSpec: rates must be nonnegative");
    const double asym = (hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw ValidationError("LindbladSpec: Hamiltonian not Hermitian (deviation " +
                              std::to_string(asym) + ")");
}

ode::StepControls IntegratorControls::to_step_controls() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0) || !(abs_tol > 0.0 && abs_tol < 1.0))
        throw ValidationError("IntegratorControls: tolerances must lie in (0, 1)");
    if (!(max_step > 0.0))
        throw ValidationError("IntegratorControls: max_step must be positive");
    ode::StepControls c;
    c.rel_tol = rel_tol;
    c.abs_tol = abs_tol;
    c.max_step = max_step;
    return c;
}

void add_detector_dissipator(const Matrix& x, double gamma_phase, double gamma_up,
                             double gamma_down, int dim_system, int dim_detector,
                             Matrix& out) {
    const int nd = dim_detector;
    const int d = nd * dim_system;
    // n_r: detector occupation of full index r; s_r: sqrt(occupation).
    // Diagonal channels first: entrywise factor
    //   gamma   : -(1/2)(n_r - n_c)^2            (2 n X n - n^2 X - X n^2)
    //   gamma_up: -(1/2)(n_r + n_c + 2)
    //   gamma_dn: -(1/2)(n_r + n_c)
    for (int c = 0; c < d; ++c) {
        const int ac = c % nd;
        for (int r = 0; r < d; ++r) {
            const int ar = r % nd;
            const double dn = static_cast<double>(ar - ac);
            const double coeff = -0.5 * gamma_phase * dn * dn -
                                 0.5 * gamma_up * (ar + ac + 2.0) -
                                 0.5 * gamma_down * static_cast<double>(ar + ac);
            out(r, c) += coeff * x(r, c);
        }
    }
    // Jump terms: gu b† X b and gd b X b†, block-local shifts.
    for (int c = 0; c < d; ++c) {
        const int ac = c % nd;
        for (int r = 0; r < d; ++r) {
            const int ar = r % nd;
            if (gamma_up > 0.0 && ar >= 1 && ac >= 1)
                out(r, c) += gamma_up * std::sqrt(static_cast<double>(ar) * ac) *
                             x(r - 1, c - 1);
            if (gamma_down > 0.0 && ar + 1 < nd && ac + 1 < nd)
                out(r, c) += gamma_down *
                             std::sqrt(static_cast<double>(ar + 1) * (ac + 1)) *
                             x(r + 1, c + 1);
        }
    }
}

void add_detector_dissipator_adjoint(const Matrix& x, double gamma_phase,
                                     double gamma_up, double gamma_down,
                                     int dim_system, int dim_detector, Matrix& out) {
    const int nd = dim_detector;
    const int d = nd * dim_system;
    // Adjoint channels: D†[c]A = c† A c - (1/2){c†c, A}; the gamma_up channel
    // (c = b†) therefore lowers indices with b A b†, and gamma_down raises.
    for (int c = 0; c < d; ++c) {
        const int ac = c % nd;
        for (int r = 0; r < d; ++r) {
            const int ar = r % nd;
            const double dn = static_cast<double>(ar - ac);
            const double coeff = -0.5 * gamma_phase * dn * dn -
                                 0.5 * gamma_up * (ar + ac + 2.0) -
                                 0.5 * gamma_down * static_cast<double>(ar + ac);
            out(r, c) += coeff * x(r, c);
        }
    }
    for (int c = 0; c < d; ++c) {
        const int ac = c % nd;
        for (int r = 0; r < d; ++r) {
            const int ar = r % nd;
            if (gamma_up > 0.0 && ar + 1 < nd && ac + 1 < nd)
                out(r, c) += gamma_up *
                             std::sqrt(static_cast<double>(ar + 1) * (ac + 1)) *
                             x(r + 1, c + 1);
            if (gamma_down > 0.0 && ar >= 1 && ac >= 1)
                out(r, c) += gamma_down * std::sqrt(static_cast<double>(ar) * ac) *
                             x(r - 1, c - 1);
        }
    }
}

Matrix lindblad_rhs_matrix(const Matrix& x, const LindbladSpec& spec) {
    const Complex i(0.0, 1.0);
    Matrix out = -i * (spec.hamiltonian * x - x * spec.hamiltonian);
    add_detector_dissipator(x, spec.gamma_phase, spec.gamma_up, spec.gamma_down,
                            spec.dim_system, spec.dim_detector, out);
    return out;
}

Matrix lindblad_rhs(const FockDensityMatrix& rho, const LindbladSpec& spec) {
    spec.validate();
    if (rho.dim_detector != spec.dim_detector || rho.dim_system != spec.dim_system ||
        rho.data.rows() != rho.dim_full() || rho.data.cols() != rho.dim_full())
        throw ValidationError("lindblad_rhs: state/spec shape mismatch");
    return lindblad_rhs_matrix(rho.data, spec);
}

double detector_tail_metric(const Matrix& x, int dim_system, int dim_detector,
                            int levels) {
    double tail = 0.0;
    const int lo = std::max(0, dim_detector - levels);
    for (int s = 0; s < dim_system; ++s)
        for (int a = lo; a < dim_detector; ++a) {
            const int r = s * dim_detector + a;
            tail += std::abs(x(r, r));
        }
    return tail;
}

FockDensityMatrix propagate(const FockDensityMatrix& rho0, const LindbladSpec& spec,
                            double t, const IntegratorControls& controls,
                            PropagationReport* report) {
    spec.validate();
    if (t < 0.0) throw ValidationError("propagate: t must be nonnegative");
    if (rho0.dim_detector != spec.dim_detector || rho0.dim_system != spec.dim_system)
        throw ValidationError("propagate: state/spec shape mismatch");

    FockDensityMatrix rho = rho0;
    if (t == 0.0) {
        if (report) *report = PropagationReport{};
        return rho;
    }

    const double trace0 = rho0.data.trace().real();
    PropagationReport rep;
    auto rhs = [&spec](const Matrix& x, double, Matrix& dxdt) {
        dxdt = lindblad_rhs_matrix(x, spec);
    };
    auto hook = [&](Matrix& x, double) {
        x = 0.5 * (x + x.adjoint()).eval();
        rep.max_trace_drift =
            std::max(rep.max_trace_drift, std::abs(x.trace().real() - trace0));
        rep.max_tail = std::max(
            rep.max_tail, detector_tail_metric(x, spec.dim_system, spec.dim_detector));
        ++rep.steps;
    };
    ode::integrate(rhs, rho.data, 0.0, t, controls.to_step_controls(), hook);
    if (report) *report = rep;
    return rho;
}

Complex char_function(const FockDensityMatrix& rho, Complex xi) {
    if (rho.dim_system != 1)
        throw ValidationError(
            "char_function: detector-only state required; trace out the system first");
    const int n = rho.dim_detector;
    if (std::norm(xi) * n > 1.0e4)
        throw ValidationError(
            "char_function: |xi|^2 * dim too large for the series; use a smaller "
            "|xi| or higher precision");
    if (xi == Complex(0.0, 0.0)) return rho.data.trace();

    // chi = sum_{j,k} xi^j (-xi*)^k / (j! k!) Tr{b^k rho (b†)^j}, accumulated
    // by total order m = j + k until a shell stops mattering.  b is nilpotent
    // on the truncation, so the series is finite.
    std::vector<Matrix> left; // left[k] = b^k rho
    left.reserve(n);
    left.push_back(rho.data);
    for (int k = 1; k < n; ++k) {
        const Matrix& prev = left.back();
        Matrix next = Matrix::Zero(n, n);
        for (int c = 0; c < n; ++c)
            for (int r = 0; r + 1 < n; ++r)
                next(r, c) = std::sqrt(static_cast<double>(r + 1)) * prev(r + 1, c);
        left.push_back(std::move(next));
    }

    // Power tables of the scalar factors xi^j / j! and (-xi*)^k / k!.
    std::vector<Complex> fj(n), fk(n);
    fj[0] = fk[0] = Complex(1.0, 0.0);
    for (int j = 1; j < n; ++j) {
        fj[j] = fj[j - 1] * xi / static_cast<double>(j);
        fk[j] = fk[j - 1] * (-std::conj(xi)) / static_cast<double>(j);
    }

    Complex chi(0.0, 0.0);
    int quiet_shells = 0;
    for (int m = 0; m <= 2 * (n - 1); ++m) {
        double shell_mag = 0.0;
        for (int j = std::max(0, m - (n - 1)); j <= std::min(m, n - 1); ++j) {
            const int k = m - j;
            // Tr{b^k rho (b†)^j} = sum_a sqrt((a+j)!/a!) (b^k rho)_{a, a+j}
            Complex trace(0.0, 0.0);
            for (int a = 0; a + j < n; ++a) {
                double g = 1.0;
                for (int p = 1; p <= j; ++p) g *= static_cast<double>(a + p);
                trace += std::sqrt(g) * left[k](a, a + j);
            }
            const Complex term = fj[j] * fk[k] * trace;
            chi += term;
            shell_mag += std::abs(term);
        }
        if (shell_mag < 1e-14 * std::max(1.0, std::abs(chi)))
            ++quiet_shells;
        else
            quiet_shells = 0;
        if (quiet_shells >= 2) break;
    }
    return chi;
}

FockDensityMatrix partial_trace_system(const FockDensityMatrix& rho) {
    const int nd = rho.dim_detector;
    FockDensityMatrix out;
    out.dim_detector = nd;
    out.dim_system = 1;
    out.data = Matrix::Zero(nd, nd);
    for (int s = 0; s < rho.dim_system; ++s)
        out.data += rho.data.block(s * nd, s * nd, nd, nd);
    return out;
}

double expectation_number(const FockDensityMatrix& rho) {
    double mean = 0.0;
    for (int s = 0; s < rho.dim_system; ++s)
        for (int a = 0; a < rho.dim_detector; ++a) {
            const int r = s * rho.dim_detector + a;
            mean += a * rho.data(r, r).real();
        }
    return mean;
}

} // namespace zeno::fock
