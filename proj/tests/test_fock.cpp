#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "zeno/charfunc.hpp"
#include "zeno/fock.hpp"

using namespace zeno;
using Complex = std::complex<double>;
using fock::FockDensityMatrix;
using fock::Matrix;

namespace {

const auto kDet = detector::DetectorParams::from_nbar(0.3, 0.8, 1.0, 1.0);

FockDensityMatrix detector_state(Matrix data) {
    FockDensityMatrix rho;
    rho.dim_detector = static_cast<int>(data.rows());
    rho.dim_system = 1;
    rho.data = std::move(data);
    return rho;
}

// Least-squares fit of the log-characteristic model
//   ln chi = sum_{j+k <= order} C_jk xi^j (-xi*)^k
// from sampled chi values.  Exact for Gaussian states at order 2; order 3
// removes the leading fit bias when the state has small cubic cumulants.
charfunc::CharCoeffs extract_coeffs(const FockDensityMatrix& rho, double radius = 0.3,
                                    int order = 2) {
    std::vector<Complex> xis;
    for (int k = 0; k < 10; ++k)
        xis.push_back(std::polar(radius, 2.0 * M_PI * k / 10.0));
    for (int k = 0; k < 8; ++k)
        xis.push_back(std::polar(0.6 * radius, 2.0 * M_PI * (k + 0.3) / 8.0));
    for (int k = 0; k < 6; ++k)
        xis.push_back(std::polar(0.3 * radius, 2.0 * M_PI * (k + 0.7) / 6.0));

    std::vector<std::pair<int, int>> terms;
    for (int m = 0; m <= order; ++m)
        for (int j = 0; j <= m; ++j) terms.emplace_back(j, m - j);

    Eigen::MatrixXcd a(xis.size(), terms.size());
    Eigen::VectorXcd b(xis.size());
    for (std::size_t r = 0; r < xis.size(); ++r) {
        const Complex xi = xis[r];
        const Complex mxc = -std::conj(xi);
        for (std::size_t c = 0; c < terms.size(); ++c) {
            Complex v(1.0, 0.0);
            for (int p = 0; p < terms[c].first; ++p) v *= xi;
            for (int p = 0; p < terms[c].second; ++p) v *= mxc;
            a(r, c) = v;
        }
        b(r) = std::log(fock::char_function(rho, xi));
    }
    Eigen::VectorXcd x = a.colPivHouseholderQr().solve(b);
    charfunc::CharCoeffs c;
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (terms[i].first + terms[i].second <= 2)
            c.set(terms[i].first, terms[i].second, x(i));
    return c;
}

} // namespace

TEST_CASE("build_mode_ops ladder structure") {
    const auto two = fock::build_mode_ops(2);
    CHECK(two.annihilate(0, 1) == Complex(1.0, 0.0));
    CHECK(two.annihilate.cwiseAbs().sum() == doctest::Approx(1.0));

    const auto four = fock::build_mode_ops(4);
    CHECK(four.annihilate(2, 3).real() == doctest::Approx(std::sqrt(3.0)));
    CHECK((four.create - four.annihilate.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((four.number - four.create * four.annihilate).cwiseAbs().maxCoeff() == 0.0);

    // [b, b†] = diag(1, ..., 1, -(N-1)) on the truncated space; diagonal
    // entries carry the rounding of sqrt(k)^2, off-diagonal zeros are exact
    for (int n : {2, 5, 9}) {
        const auto ops = fock::build_mode_ops(n);
        Matrix comm = ops.annihilate * ops.create - ops.create * ops.annihilate;
        for (int k = 0; k < n - 1; ++k)
            CHECK(std::abs(comm(k, k) - Complex(1.0, 0.0)) < 8 * n *
                  std::numeric_limits<double>::epsilon());
        CHECK(std::abs(comm(n - 1, n - 1) - Complex(-(n - 1.0), 0.0)) <
              8 * n * std::numeric_limits<double>::epsilon());
        comm.diagonal().setZero();
        CHECK(comm.cwiseAbs().maxCoeff() == 0.0);
    }

    CHECK_THROWS_AS(fock::build_mode_ops(1), ValidationError);
}

TEST_CASE("thermal_state") {
    SUBCASE("nbar = 0 is the ground state") {
        const auto rho = fock::thermal_state(0.0, 16);
        CHECK(rho.data(0, 0) == Complex(1.0, 0.0));
        CHECK(rho.data.cwiseAbs().sum() == doctest::Approx(1.0));
    }
    SUBCASE("nbar = 1 has geometric ratio 1/2") {
        const auto rho = fock::thermal_state(1.0, 48);
        for (int k = 1; k < 20; ++k)
            CHECK(rho.data(k, k).real() / rho.data(k - 1, k - 1).real() ==
                  doctest::Approx(0.5).epsilon(1e-12));
        CHECK(rho.data.trace().real() == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("mean occupation nbar = 2 at dim 80") {
        const auto rho = fock::thermal_state(2.0, 80);
        CHECK(fock::expectation_number(rho) == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("tail audit names the required dimension") {
        // (3/4)^40 ~ 1e-5 is far above the 1e-10 bar
        CHECK_THROWS_AS(fock::thermal_state(3.0, 40), TruncationError);
        try {
            fock::thermal_state(3.0, 40);
        } catch (const TruncationError& e) {
            CHECK(e.required_dim == fock::thermal_dim_required(3.0));
            CHECK(e.required_dim > 40);
        }
        CHECK_NOTHROW(fock::thermal_state(3.0, fock::thermal_dim_required(3.0)));
    }
}

TEST_CASE("lindblad_rhs") {
    const int dim = 56;
    const auto spec = fock::LindbladSpec::detector_only(kDet, dim);

    SUBCASE("thermal state is stationary to 1e-12") {
        const auto rho = fock::thermal_state(kDet.nbar, dim);
        CHECK(fock::lindblad_rhs(rho, spec).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("zero rates give the pure commutator") {
        auto free_spec = spec;
        free_spec.gamma_phase = free_spec.gamma_up = free_spec.gamma_down = 0.0;
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Matrix m = Matrix::Zero(dim, dim);
        for (int c = 0; c < dim; ++c)
            for (int r = 0; r < dim; ++r) m(r, c) = Complex(u(rng), u(rng));
        const auto rho = detector_state(0.5 * (m + m.adjoint()));
        const Matrix rhs = fock::lindblad_rhs(rho, free_spec);
        const Matrix comm = -Complex(0.0, 1.0) *
                            (free_spec.hamiltonian * rho.data -
                             rho.data * free_spec.hamiltonian);
        CHECK((rhs - comm).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("trace of the rhs vanishes for random Hermitian states") {
        // States supported inside the truncation: the raising channel leaks
        // trace through the top Fock level by construction, so the algebraic
        // property is asserted away from the boundary.
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int rep = 0; rep < 5; ++rep) {
            Matrix m = Matrix::Zero(dim, dim);
            for (int c = 0; c < dim - 1; ++c)
                for (int r = 0; r < dim - 1; ++r) m(r, c) = Complex(u(rng), u(rng));
            const auto rho = detector_state(0.5 * (m + m.adjoint()));
            CHECK(std::abs(fock::lindblad_rhs(rho, spec).trace()) < 1e-12 * dim);
        }
        // and the leak itself is exactly the top-level raising-channel term
        Matrix top = Matrix::Zero(dim, dim);
        top(dim - 1, dim - 1) = 1.0;
        const double leak =
            fock::lindblad_rhs(detector_state(top), spec).trace().real();
        CHECK(leak == doctest::Approx(-kDet.gamma_up * dim).epsilon(1e-12));
    }
}

TEST_CASE("propagate") {
    const int dim = 48;
    const auto spec = fock::LindbladSpec::detector_only(kDet, dim);
    const fock::IntegratorControls controls{1e-10, 1e-13};

    SUBCASE("t = 0 returns the state exactly") {
        const auto rho = fock::thermal_state(1.0, dim);
        const auto out = fock::propagate(rho, spec, 0.0, controls);
        CHECK((out.data - rho.data).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("thermal state stays put over t in [0, 10/gamma_eff]") {
        const auto rho = fock::thermal_state(kDet.nbar, dim);
        fock::PropagationReport rep;
        const auto out =
            fock::propagate(rho, spec, 10.0 / kDet.gamma_eff, controls, &rep);
        CHECK((out.data - rho.data).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(rep.max_trace_drift < 1e-8);
    }

    SUBCASE("single-excitation decay at nbar = 0") {
        const auto det0 = detector::DetectorParams::from_nbar(0.3, 0.8, 1.0, 0.0);
        const auto spec0 = fock::LindbladSpec::detector_only(det0, dim);
        Matrix one = Matrix::Zero(dim, dim);
        one(1, 1) = 1.0;
        for (double t : {0.3, 1.0, 2.2}) {
            const auto out = fock::propagate(detector_state(one), spec0, t, controls);
            CHECK(fock::expectation_number(out) ==
                  doctest::Approx(std::exp(-det0.gamma_down * t)).epsilon(1e-6));
        }
    }

    SUBCASE("relaxation law for a Gaussian initial state") {
        // <n>(t) - nbar = (<n>(0) - nbar) e^{-(gd - gu) t} to 1e-6
        const Matrix d = fock::displacement_operator({1.1, -0.4}, dim);
        const Matrix x0 = d * fock::thermal_state(0.5, dim).data * d.adjoint();
        const double n0 = fock::expectation_number(detector_state(x0));
        fock::PropagationReport rep;
        for (double t : {0.4, 1.1}) {
            const auto out = fock::propagate(detector_state(x0), spec, t, controls, &rep);
            const double expected =
                kDet.nbar + (n0 - kDet.nbar) * std::exp(-kDet.gamma_net() * t);
            CHECK(fock::expectation_number(out) ==
                  doctest::Approx(expected).epsilon(1e-6));
            CHECK(rep.max_trace_drift < 1e-8);
        }
    }

    SUBCASE("positivity spot check after evolution") {
        const Matrix d = fock::displacement_operator({0.9, 0.7}, dim);
        const Matrix x0 = d * fock::thermal_state(0.3, dim).data * d.adjoint();
        const auto out = fock::propagate(detector_state(x0), spec, 0.7, controls);
        Eigen::SelfAdjointEigenSolver<Matrix> es(out.data);
        CHECK(es.eigenvalues().minCoeff() > -1e-8);
    }
}

TEST_CASE("char_function") {
    SUBCASE("xi = 0 returns the trace") {
        const auto rho = fock::thermal_state(1.3, 48);
        CHECK(std::abs(fock::char_function(rho, {0.0, 0.0}) - rho.data.trace()) == 0.0);
    }

    SUBCASE("thermal value matches exp(-|xi|^2 nbar) to 1e-9") {
        const auto rho = fock::thermal_state(1.0, 60);
        const auto chi = fock::char_function(rho, {1.0, 0.0});
        CHECK(std::abs(chi - Complex(std::exp(-1.0), 0.0)) < 1e-9);
        // cross-check the detector-core closed form at another point
        const Complex xi(0.4, -0.8);
        CHECK(std::abs(fock::char_function(rho, xi) - detector::thermal_char(xi, 1.0)) <
              1e-9);
    }

    SUBCASE("displaced vacuum gives the pure phase factor") {
        const int dim = 48;
        const Complex alpha(0.8, 0.5);
        const Matrix d = fock::displacement_operator(alpha, dim);
        Matrix vac = Matrix::Zero(dim, dim);
        vac(0, 0) = 1.0;
        const auto rho = detector_state(d * vac * d.adjoint());
        for (const Complex xi : {Complex(0.3, 0.1), Complex(-0.5, 0.7)}) {
            const Complex expected =
                std::exp(xi * std::conj(alpha) - std::conj(xi) * alpha);
            CHECK(std::abs(fock::char_function(rho, xi) - expected) < 1e-9);
            CHECK(std::abs(std::abs(fock::char_function(rho, xi)) - 1.0) < 1e-9);
        }
    }

    SUBCASE("overflow guard") {
        const auto rho = fock::thermal_state(1.0, 60);
        CHECK_THROWS_AS(fock::char_function(rho, {15.0, 0.0}), ValidationError);
    }

    SUBCASE("system factor must be traced out first") {
        FockDensityMatrix coupled;
        coupled.dim_detector = 8;
        coupled.dim_system = 2;
        coupled.data = Matrix::Identity(16, 16) / 16.0;
        CHECK_THROWS_AS(fock::char_function(coupled, {0.1, 0.0}), ValidationError);
        const auto reduced = fock::partial_trace_system(coupled);
        CHECK(reduced.data.trace().real() == doctest::Approx(1.0));
        CHECK_NOTHROW(fock::char_function(reduced, {0.1, 0.0}));
    }
}

TEST_CASE("coefficient decoupling: oracle flow matches free_coeffs") {
    const int dim = 44;
    const fock::IntegratorControls controls{1e-10, 1e-13};

    // squeezed-displaced thermal state populates all j + k <= 2 coefficients
    const Matrix d = fock::displacement_operator({0.45, 0.2}, dim);
    const Matrix s = fock::squeeze_operator({0.3, 0.1}, dim);
    const Matrix x0 =
        d * s * fock::thermal_state(0.4, dim).data * s.adjoint() * d.adjoint();
    const auto c0 = extract_coeffs(detector_state(x0));

    SUBCASE("thermal channels and rotation: every coefficient follows the law") {
        const auto det = detector::DetectorParams::from_nbar(0.3, 0.0, 1.0, 1.0);
        const auto spec = fock::LindbladSpec::detector_only(det, dim);
        for (double t : {0.25, 0.8, 1.6}) {
            const auto evolved = fock::propagate(detector_state(x0), spec, t, controls);
            const auto c_oracle = extract_coeffs(evolved);
            const auto c_analytic = charfunc::free_coeffs(c0, t, det);
            for (const auto& e : c_analytic.entries())
                CHECK(std::abs(c_oracle.get(e.j, e.k) - e.value) < 1e-5);
        }
    }

    SUBCASE("with phase damping: first-order coefficients still follow the law") {
        // cubic-order extraction: the dephasing cascade populates third
        // cumulants, which would bias a quadratic fit of C10/C01
        const auto spec = fock::LindbladSpec::detector_only(kDet, dim);
        const auto c0_cubic = extract_coeffs(detector_state(x0), 0.12, 3);
        for (double t : {0.25, 0.8}) {
            const auto evolved = fock::propagate(detector_state(x0), spec, t, controls);
            const auto c_oracle = extract_coeffs(evolved, 0.12, 3);
            const auto c_analytic = charfunc::free_coeffs(c0_cubic, t, kDet);
            for (const auto& jk : {std::pair<int, int>{1, 0}, {0, 1}, {0, 0}})
                CHECK(std::abs(c_oracle.get(jk.first, jk.second) -
                               c_analytic.get(jk.first, jk.second)) < 1e-5);
        }
    }

    SUBCASE("with phase damping: the quadratic feed drives C20 off the law") {
        // Pure dephasing on a displaced state; the linear coefficient law
        // predicts C20 stays 0, while the dropped quadratic term feeds it.
        // See VALIDATION.md.
        const auto det = detector::DetectorParams::from_nbar(0.3, 0.8, 0.0, 0.0);
        const auto spec = fock::LindbladSpec::detector_only(det, dim);
        const Complex alpha(0.5, 0.0);
        const Matrix dd = fock::displacement_operator(alpha, dim);
        const Matrix y0 = dd * fock::thermal_state(0.4, dim).data * dd.adjoint();
        const auto cy0 = extract_coeffs(detector_state(y0));
        const double t = 0.8;
        const auto c_oracle =
            extract_coeffs(fock::propagate(detector_state(y0), spec, t, controls));

        const auto c_naive = charfunc::free_coeffs(cy0, t, det);
        CHECK(std::abs(c_oracle.get(2, 0) - c_naive.get(2, 0)) > 1e-3);

        // leading-feed prediction: C20(t) = -(C10(0)^2/2)(e^{m1 t} - e^{m2 t}),
        // m1 = 2 i Omega - gamma, m2 = 2 i Omega - 2 gamma
        const Complex c10_0 = cy0.get(1, 0);
        const Complex m1(-det.gamma_phase, 2.0 * det.omega);
        const Complex m2(-2.0 * det.gamma_phase, 2.0 * det.omega);
        const Complex fed =
            -0.5 * c10_0 * c10_0 * (std::exp(m1 * t) - std::exp(m2 * t));
        CHECK(std::abs(c_oracle.get(2, 0) - fed) < 1e-3);
    }
}
