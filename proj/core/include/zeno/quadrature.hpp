// quadrature.hpp — Adaptive Gauss-Kronrod 15(7) integration for real- and
// complex-valued smooth integrands, plus Gauss-Legendre node generation for
// the fixed-order tensor rules used by the oracle sweeps.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <vector>

#include "zeno/errors.hpp"

namespace zeno::quad {

namespace detail {

// Kronrod-15 abscissae (nonnegative half) and weights; embedded Gauss-7
// weights sit at the odd Kronrod indices.  QUADPACK constants.
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGK15WeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGK15WeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(std::complex<double> v) { return std::abs(v); }

template <class F, class Value>
void gk15(const F& f, double a, double b, Value& kronrod, double& error) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);

    Value resk = Value{};
    Value resg = Value{};
    for (int i = 0; i < 8; ++i) {
        const double dx = half * kGK15Nodes[i];
        Value fsum;
        if (i == 7) {
            fsum = f(mid);
        } else {
            fsum = f(mid - dx) + f(mid + dx);
        }
        resk += kGK15WeightsK[i] * fsum;
        if (i % 2 == 1) resg += kGK15WeightsG[i / 2] * fsum;
    }
    kronrod = resk * half;
    error = magnitude((resk - resg) * half);
}

} // namespace detail

template <class Value>
struct QuadResult {
    Value value{};
    double error_estimate = 0.0;
    std::size_t subdivisions = 0;
    std::size_t evaluations = 0;
};

// Globally adaptive bisection on [a, b].  Stops when the summed error
// estimate is below max(abs_tol, rel_tol * |value|); throws
// QuadratureBudgetError when max_subdivisions intervals are not enough.
template <class F>
auto integrate_adaptive(const F& f, double a, double b, double rel_tol,
                        double abs_tol, std::size_t max_subdivisions = 2000)
    -> QuadResult<decltype(f(a))> {
    using Value = decltype(f(a));
    QuadResult<Value> out;
    if (a == b) return out;

    struct Interval {
        double a, b, error;
        Value value;
    };
    auto worse = [](const Interval& x, const Interval& y) { return x.error < y.error; };
    std::priority_queue<Interval, std::vector<Interval>, decltype(worse)> queue(worse);

    Interval whole{a, b, 0.0, Value{}};
    detail::gk15(f, a, b, whole.value, whole.error);
    out.evaluations += 15;
    queue.push(whole);
    Value total = whole.value;
    double total_error = whole.error;

    while (total_error > std::max(abs_tol, rel_tol * detail::magnitude(total))) {
        if (out.subdivisions >= max_subdivisions)
            throw QuadratureBudgetError(
                "integrate_adaptive: tolerance not reached within subdivision budget (" +
                std::to_string(max_subdivisions) + " intervals)");
        Interval top = queue.top();
        queue.pop();
        const double mid = 0.5 * (top.a + top.b);
        Interval left{top.a, mid, 0.0, Value{}};
        Interval right{mid, top.b, 0.0, Value{}};
        detail::gk15(f, left.a, left.b, left.value, left.error);
        detail::gk15(f, right.a, right.b, right.value, right.error);
        out.evaluations += 30;
        total += left.value + right.value - top.value;
        total_error += left.error + right.error - top.error;
        queue.push(left);
        queue.push(right);
        ++out.subdivisions;
        // Refresh the accumulated sums once the queue is deep, to keep the
        // stopping test free of cancellation drift.
        if ((out.subdivisions & 1023u) == 0u) {
            std::vector<Interval> items;
            items.reserve(queue.size());
            while (!queue.empty()) {
                items.push_back(queue.top());
                queue.pop();
            }
            total = Value{};
            total_error = 0.0;
            for (const auto& it : items) {
                total += it.value;
                total_error += it.error;
                queue.push(it);
            }
        }
    }
    out.value = total;
    out.error_estimate = total_error;
    return out;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
// Legendre recurrence.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        if (n < 1) throw ValidationError("GaussLegendre: order must be >= 1");
        nodes.resize(n);
        weights.resize(n);
        const int m = (n + 1) / 2;
        for (int i = 0; i < m; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
    }

    // Affine map of node k onto [a, b].
    double node_on(double a, double b, int k) const {
        return 0.5 * (a + b) + 0.5 * (b - a) * nodes[k];
    }
    double weight_on(double a, double b, int k) const {
        return 0.5 * (b - a) * weights[k];
    }
};

} // namespace zeno::quad
